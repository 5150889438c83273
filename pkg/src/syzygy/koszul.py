"""Assembly of the three-term Koszul complex and graded Betti tables.

For a line bundle L with c = h^0(L) and an auxiliary bundle M, the weight-q
strand of the Koszul complex is

    Wedge^{p+1} V (x) B_prev  --d1-->  Wedge^p V (x) B_cur
                              --d2-->  Wedge^{p-1} V (x) B_next

with V = H^0(L), B_prev = H^0(L^{q-1} (x) M), B_cur = H^0(L^q (x) M),
B_next = H^0(L^{q+1} (x) M).  The differential sends a basis wedge w (x) s
to the signed sum over deletions, multiplying the deleted section into the
coefficient: d(w (x) s) = sum_i (-1)^i (w \\ w_i) (x) (v_{w_i} * s).

The Koszul cohomology dimension at (p, q) is computed exactly over F_p as

    dim K_{p,q} = r2 * C(c, p) - rank(d2) - rank(d1),

which is the graded Betti number b_{p,q} of the section module.  Betti
numbers over a finite field bound the characteristic-zero values from
above (rank is lower semicontinuous), so vanishing statements verified
here are conclusive while nonvanishing ones hold for the sampled model.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field as dc_field
from math import comb
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .errors import ModelError, ResourceCapError
from .field import PrimeField
from .linalg import FieldMatrix
from .wedge import iter_subsets_colex, subset_rank, wedge_delete

#: Abort (with a sizing report) rather than build any differential whose
#: dense image would exceed this many bytes.
MEMORY_CAP_BYTES = 8 * 2**30

_INT64_MAX = 2**63 - 1


def _checked_binom(n: int, k: int) -> int:
    v = comb(n, k) if 0 <= k <= n else 0
    if v > _INT64_MAX:
        raise ResourceCapError(v, 1, MEMORY_CAP_BYTES)
    return v


@dataclass(frozen=True)
class GradedStrand:
    """Labeled section bases in three consecutive twists plus the bilinear
    multiplication tables feeding the Koszul differentials.

    mult_prev[i] is the (r1, r2) matrix of multiplication by the i-th basis
    vector of V from B_prev into B_cur; mult_cur[i] is the (r2, r3) matrix
    from B_cur into B_next.  Tables must commute in the sense that
    multiplying by v_i then v_j equals v_j then v_i (the section ring is
    commutative); d2 . d1 = 0 is equivalent to it.
    """

    field: PrimeField
    v_labels: tuple
    prev_labels: tuple
    cur_labels: tuple
    next_labels: tuple
    mult_prev: np.ndarray  # (c, r1, r2)
    mult_cur: np.ndarray   # (c, r2, r3)

    def __post_init__(self):
        c = len(self.v_labels)
        r1, r2, r3 = len(self.prev_labels), len(self.cur_labels), \
            len(self.next_labels)
        if self.mult_prev.shape != (c, r1, r2):
            raise ModelError(
                f"mult_prev shape {self.mult_prev.shape} != {(c, r1, r2)}")
        if self.mult_cur.shape != (c, r2, r3):
            raise ModelError(
                f"mult_cur shape {self.mult_cur.shape} != {(c, r2, r3)}")

    @property
    def c(self) -> int:
        return len(self.v_labels)

    @property
    def dims(self) -> tuple[int, int, int]:
        return (len(self.prev_labels), len(self.cur_labels),
                len(self.next_labels))

    def validate_commutativity(self) -> None:
        """Check v_i * (v_j * s) = v_j * (v_i * s) on all of B_prev."""
        p = self.field.p
        c = self.c
        for i in range(c):
            for j in range(i + 1, c):
                ij = self.mult_prev[i] @ self.mult_cur[j] % p
                ji = self.mult_prev[j] @ self.mult_cur[i] % p
                if np.any(ij != ji):
                    raise ModelError(
                        f"multiplication tables do not commute at ({i},{j})")


def _cap_check(rows: int, cols: int) -> None:
    if rows * cols * 8 > MEMORY_CAP_BYTES:
        raise ResourceCapError(rows, cols, MEMORY_CAP_BYTES)


def build_differential_in(strand: GradedStrand, p: int) -> FieldMatrix:
    """Matrix of d1 : Wedge^{p+1} V (x) B_prev -> Wedge^p V (x) B_cur.

    Rows are indexed by (colex wedge rank, B_cur index), columns by
    (colex wedge rank, B_prev index); both in wedge-major order.
    """
    if p < 0:
        raise ModelError("p must be >= 0")
    c = strand.c
    r1, r2, _ = strand.dims
    rows = _checked_binom(c, p) * r2
    cols = _checked_binom(c, p + 1) * r1
    _cap_check(rows, cols)
    mod = strand.field.p
    a = np.zeros((rows, cols), dtype=np.int64)
    if rows and cols:
        for wr, subset in enumerate(iter_subsets_colex(p + 1, c)):
            col0 = wr * r1
            for pos in range(p + 1):
                sign, sub = wedge_delete(subset, pos)
                row0 = subset_rank(sub) * r2
                block = strand.mult_prev[subset[pos]].T  # (r2, r1)
                if sign > 0:
                    a[row0:row0 + r2, col0:col0 + r1] += block
                else:
                    a[row0:row0 + r2, col0:col0 + r1] -= block
        a %= mod
    return FieldMatrix.from_dense(a, strand.field)


def build_differential_out(strand: GradedStrand, p: int) -> FieldMatrix:
    """Matrix of d2 : Wedge^p V (x) B_cur -> Wedge^{p-1} V (x) B_next."""
    if p < 1:
        raise ModelError("p must be >= 1 for the outgoing differential")
    c = strand.c
    _, r2, r3 = strand.dims
    rows = _checked_binom(c, p - 1) * r3
    cols = _checked_binom(c, p) * r2
    _cap_check(rows, cols)
    mod = strand.field.p
    a = np.zeros((rows, cols), dtype=np.int64)
    if rows and cols:
        for wr, subset in enumerate(iter_subsets_colex(p, c)):
            col0 = wr * r2
            for pos in range(p):
                sign, sub = wedge_delete(subset, pos)
                row0 = subset_rank(sub) * r3
                block = strand.mult_cur[subset[pos]].T  # (r3, r2)
                if sign > 0:
                    a[row0:row0 + r3, col0:col0 + r2] += block
                else:
                    a[row0:row0 + r3, col0:col0 + r2] -= block
        a %= mod
    return FieldMatrix.from_dense(a, strand.field)


def koszul_dim(strand: GradedStrand, p: int, workers: int = 1) -> int:
    """dim K_{p,q} = r2 * C(c,p) - rank(d2) - rank(d1), exactly."""
    c = strand.c
    _, r2, _ = strand.dims
    middle = _checked_binom(c, p) * r2
    if middle == 0:
        return 0
    rank_in = build_differential_in(strand, p).rank(workers=workers)
    rank_out = 0
    if p >= 1:
        rank_out = build_differential_out(strand, p).rank(workers=workers)
    dim = middle - rank_in - rank_out
    if dim < 0:
        raise ModelError(
            f"negative Koszul dimension at p={p}: the strand is malformed "
            f"(middle={middle}, rank_in={rank_in}, rank_out={rank_out})")
    return dim


@dataclass
class BettiTable:
    """Graded Betti numbers b_{p,q} = dim K_{p,q} for q in a fixed range.

    entries maps (p, q) to the computed dimension; the two interesting
    rows are q = 1 (linear strand) and q = 2 (quadratic strand), with the
    q = 0 and q = 3 corners kept for Euler-characteristic bookkeeping.
    """

    p_max: int
    modulus: int
    model: dict
    entries: dict = dc_field(default_factory=dict)
    q_range: tuple = (0, 1, 2, 3)

    def get(self, p: int, q: int) -> int | None:
        return self.entries.get((p, q))

    def row(self, q: int) -> list[int]:
        return [self.entries.get((p, q), 0) for p in range(self.p_max + 1)]

    def to_json_dict(self) -> dict:
        return {
            "p_max": self.p_max,
            "modulus": self.modulus,
            "rows": {str(q): self.row(q) for q in self.q_range},
            "model": self.model,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True)

    def to_text(self) -> str:
        """Aligned text table: one column per p, one row per q."""
        width = max(
            [5] + [len(str(v)) for v in self.entries.values()]) + 1
        header = "  q\\p" + "".join(
            str(p).rjust(width) for p in range(self.p_max + 1))
        lines = [header]
        for q in self.q_range:
            cells = []
            for p in range(self.p_max + 1):
                v = self.entries.get((p, q))
                cells.append(("." if v == 0 else str(v)).rjust(width)
                             if v is not None else "?".rjust(width))
            lines.append(f"  {q}  " + "".join(cells))
        return "\n".join(lines)


@dataclass(frozen=True)
class StrandInvariants:
    """Lengths and extremal values of the linear and quadratic strands."""

    l1: int | None
    l2: int | None
    b1: int | None
    b2: int | None


def strand_invariants(table: BettiTable) -> StrandInvariants:
    """l1 = max{p > 0 : b_{p,1} != 0}, l2 = min{p > 0 : b_{p,2} != 0},
    with the extremal Betti numbers b1 = b_{l1,1} and b2 = b_{l2,2}.
    Absent rows give None."""
    ones = [p for p in range(1, table.p_max + 1)
            if table.entries.get((p, 1), 0) != 0]
    twos = [p for p in range(1, table.p_max + 1)
            if table.entries.get((p, 2), 0) != 0]
    l1 = max(ones) if ones else None
    l2 = min(twos) if twos else None
    return StrandInvariants(
        l1=l1, l2=l2,
        b1=table.entries[(l1, 1)] if l1 is not None else None,
        b2=table.entries[(l2, 2)] if l2 is not None else None)


def betti_table(model, bundle, max_p: int, q_range=(0, 1, 2, 3),
                jobs: int = 1) -> BettiTable:
    """Full table of dim K_{p,q}(model, bundle) for 0 <= p <= max_p.

    One strand is built per q (three consecutive section spaces); the
    (p, q) cells are independent rank computations and may be evaluated
    concurrently when jobs > 1.
    """
    q_range = tuple(q_range)
    strands = {q: model.strand(bundle, q) for q in q_range}
    table = BettiTable(p_max=max_p, modulus=model.field.p,
                       model=model.describe(), q_range=q_range)
    cells = [(p, q) for q in q_range for p in range(max_p + 1)]
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            dims = list(pool.map(
                lambda pq: koszul_dim(strands[pq[1]], pq[0]), cells))
        for (p, q), d in zip(cells, dims):
            table.entries[(p, q)] = d
    else:
        for p, q in cells:
            table.entries[(p, q)] = koszul_dim(strands[q], p)
    return table


def euler_characteristics(table: BettiTable, h0_of_power, c: int
                          ) -> list[tuple]:
    """Antidiagonal alternating sums of the table against the Hilbert
    function of the section module.

    With c = h^0(L) variables and H(t) = sum_m h^0(L^m M) t^m, the minimal
    free resolution forces, for every n >= 1,

        sum_q (-1)^q b_{n-q, q} = (-1)^n [t^n] (H(t) (1-t)^c).

    ``h0_of_power(m)`` must return h^0(L^m M) for m >= 0 (0 for m < 0,
    handled here).  Returns (n, lhs, rhs) triples for every n whose full
    antidiagonal lies inside the computed table; the two numbers are
    computed from independent data (ranks vs. section counts) and must
    agree.
    """
    out = []
    for n in range(1, table.p_max + 2):
        # Need b_{n-q, q} for all q in 0..3 (higher weights vanish in the
        # two-strand situations this engine computes).
        cells = [(n - q, q) for q in range(4) if n - q >= 0]
        if any(q not in table.q_range or p > table.p_max
               for p, q in cells):
            continue
        lhs = sum((-1) ** q * table.entries[(p, q)] for p, q in cells)
        rhs = sum((-1) ** j * comb(c, j) *
                  (h0_of_power(n - j) if n - j >= 0 else 0)
                  for j in range(0, min(n, c) + 1))
        out.append((n, (-1) ** n * lhs, rhs))
    return out
