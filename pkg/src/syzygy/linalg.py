"""Exact rank and kernel computation over F_p for dense and sparse matrices.

The dense path is a right-looking blocked Gaussian elimination: pivots are
found panel-by-panel with ordinary int64 row operations, and the trailing
submatrix is updated with one matrix product per panel.  Products of
residues are accumulated in float64 (exact while ``inner_dim * (p-1)^2``
stays below 2^53) so the update runs on BLAS; larger moduli fall back to
chunked int64 accumulation.  All results are exact.

The sparse path is a Markowitz-style elimination on hashed rows.  Koszul
differentials start sparse but fill in quickly, so once the active
submatrix is small or dense enough it is handed to the dense kernel.

Matrices are immutable after construction; every operation returns fresh
data, and concurrent reads are safe.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field as dc_field
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .errors import ModelError
from .field import PrimeField

#: Matrices with at most this many cells are eliminated densely; larger
#: ones start on the sparse path (and may densify as they fill in).
DENSE_CELL_LIMIT = 4_000_000

_PANEL = 128
#: Densify the sparse elimination when the active block has at most this
#: many cells or its fill ratio exceeds _DENSIFY_FILL.
_DENSIFY_CELLS = DENSE_CELL_LIMIT
_DENSIFY_FILL = 0.05
_DENSIFY_MAX_PIVOTS = 512


def _matmul_mod(a: np.ndarray, b: np.ndarray, p: int) -> np.ndarray:
    """Exact (a @ b) % p for int64 matrices with entries in [0, p)."""
    k = a.shape[1]
    if k == 0:
        return np.zeros((a.shape[0], b.shape[1]), dtype=np.int64)
    limit_f64 = (1 << 53) // ((p - 1) * (p - 1)) if p > 1 else 1 << 30
    if limit_f64 >= 16:
        out = None
        step = max(1, min(k, limit_f64))
        for lo in range(0, k, step):
            part = a[:, lo:lo + step].astype(np.float64) @ \
                b[lo:lo + step, :].astype(np.float64)
            part = np.mod(part, p).astype(np.int64)
            out = part if out is None else (out + part) % p
        return out
    # Large modulus: accumulate in int64, reducing between chunks.
    step = max(1, ((1 << 63) - 1) // ((p - 1) * (p - 1)))
    out = np.zeros((a.shape[0], b.shape[1]), dtype=np.int64)
    for lo in range(0, k, step):
        out = (out + a[:, lo:lo + step] @ b[lo:lo + step, :]) % p
    return out


def _eliminate(a: np.ndarray, p: int, ncols_pivot: int | None = None,
               workers: int = 1) -> tuple[int, list[int], np.ndarray]:
    """Forward elimination; returns (rank, pivot columns, reduced matrix).

    Pivots are searched in columns [0, ncols_pivot) only; trailing columns
    are updated but never pivoted (used to carry augmented blocks along).
    Pivot choice is the first nonzero entry, so the result is deterministic.
    Pivot rows are normalized to leading 1.

    For moduli small enough that a panel-sized inner product stays below
    2^53, the whole elimination runs in float64 (exactly) so the trailing
    updates hit BLAS; otherwise everything stays in int64.
    """
    m, n = a.shape
    if ncols_pivot is None:
        ncols_pivot = n
    use_f64 = (p - 1) * (p - 1) * _PANEL <= (1 << 53)
    if use_f64:
        a = a.astype(np.float64)
    r = 0
    pivcols: list[int] = []
    col = 0
    while r < m and col < ncols_pivot:
        cend = min(col + _PANEL, ncols_pivot)
        width = cend - col
        # Work on a contiguous copy of the panel; the panel columns of
        # ``a`` are stale until written back below.  Must be a genuine
        # copy: row swaps are applied to both ``a`` and ``panel``.
        panel = a[r:, col:cend].copy()
        lbuf = np.zeros((m - r, width), dtype=a.dtype)
        npiv = 0
        rr = r
        for lc in range(width):
            colvals = panel[rr - r:, lc]
            nz = np.nonzero(colvals)[0]
            if nz.size == 0:
                continue
            pr = rr + int(nz[0])
            if pr != rr:
                a[[rr, pr], :] = a[[pr, rr], :]
                panel[[rr - r, pr - r], :] = panel[[pr - r, rr - r], :]
                lbuf[[rr - r, pr - r], :] = lbuf[[pr - r, rr - r], :]
            # Update this pivot row's trailing slice against the pivots
            # already found in this panel, then normalize the row.
            if npiv:
                lrow = lbuf[rr - r, :npiv]
                if np.any(lrow):
                    prev = a[r:r + npiv, cend:]  # pivot rows are contiguous
                    if use_f64:
                        a[rr, cend:] = np.mod(
                            a[rr, cend:] - lrow @ prev, p)
                    else:
                        a[rr, cend:] = (
                            a[rr, cend:] -
                            _matmul_mod(lrow[None, :].astype(np.int64),
                                        prev, p)[0]) % p
            inv = pow(int(panel[rr - r, lc]), p - 2, p)
            panel[rr - r, lc:] = np.mod(panel[rr - r, lc:] * inv, p)
            a[rr, cend:] = np.mod(a[rr, cend:] * inv, p)
            f = panel[rr + 1 - r:, lc].copy()
            if np.any(f):
                panel[rr + 1 - r:, lc:] = np.mod(
                    panel[rr + 1 - r:, lc:] -
                    f[:, None] * panel[rr - r, lc:], p)
            lbuf[rr + 1 - r:, npiv] = f
            npiv += 1
            pivcols.append(col + lc)
            rr += 1
            if rr == m:
                break
        a[r:, col:cend] = panel
        # One blocked update of everything right of the panel; the pivot
        # rows now sit contiguously at r..rr-1.
        if npiv and cend < n and rr < m:
            _update_trailing(a, rr, slice(r, rr),
                             lbuf[rr - r:, :npiv], cend, p, workers)
        r = rr
        col = cend
    if use_f64:
        a = a.astype(np.int64)
    return r, pivcols, a


def _update_trailing(a, rows_lo, pivot_rows, lbuf, col_lo, p, workers=1):
    """a[rows_lo:, col_lo:] -= lbuf @ a[pivot_rows, col_lo:]  (mod p)."""
    ncols = a.shape[1] - col_lo
    if ncols == 0 or lbuf.shape[1] == 0 or a.shape[0] - rows_lo == 0:
        return
    u = a[pivot_rows, col_lo:]
    if a.dtype == np.float64:
        def run_f64(lo, hi):
            a[rows_lo:, col_lo + lo:col_lo + hi] = np.mod(
                a[rows_lo:, col_lo + lo:col_lo + hi] - lbuf @ u[:, lo:hi], p)
        runner = run_f64
    else:
        def run_i64(lo, hi):
            upd = _matmul_mod(lbuf, u[:, lo:hi], p)
            a[rows_lo:, col_lo + lo:col_lo + hi] = \
                (a[rows_lo:, col_lo + lo:col_lo + hi] - upd) % p
        runner = run_i64
    if workers <= 1 or ncols < 4 * workers:
        runner(0, ncols)
        return
    # Shard the trailing columns; each stripe is an independent product,
    # so the result is identical to the serial one.
    bounds = np.linspace(0, ncols, workers + 1, dtype=int)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        list(pool.map(lambda i: runner(bounds[i], bounds[i + 1]),
                      range(workers)))


@dataclass(frozen=True)
class FieldMatrix:
    """An immutable matrix over F_p with dense or sparse storage.

    Sparse storage is a (nnz, 3) int64 array of (row, col, value) triples
    with no duplicates and no explicit zeros; dense storage is a row-major
    int64 array.  All values lie in [0, p).
    """

    rows: int
    cols: int
    field: PrimeField
    _dense: np.ndarray | None = dc_field(default=None, repr=False)
    _triples: np.ndarray | None = dc_field(default=None, repr=False)

    # -- constructors -----------------------------------------------------

    @classmethod
    def from_dense(cls, arr, field: PrimeField) -> "FieldMatrix":
        a = np.asarray(arr, dtype=np.int64) % field.p
        if a.ndim != 2:
            raise ModelError("dense matrix data must be 2-dimensional")
        a = np.ascontiguousarray(a)
        a.setflags(write=False)
        return cls(a.shape[0], a.shape[1], field, _dense=a)

    @classmethod
    def from_triples(cls, rows: int, cols: int, triples,
                     field: PrimeField) -> "FieldMatrix":
        t = np.asarray(list(triples), dtype=np.int64).reshape(-1, 3)
        if t.size:
            if t[:, 0].min() < 0 or t[:, 0].max() >= rows \
                    or t[:, 1].min() < 0 or t[:, 1].max() >= cols:
                raise ModelError("triple index out of range")
            t[:, 2] %= field.p
            t = t[t[:, 2] != 0]
            order = np.lexsort((t[:, 1], t[:, 0]))
            t = t[order]
            keys = t[:, 0] * cols + t[:, 1]
            if len(keys) > 1 and np.any(np.diff(keys) == 0):
                raise ModelError("duplicate (row, col) in sparse triples")
        t.setflags(write=False)
        return cls(rows, cols, field, _triples=t)

    @classmethod
    def zeros(cls, rows: int, cols: int, field: PrimeField) -> "FieldMatrix":
        return cls.from_triples(rows, cols, [], field)

    @classmethod
    def identity(cls, n: int, field: PrimeField) -> "FieldMatrix":
        return cls.from_triples(n, n, [(i, i, 1) for i in range(n)], field)

    # -- inspection -------------------------------------------------------

    @property
    def is_sparse(self) -> bool:
        return self._dense is None

    @property
    def nnz(self) -> int:
        if self._dense is not None:
            return int(np.count_nonzero(self._dense))
        return len(self._triples)

    def to_dense(self) -> np.ndarray:
        """Writable dense copy of the matrix."""
        if self._dense is not None:
            return self._dense.copy()
        a = np.zeros((self.rows, self.cols), dtype=np.int64)
        t = self._triples
        if len(t):
            a[t[:, 0], t[:, 1]] = t[:, 2]
        return a

    def triples(self) -> np.ndarray:
        if self._triples is not None:
            return self._triples.copy()
        r, c = np.nonzero(self._dense)
        return np.column_stack([r, c, self._dense[r, c]]).astype(np.int64)

    def transpose(self) -> "FieldMatrix":
        if self._dense is not None:
            return FieldMatrix.from_dense(self._dense.T, self.field)
        t = self.triples()
        return FieldMatrix.from_triples(
            self.cols, self.rows, np.column_stack([t[:, 1], t[:, 0], t[:, 2]]),
            self.field)

    def matmul(self, other: "FieldMatrix") -> "FieldMatrix":
        if self.cols != other.rows:
            raise ModelError("matmul shape mismatch")
        if self.field.p != other.field.p:
            raise ModelError("matmul modulus mismatch")
        prod = _matmul_mod(self.to_dense(), other.to_dense(), self.field.p)
        return FieldMatrix.from_dense(prod, self.field)

    def is_zero(self) -> bool:
        return self.nnz == 0

    # -- rank and kernel --------------------------------------------------

    def rank(self, workers: int = 1) -> int:
        """Exact rank over F_p.  The input is not mutated."""
        if self.rows == 0 or self.cols == 0:
            return 0
        cells = self.rows * self.cols
        if self.is_sparse and cells > DENSE_CELL_LIMIT:
            return self._rank_sparse(workers)
        r, _, _ = _eliminate(self.to_dense(), self.field.p,
                           workers=workers)
        return r

    def rank_parallel(self, workers: int) -> int:
        """Rank with the trailing updates sharded over ``workers`` threads.

        The count returned is identical to rank(); only the scheduling of
        the column-block updates changes.
        """
        if workers < 1:
            raise ModelError("workers must be >= 1")
        return self.rank(workers=workers)

    def kernel_basis(self) -> list[np.ndarray]:
        """A basis of the right kernel {v : M v = 0}.

        Row-reduces the transpose augmented with an identity block; the
        augmented rows whose matrix part vanishes are the kernel vectors.
        Deterministic for a given matrix.
        """
        n, m, p = self.cols, self.rows, self.field.p
        if n == 0:
            return []
        aug = np.zeros((n, m + n), dtype=np.int64)
        aug[:, :m] = self.to_dense().T
        aug[np.arange(n), m + np.arange(n)] = 1
        rank, _, aug = _eliminate(aug, p, ncols_pivot=m)
        return [aug[i, m:].copy() for i in range(rank, n)]

    # -- sparse elimination ------------------------------------------------

    def _rank_sparse(self, workers: int = 1) -> int:
        """Markowitz-style sparse elimination with a densify fallback."""
        p = self.field.p
        t = self._triples
        rows: dict[int, dict[int, int]] = {}
        for i, j, v in t:
            rows.setdefault(int(i), {})[int(j)] = int(v)
        col_rows: dict[int, set[int]] = {}
        for i, rd in rows.items():
            for j in rd:
                col_rows.setdefault(j, set()).add(i)
        rank = 0
        pivots = 0
        while col_rows:
            n_act_rows = len(rows)
            n_act_cols = len(col_rows)
            cells = n_act_rows * n_act_cols
            nnz = sum(len(rd) for rd in rows.values())
            if cells <= _DENSIFY_CELLS or nnz >= _DENSIFY_FILL * cells \
                    or pivots >= _DENSIFY_MAX_PIVOTS:
                rank += self._densify_rank(rows, col_rows, p, workers)
                return rank
            # Approximate Markowitz: scarcest column, then shortest row.
            c0 = min(col_rows, key=lambda c: (len(col_rows[c]), c))
            r0 = min(col_rows[c0], key=lambda r: (len(rows[r]), r))
            prow = rows.pop(r0)
            inv = pow(prow[c0], p - 2, p)
            for j in list(prow):
                prow[j] = prow[j] * inv % p
                col_rows[j].discard(r0)
                if not col_rows[j]:
                    del col_rows[j]
            touched = col_rows.pop(c0, set())
            for r in touched:
                rd = rows[r]
                f = rd.pop(c0)
                for j, v in prow.items():
                    if j == c0:
                        continue
                    nv = (rd.get(j, 0) - f * v) % p
                    if nv:
                        if j not in rd:
                            col_rows.setdefault(j, set()).add(r)
                        rd[j] = nv
                    elif j in rd:
                        del rd[j]
                        cr = col_rows.get(j)
                        if cr is not None:
                            cr.discard(r)
                            if not cr:
                                del col_rows[j]
                if not rd:
                    del rows[r]
            rank += 1
            pivots += 1
        return rank

    def _densify_rank(self, rows, col_rows, p, workers) -> int:
        row_ids = sorted(rows)
        col_ids = sorted(col_rows)
        cmap = {c: k for k, c in enumerate(col_ids)}
        a = np.zeros((len(row_ids), len(col_ids)), dtype=np.int64)
        for k, r in enumerate(row_ids):
            for j, v in rows[r].items():
                a[k, cmap[j]] = v
        r, _, _ = _eliminate(a, p, workers=workers)
        return r

    # -- SMS-style text dump ------------------------------------------------

    def dump_sms(self, fileobj) -> None:
        """Write the matrix as text triples.

        Format: a header line ``rows cols p`` followed by one ``i j v``
        line per structural nonzero, 1-indexed, sorted by (i, j).
        """
        close = False
        if isinstance(fileobj, (str, bytes)):
            fileobj, close = open(fileobj, "w"), True
        try:
            fileobj.write(f"{self.rows} {self.cols} {self.field.p}\n")
            for i, j, v in self.triples():
                fileobj.write(f"{i + 1} {j + 1} {v}\n")
        finally:
            if close:
                fileobj.close()

    @classmethod
    def load_sms(cls, fileobj) -> "FieldMatrix":
        close = False
        if isinstance(fileobj, (str, bytes)):
            fileobj, close = open(fileobj), True
        try:
            header = fileobj.readline().split()
            if len(header) != 3:
                raise ModelError("bad SMS header")
            rows, cols, p = (int(x) for x in header)
            triples = []
            for line in fileobj:
                parts = line.split()
                if not parts:
                    continue
                i, j, v = int(parts[0]), int(parts[1]), int(parts[2])
                triples.append((i - 1, j - 1, v))
            return cls.from_triples(rows, cols, triples, PrimeField(p))
        finally:
            if close:
                fileobj.close()

    def dumps_sms(self) -> str:
        buf = io.StringIO()
        self.dump_sms(buf)
        return buf.getvalue()


def rank(m: FieldMatrix) -> int:
    return m.rank()


def kernel_basis(m: FieldMatrix) -> list[np.ndarray]:
    return m.kernel_basis()


def rank_parallel(m: FieldMatrix, workers: int) -> int:
    return m.rank_parallel(workers)


def solve_in_span(basis: np.ndarray, vector: np.ndarray,
                  field: PrimeField) -> np.ndarray | None:
    """Coordinates of ``vector`` in the row span of ``basis``, or None.

    ``basis`` is (k, n) with independent rows.  Eliminates the transpose of
    the stacked system once; intended for repeated small solves go through
    SpanSolver instead.
    """
    return SpanSolver(basis, field).solve(vector)


class SpanSolver:
    """Repeated exact solves of x @ basis = vector for a fixed basis.

    Precomputes an elimination of [basis | I] so each solve is a single
    substitution pass.
    """

    def __init__(self, basis: np.ndarray, field: PrimeField):
        self.field = field
        basis = np.asarray(basis, dtype=np.int64) % field.p
        self.k, self.n = basis.shape
        aug = np.concatenate(
            [basis, np.eye(self.k, dtype=np.int64)], axis=1)
        rank, pivcols, aug = _eliminate(aug, field.p,
                                        ncols_pivot=self.n)
        if rank != self.k:
            raise ModelError("span basis is not independent")
        self._red = aug
        self._pivcols = pivcols

    def solve(self, vector: np.ndarray) -> np.ndarray | None:
        """Coordinates over the basis rows, or None if not in the span."""
        p = self.field.p
        v = np.asarray(vector, dtype=np.int64) % p
        coeff = np.zeros(self.k, dtype=np.int64)
        for i, c in enumerate(self._pivcols):
            f = int(v[c])
            if f:
                coeff[i] = f
                v = (v - f * self._red[i, :self.n]) % p
        if np.any(v):
            return None
        # coeff solves against the reduced rows; map back through the
        # recorded identity block.
        return coeff @ self._red[:, self.n:] % p
