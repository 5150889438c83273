"""Hyperelliptic curves y^2 = f(x) with deg f = 2h + 1 over F_p.

The odd-degree model has a single point at infinity; x has pole order 2
there and y has pole order 2h + 1, so the Riemann-Roch space of m * Pinf
is spanned by the monomials {x^i : 2i <= m} and {x^j y : 2j + 2h+1 <= m}.
The genus-0 member (h = 0, f linear) is the projective line in the same
clothing and serves as the rational-bridge component of nodal curves.

Arbitrary divisors D = m * Pinf + sum n_i P_i with affine non-Weierstrass
support are handled by clearing denominators: a section is g / u where u
is a monic product of (x - a)^c over the support x-coordinates and g runs
through a Riemann-Roch space of Pinf-multiples cut out by vanishing
conditions at conjugate points.  Vanishing orders are imposed through
exact power-series expansions along the curve.  Values of sections at
points of the divisor support are taken in the local trivialization
(phi * t^{n_P})(P), which is multiplicative across tensor powers; nodal
gluing relies on that.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..errors import ModelError
from ..field import PrimeField
from ..koszul import GradedStrand
from ..linalg import FieldMatrix, SpanSolver


# -- dense univariate polynomial helpers (coefficient lists, low -> high) --

def poly_trim(a: np.ndarray) -> np.ndarray:
    nz = np.nonzero(a)[0]
    return a[:nz[-1] + 1] if nz.size else a[:0]

def poly_mul(a: np.ndarray, b: np.ndarray, p: int) -> np.ndarray:
    if len(a) == 0 or len(b) == 0:
        return np.zeros(0, dtype=np.int64)
    return np.convolve(a, b) % p

def poly_add(a: np.ndarray, b: np.ndarray, p: int) -> np.ndarray:
    n = max(len(a), len(b))
    out = np.zeros(n, dtype=np.int64)
    out[:len(a)] += a
    out[:len(b)] += b
    return out % p

def poly_eval(a: np.ndarray, x: int, p: int) -> int:
    acc = 0
    for c in a[::-1]:
        acc = (acc * x + int(c)) % p
    return acc

def poly_deriv(a: np.ndarray, p: int) -> np.ndarray:
    if len(a) <= 1:
        return np.zeros(0, dtype=np.int64)
    return (a[1:] * np.arange(1, len(a), dtype=np.int64)) % p

def poly_gcd(a: np.ndarray, b: np.ndarray, p: int) -> np.ndarray:
    a, b = poly_trim(a % p), poly_trim(b % p)
    while len(b):
        a = poly_rem(a, b, p)
        a, b = b, a
    return a

def poly_rem(a: np.ndarray, b: np.ndarray, p: int) -> np.ndarray:
    a = poly_trim(a.copy() % p)
    b = poly_trim(b % p)
    if len(b) == 0:
        raise ZeroDivisionError("polynomial division by zero")
    inv = pow(int(b[-1]), p - 2, p)
    while len(a) >= len(b):
        f = int(a[-1]) * inv % p
        if f:
            a[len(a) - len(b):] = (a[len(a) - len(b):] - f * b) % p
        a = poly_trim(a[:-1])
    return a

def poly_shift_trunc(a: np.ndarray, x0: int, order: int, p: int
                     ) -> np.ndarray:
    """a(x0 + t) mod t^order, by Horner in truncated arithmetic."""
    out = np.zeros(order, dtype=np.int64)
    for c in a[::-1]:
        # out = out * (x0 + t) + c
        shifted = np.zeros(order, dtype=np.int64)
        shifted[1:] = out[:order - 1]
        out = (out * x0 + shifted) % p
        out[0] = (out[0] + int(c)) % p
    return out


# -- curve elements A(x) + B(x) y ------------------------------------------

@dataclass(frozen=True)
class Elem:
    """An element of F_p[x, y] / (y^2 - f(x)) in reduced form."""

    a: tuple  # coefficients of the y^0 part
    b: tuple  # coefficients of the y^1 part

    @classmethod
    def make(cls, a, b) -> "Elem":
        return cls(tuple(int(v) for v in poly_trim(np.asarray(
            a, dtype=np.int64))), tuple(int(v) for v in poly_trim(
                np.asarray(b, dtype=np.int64))))

@dataclass(frozen=True)
class Divisor:
    """m_inf * Pinf + sum of (affine point, multiplicity).

    Affine points are (x, y) pairs on the curve with y != 0; Weierstrass
    points and the point at infinity may not carry affine multiplicities
    (the harness never needs them in divisor support).
    """

    m_inf: int = 0
    affine: tuple = ()  # sorted tuple of ((x, y), mult), mult != 0

    @classmethod
    def make(cls, m_inf: int = 0, affine=()) -> "Divisor":
        acc: dict[tuple, int] = {}
        for pt, n in affine:
            pt = (int(pt[0]), int(pt[1]))
            acc[pt] = acc.get(pt, 0) + int(n)
        items = tuple(sorted((pt, n) for pt, n in acc.items() if n != 0))
        return cls(int(m_inf), items)

    @property
    def degree(self) -> int:
        return self.m_inf + sum(n for _, n in self.affine)

    def __add__(self, other: "Divisor") -> "Divisor":
        return Divisor.make(self.m_inf + other.m_inf,
                            self.affine + other.affine)

    def scale(self, k: int) -> "Divisor":
        return Divisor.make(self.m_inf * k,
                            tuple((pt, n * k) for pt, n in self.affine))

    def coefficient(self, point: tuple) -> int:
        for pt, n in self.affine:
            if pt == point:
                return n
        return 0

    def describe(self) -> dict:
        return {"m_inf": self.m_inf,
                "points": [[pt[0], pt[1], n] for pt, n in self.affine]}


@dataclass(frozen=True)
class DivisorBundle:
    """Bundle data for a strand: the embedding bundle L and twist M."""

    L: Divisor
    M: Divisor = Divisor()

    def level(self, n: int) -> Divisor:
        return self.L.scale(n) + self.M


class SectionSpace:
    """H^0 of a divisor, as numerators over a fixed monic denominator.

    basis is a (dim, ambient_dim) matrix of numerator coordinates over the
    monomial basis of H^0(N * Pinf); denom lists (x-coordinate, exponent)
    pairs of the denominator u = prod (x - a)^c.
    """

    def __init__(self, model: "HyperellipticModel", divisor: Divisor):
        self.model = model
        self.divisor = divisor
        p = model.field.p
        groups: dict[int, list[tuple[tuple, int]]] = {}
        for pt, n in divisor.affine:
            if pt[1] == 0:
                raise ModelError(
                    "Weierstrass points in divisor support are not "
                    f"supported: {pt}")
            if poly_eval(model.f_arr, pt[0], p) != (pt[1] * pt[1]) % p:
                raise ModelError(f"point {pt} does not lie on the curve")
            groups.setdefault(pt[0], []).append((pt, n))
        denom = []
        conditions = []  # (point, required vanishing order)
        for a in sorted(groups):
            pts = dict(groups[a])
            c_a = max(0, max(n for n in pts.values()))
            if c_a > 0:
                denom.append((a, c_a))
            for pt, n in pts.items():
                if c_a - n > 0:
                    conditions.append((pt, c_a - n))
            # The conjugate of a supported point needs full vanishing
            # unless it is itself in the support.
            for pt in list(pts):
                cj = (pt[0], (-pt[1]) % p)
                if cj not in pts and c_a > 0:
                    conditions.append((cj, c_a))
        self.denom = tuple(denom)
        du = sum(c for _, c in denom)
        self.N = divisor.m_inf + 2 * du
        self.ambient = model.ambient_basis(self.N)
        amb_dim = len(self.ambient)
        rows = []
        for pt, order in sorted(conditions):
            series = model.series_rows(self.ambient, pt, order)
            rows.extend(series)
        if rows:
            cond = FieldMatrix.from_dense(np.array(rows, dtype=np.int64),
                                          model.field)
            kb = cond.kernel_basis()
            basis = np.array(kb, dtype=np.int64).reshape(-1, amb_dim)
        else:
            basis = np.eye(amb_dim, dtype=np.int64)
        self.basis = basis
        if divisor.degree > 2 * model.h - 2:
            expect = divisor.degree - model.h + 1
            if self.dim != max(0, expect):
                raise ModelError(
                    f"Riemann-Roch failure: divisor {divisor} of degree "
                    f"{divisor.degree} gave h^0 = {self.dim}, "
                    f"expected {expect}")

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    def numerator(self, coords: np.ndarray) -> Elem:
        vec = (np.asarray(coords, dtype=np.int64) % self.model.field.p
               ) @ self.basis % self.model.field.p
        return self.model.from_ambient(self.ambient, vec)

    def value_rows(self, point: tuple) -> np.ndarray:
        """Trivialized values of the basis sections at an affine point."""
        p = self.model.field.p
        a = point[0]
        c_a = dict(self.denom).get(a, 0)
        n_pt = self.divisor.coefficient(point)
        order = c_a - n_pt
        if order < 0:
            raise ModelError("section space inconsistent at evaluation")
        rest = 1
        for aa, cc in self.denom:
            if aa != a:
                rest = rest * pow((a - aa) % p, cc, p) % p
        rest_inv = pow(rest, p - 2, p)
        series = self.model.series_rows(self.ambient, point, order + 1)
        lead = np.array(series[order], dtype=np.int64)
        return self.basis @ lead % p * rest_inv % p


class HyperellipticModel:
    """y^2 = f(x), deg f = 2h + 1 squarefree; genus h, one point Pinf."""

    def __init__(self, h: int, f_coeffs, field: PrimeField):
        self.h = int(h)
        self.field = field
        f = np.asarray([c % field.p for c in f_coeffs], dtype=np.int64)
        f = poly_trim(f)
        if len(f) != 2 * self.h + 2:
            raise ModelError(
                f"f must have degree {2 * self.h + 1}, got degree "
                f"{len(f) - 1}")
        g = poly_gcd(f, poly_deriv(f, field.p), field.p)
        if len(g) > 1:
            raise ModelError("f is not squarefree over F_p")
        self.f = tuple(int(c) for c in f)
        self.f_arr = f
        self._space_cache: dict[Divisor, SectionSpace] = {}
        self._mult_cache: dict = {}

    # -- model identity ----------------------------------------------------

    @property
    def genus(self) -> int:
        return self.h

    @property
    def gonality(self) -> int:
        return 2 if self.h >= 2 else 1

    def describe(self) -> dict:
        return {"type": "hyperelliptic", "h": self.h, "f": list(self.f),
                "p": self.field.p}

    def canonical_divisor(self) -> Divisor:
        return Divisor.make(2 * self.h - 2)

    def pencil_divisor(self) -> Divisor:
        """The degree-2 pencil |2 Pinf| (for h >= 1; x is the map)."""
        return Divisor.make(2)

    @classmethod
    def random(cls, h: int, field: PrimeField, rng,
               rational_weierstrass: bool = False) -> "HyperellipticModel":
        """A random squarefree model; seeds recorded by the caller.

        With rational_weierstrass, f is forced to have a root in F_p so
        the curve has a rational branch point of the hyperelliptic map.
        """
        p = field.p
        for _ in range(64):
            deg = 2 * h + 1
            coeffs = [int(rng.integers(0, p)) for _ in range(deg)] + [1]
            if rational_weierstrass:
                root = int(rng.integers(0, p))
                # f = (x - root) * monic random of degree 2h
                rest = [int(rng.integers(0, p)) for _ in range(2 * h)] + [1]
                fa = poly_mul(np.array([-root % p, 1], dtype=np.int64),
                              np.array(rest, dtype=np.int64), p)
                coeffs = [int(c) for c in fa]
            try:
                return cls(h, coeffs, field)
            except ModelError:
                continue
        raise ModelError(f"no squarefree f of degree {2*h+1} found")

    # -- ambient Riemann-Roch spaces of Pinf multiples ----------------------

    @lru_cache(maxsize=None)
    def ambient_basis(self, N: int) -> tuple:
        """Monomials of H^0(N * Pinf): x-powers then y x-powers, ascending.

        Each monomial is (exponent of x, flag y); pole orders 2i and
        2j + 2h + 1 are pairwise distinct.
        """
        if N < 0:
            return ()
        mons = [(i, 0) for i in range(N // 2 + 1)]
        ytop = (N - (2 * self.h + 1)) // 2
        mons += [(j, 1) for j in range(ytop + 1)]
        return tuple(mons)

    def from_ambient(self, ambient: tuple, vec: np.ndarray) -> Elem:
        amax = max((i for i, fy in ambient if fy == 0), default=-1)
        bmax = max((i for i, fy in ambient if fy == 1), default=-1)
        a = np.zeros(amax + 1, dtype=np.int64)
        b = np.zeros(bmax + 1, dtype=np.int64)
        for (i, fy), v in zip(ambient, vec):
            (b if fy else a)[i] = v
        return Elem.make(a, b)

    def to_ambient(self, ambient: tuple, elem: Elem) -> np.ndarray:
        out = np.zeros(len(ambient), dtype=np.int64)
        index = {m: k for k, m in enumerate(ambient)}
        for i, c in enumerate(elem.a):
            if c:
                if (i, 0) not in index:
                    raise ModelError("element does not fit ambient space")
                out[index[(i, 0)]] = c
        for i, c in enumerate(elem.b):
            if c:
                if (i, 1) not in index:
                    raise ModelError("element does not fit ambient space")
                out[index[(i, 1)]] = c
        return out

    def elem_mul(self, e1: Elem, e2: Elem) -> Elem:
        p = self.field.p
        a1, b1 = np.array(e1.a, dtype=np.int64), np.array(e1.b,
                                                          dtype=np.int64)
        a2, b2 = np.array(e2.a, dtype=np.int64), np.array(e2.b,
                                                          dtype=np.int64)
        aa = poly_mul(a1, a2, p)
        bb = poly_mul(b1, b2, p)
        if len(bb):
            aa = poly_add(aa, poly_mul(bb, self.f_arr, p), p)
        ab = poly_add(poly_mul(a1, b2, p), poly_mul(a2, b1, p), p)
        return Elem.make(aa, ab)

    # -- local expansions ----------------------------------------------------

    def y_series(self, point: tuple, order: int) -> np.ndarray:
        """Power series of y in t = x - x0 at a non-Weierstrass point."""
        p = self.field.p
        x0, y0 = point
        if y0 % p == 0:
            raise ModelError("no series expansion at a Weierstrass point")
        F = poly_shift_trunc(self.f_arr, x0, order, p)
        c = np.zeros(order, dtype=np.int64)
        c[0] = y0 % p
        inv2y = pow(2 * y0 % p, p - 2, p)
        for m in range(1, order):
            s = int(sum(c[i] * c[m - i] for i in range(1, m)) % p)
            c[m] = (int(F[m]) - s) * inv2y % p
        return c

    def series_rows(self, ambient: tuple, point: tuple, order: int
                    ) -> list[np.ndarray]:
        """Row r = the t^r coefficients of every ambient monomial at point.

        Used both to impose vanishing orders and to read trivialized
        leading values.
        """
        p = self.field.p
        if order <= 0:
            return []
        x0 = point[0]
        ys = self.y_series(point, order)
        # x^i series: (x0 + t)^i; build iteratively.
        rows = np.zeros((order, len(ambient)), dtype=np.int64)
        xi = np.zeros(order, dtype=np.int64)
        xi[0] = 1
        powers = {}
        maxi = max(i for i, _ in ambient)
        cur = xi
        powers[0] = cur
        shift = np.array([x0, 1], dtype=np.int64)
        for i in range(1, maxi + 1):
            nxt = poly_mul(cur, shift, p)[:order]
            full = np.zeros(order, dtype=np.int64)
            full[:len(nxt)] = nxt
            powers[i] = full
            cur = full
        for k, (i, fy) in enumerate(ambient):
            ser = powers[i]
            if fy:
                ser = poly_mul(ser, ys, p)[:order]
                full = np.zeros(order, dtype=np.int64)
                full[:len(ser)] = ser
                ser = full
            rows[:, k] = ser
        return [rows[r] for r in range(order)]

    # -- section spaces and multiplication -----------------------------------

    def section_space(self, divisor: Divisor) -> SectionSpace:
        if divisor not in self._space_cache:
            self._space_cache[divisor] = SectionSpace(self, divisor)
        return self._space_cache[divisor]

    def h0(self, divisor: Divisor) -> int:
        return self.section_space(divisor).dim

    def multiplication_table(self, s1: SectionSpace, s2: SectionSpace
                             ) -> np.ndarray:
        """Tensor (dim1, dim2, dim3) of products into the space of the sum
        divisor; raises if a product fails to land in the target."""
        key = (s1.divisor, s2.divisor)
        if key in self._mult_cache:
            return self._mult_cache[key]
        p = self.field.p
        s3 = self.section_space(s1.divisor + s2.divisor)
        # Slack between denominators: u1 u2 = u3 * w with w monic in x.
        d1, d2, d3 = dict(s1.denom), dict(s2.denom), dict(s3.denom)
        w = np.array([1], dtype=np.int64)
        for a in set(d1) | set(d2) | set(d3):
            slack = d1.get(a, 0) + d2.get(a, 0) - d3.get(a, 0)
            if slack < 0:
                raise ModelError("denominator bookkeeping failed")
            for _ in range(slack):
                w = poly_mul(w, np.array([-a % p, 1], dtype=np.int64), p)
        big = self.ambient_basis(s1.N + s2.N)
        w_elem = Elem.make(w, ())
        target = np.zeros((s3.dim, len(big)), dtype=np.int64)
        for k in range(s3.dim):
            e = self.elem_mul(s3.numerator(np.eye(s3.dim, dtype=np.int64)[k]),
                              w_elem)
            target[k] = self.to_ambient(big, e)
        solver = SpanSolver(target, self.field)
        table = np.zeros((s1.dim, s2.dim, s3.dim), dtype=np.int64)
        eye1 = np.eye(s1.dim, dtype=np.int64)
        eye2 = np.eye(s2.dim, dtype=np.int64)
        nums1 = [s1.numerator(eye1[i]) for i in range(s1.dim)]
        nums2 = [s2.numerator(eye2[j]) for j in range(s2.dim)]
        for i in range(s1.dim):
            for j in range(s2.dim):
                prod = self.elem_mul(nums1[i], nums2[j])
                coords = solver.solve(self.to_ambient(big, prod))
                if coords is None:
                    raise ModelError(
                        "product of sections not expressible in the target "
                        f"basis: {s1.divisor} * {s2.divisor}")
                table[i, j] = coords
        self._mult_cache[key] = table
        return table

    def multiply(self, s1: SectionSpace, coords1, s2: SectionSpace, coords2
                 ) -> np.ndarray:
        """Product of two explicit sections, in the sum-divisor basis."""
        p = self.field.p
        table = self.multiplication_table(s1, s2)
        v1 = np.asarray(coords1, dtype=np.int64) % p
        v2 = np.asarray(coords2, dtype=np.int64) % p
        return np.einsum("i,ijk,j->k", v1, table, v2) % p

    # -- strands -------------------------------------------------------------

    def strand(self, bundle: DivisorBundle, q: int) -> GradedStrand:
        """Koszul strand of (L, M) at weight q."""
        sv = self.section_space(bundle.L)
        sp = self.section_space(bundle.level(q - 1))
        sc = self.section_space(bundle.level(q))
        sn = self.section_space(bundle.level(q + 1))
        c = sv.dim
        mp = np.zeros((c, sp.dim, sc.dim), dtype=np.int64)
        mc = np.zeros((c, sc.dim, sn.dim), dtype=np.int64)
        if sp.dim:
            mp[:] = self.multiplication_table(sv, sp)
        if sc.dim and sn.dim:
            mc[:] = self.multiplication_table(sv, sc)
        return GradedStrand(
            self.field,
            tuple(f"v{i}" for i in range(c)),
            tuple(f"a{i}" for i in range(sp.dim)),
            tuple(f"b{i}" for i in range(sc.dim)),
            tuple(f"c{i}" for i in range(sn.dim)),
            mp, mc)

    # -- point sampling ------------------------------------------------------

    def point_from_x(self, x: int, rng=None) -> tuple | None:
        """A point (x, y) over x, or None; picks the sign via rng."""
        p = self.field.p
        fx = poly_eval(self.f_arr, x, p)
        y = self.field.sqrt(fx)
        if y is None:
            return None
        if y != 0 and rng is not None and int(rng.integers(0, 2)):
            y = (-y) % p
        return (x % p, y)

    def random_points(self, count: int, rng, avoid_x=(),
                      allow_weierstrass: bool = False) -> list[tuple]:
        p = self.field.p
        seen = set(avoid_x)
        out = []
        tries = 0
        while len(out) < count:
            tries += 1
            if tries > 4096:
                raise ModelError("point sampling exhausted")
            x = int(rng.integers(0, p))
            if x in seen:
                continue
            pt = self.point_from_x(x, rng)
            if pt is None or (pt[1] == 0 and not allow_weierstrass):
                continue
            seen.add(x)
            out.append(pt)
        return out

    def rational_weierstrass_points(self) -> list[tuple]:
        """Roots of f in F_p, as points (x, 0); branch points of x."""
        p = self.field.p
        xs = np.arange(p, dtype=np.int64)
        vals = np.zeros(p, dtype=np.int64)
        for c in self.f_arr[::-1]:
            vals = (vals * xs + int(c)) % p
        return [(int(x), 0) for x in xs[vals == 0]]

    def conjugate(self, point: tuple) -> tuple:
        return (point[0], (-point[1]) % self.field.p)
