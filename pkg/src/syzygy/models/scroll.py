"""Rational normal scrolls P(O(e_1) + .. + O(e_d)) over the line.

The Picard group is generated by the hyperplane class H and the ruling R;
sections of dH * H + dR * R are bihomogeneous monomials z^alpha t^m with
|alpha| = dH and 0 <= m <= sum(alpha_i e_i) + dR.  All multiplication is
exponent addition, so strands over the scroll are purely combinatorial.

The scroll of degree a = sum(e_i) embedded by H has the Eagon-Northcott
linear strand b_{p,1}(X, H) = p * C(a, p+1).
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations_with_replacement

import numpy as np

from ..errors import ModelError
from ..field import PrimeField
from ..koszul import GradedStrand


@dataclass(frozen=True)
class ScrollBundle:
    """The class dH * H + dR * R on the scroll."""

    dH: int
    dR: int = 0

    def level(self, n: int) -> "ScrollBundle":
        return ScrollBundle(self.dH * n, self.dR * n)


class ScrollModel:
    """A scroll with splitting invariants e_1 <= .. <= e_d, all >= 1."""

    def __init__(self, e, field: PrimeField):
        e = tuple(int(v) for v in e)
        if not e or any(v < 1 for v in e):
            raise ModelError("scrollar invariants must all be >= 1")
        if list(e) != sorted(e):
            raise ModelError("scrollar invariants must be non-decreasing")
        self.e = e
        self.field = field

    @classmethod
    def balanced(cls, a: int, field: PrimeField) -> "ScrollModel":
        """The balanced scroll of degree a on a - 1 invariants (a >= 2)."""
        if a < 2:
            raise ModelError("balanced scroll needs degree >= 2")
        base = [1] * (a - 1)
        base[-1] += 1
        return cls(base, field)

    @property
    def degree(self) -> int:
        return sum(self.e)

    @property
    def dim(self) -> int:
        return len(self.e)

    def describe(self) -> dict:
        return {"type": "scroll", "e": list(self.e), "p": self.field.p}

    def basis(self, bundle: ScrollBundle) -> tuple:
        """Monomials (alpha, m), alpha ascending in the generator order."""
        if bundle.dH < 0:
            return ()
        out = []
        for combo in combinations_with_replacement(range(self.dim),
                                                   bundle.dH):
            alpha = tuple(combo.count(i) for i in range(self.dim))
            top = sum(a * ei for a, ei in zip(alpha, self.e)) + bundle.dR
            out.extend((alpha, mm) for mm in range(top + 1))
        return tuple(out)

    def h0(self, bundle: ScrollBundle) -> int:
        return len(self.basis(bundle))

    def strand(self, bundle: ScrollBundle, q: int) -> GradedStrand:
        """Koszul strand of (L = bundle, M = O) at weight q."""
        v = self.basis(bundle)
        prev = self.basis(bundle.level(q - 1))
        cur = self.basis(bundle.level(q))
        nxt = self.basis(bundle.level(q + 1))
        iprev = {mon: i for i, mon in enumerate(cur)}
        inext = {mon: i for i, mon in enumerate(nxt)}
        c = len(v)
        mp = np.zeros((c, len(prev), len(cur)), dtype=np.int64)
        mc = np.zeros((c, len(cur), len(nxt)), dtype=np.int64)
        for i, (al1, m1) in enumerate(v):
            for j, (al2, m2) in enumerate(prev):
                key = (tuple(x + y for x, y in zip(al1, al2)), m1 + m2)
                mp[i, j, iprev[key]] = 1
            for j, (al2, m2) in enumerate(cur):
                key = (tuple(x + y for x, y in zip(al1, al2)), m1 + m2)
                mc[i, j, inext[key]] = 1
        label = lambda mon: "z" + "".join(map(str, mon[0])) + f"t{mon[1]}"
        return GradedStrand(
            self.field,
            tuple(label(mon) for mon in v),
            tuple(label(mon) for mon in prev),
            tuple(label(mon) for mon in cur),
            tuple(label(mon) for mon in nxt),
            mp, mc)


def scroll_sections(model: ScrollModel, dH: int, dR: int) -> tuple:
    return model.basis(ScrollBundle(dH, dR))
