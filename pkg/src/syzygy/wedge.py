"""Wedge-basis combinatorics: colex ranking of index subsets and signed
insertion/deletion.

A basis vector of the p-th exterior power of an n-dimensional space is a
strictly increasing p-subset of {0, .., n-1}.  Subsets are ranked in
colexicographic order: rank(S) = sum of C(s_i, i+1) over the sorted
elements.  Colex keeps unranking O(p) and groups together the columns of a
Koszul differential that share their high indices, which helps elimination
locality.

Deletion at position i carries the sign (-1)^i; insertion of a new index
carries (-1)^(number of smaller elements), so insert followed by delete at
the inserted position is the identity with sign +1.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

from .errors import ModelError


@dataclass(frozen=True)
class WedgeBasisIndex:
    """A strictly increasing subset of {0, .., ambient_dim - 1}."""

    subset: tuple[int, ...]
    ambient_dim: int

    def __post_init__(self):
        _validate(self.subset, self.ambient_dim)

    @property
    def rank(self) -> int:
        return subset_rank(self.subset, self.ambient_dim)


def _validate(subset, ambient_dim: int) -> None:
    prev = -1
    for s in subset:
        if s <= prev:
            raise ModelError(f"subset {subset} is not strictly increasing")
        prev = s
    if prev >= ambient_dim:
        raise ModelError(
            f"subset {subset} has entries >= ambient dim {ambient_dim}")


def subset_rank(subset, ambient_dim: int | None = None) -> int:
    """Colexicographic rank of a strictly increasing subset."""
    if ambient_dim is not None:
        _validate(subset, ambient_dim)
    return sum(comb(s, i + 1) for i, s in enumerate(subset))


def subset_unrank(r: int, k: int, ambient_dim: int) -> tuple[int, ...]:
    """Inverse of subset_rank among k-subsets of {0, .., ambient_dim - 1}."""
    if not 0 <= r < comb(ambient_dim, k):
        raise ModelError(f"rank {r} out of range for C({ambient_dim},{k})")
    out = []
    x = ambient_dim - 1
    for i in range(k, 0, -1):
        while comb(x, i) > r:
            x -= 1
        out.append(x)
        r -= comb(x, i)
        x -= 1
    return tuple(reversed(out))


def iter_subsets_colex(k: int, ambient_dim: int):
    """All k-subsets of {0, .., ambient_dim - 1} in colex order."""
    if k < 0 or k > ambient_dim:
        return
    cur = list(range(k))
    yield tuple(cur)
    for _ in range(comb(ambient_dim, k) - 1):
        # Advance: lowest position that can move without colliding.
        i = 0
        while i + 1 < k and cur[i] + 1 == cur[i + 1]:
            i += 1
        cur[i] += 1
        for j in range(i):
            cur[j] = j
        yield tuple(cur)


def wedge_delete(subset, position: int) -> tuple[int, tuple[int, ...]]:
    """Remove the element at ``position``; sign is (-1)^position."""
    if position >= len(subset):
        raise ModelError("delete position out of range")
    sign = -1 if position % 2 else 1
    return sign, subset[:position] + subset[position + 1:]


def wedge_insert(subset, idx: int) -> tuple[int, tuple[int, ...]] | None:
    """Insert ``idx`` into the subset, or None if the wedge collapses.

    Sign is (-1)^(number of elements below idx).
    """
    below = 0
    for s in subset:
        if s == idx:
            return None
        if s < idx:
            below += 1
    sign = -1 if below % 2 else 1
    merged = tuple(sorted(subset + (idx,)))
    return sign, merged
