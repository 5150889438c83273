"""Arithmetic in the prime field F_p.

All exact linear algebra in this package runs over a prime field whose
modulus is small enough that a product of two residues fits comfortably in
a 64-bit integer (p < 2^31).  The default modulus is 31991.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

from .errors import ModelError

DEFAULT_MODULUS = 31991

_SMALL_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin, valid for all n < 3.3 * 10^24."""
    if n < 2:
        return False
    for q in _SMALL_PRIMES:
        if n % q == 0:
            return n == q
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _SMALL_PRIMES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


@dataclass(frozen=True)
class PrimeField:
    """The field F_p for an odd prime p with 2 < p < 2^31."""

    p: int = DEFAULT_MODULUS

    def __post_init__(self):
        if not (2 < self.p < 2**31):
            raise ModelError(f"modulus {self.p} out of range (2, 2^31)")
        if not is_prime(self.p):
            raise ModelError(f"modulus {self.p} is not prime")

    def normalize(self, a: int) -> int:
        return a % self.p

    def add(self, a: int, b: int) -> int:
        return (a + b) % self.p

    def sub(self, a: int, b: int) -> int:
        return (a - b) % self.p

    def mul(self, a: int, b: int) -> int:
        return a * b % self.p

    def neg(self, a: int) -> int:
        return -a % self.p

    def inv(self, a: int) -> int:
        a %= self.p
        if a == 0:
            raise ZeroDivisionError("inverse of 0 in F_p")
        return pow(a, self.p - 2, self.p)

    def div(self, a: int, b: int) -> int:
        return a * self.inv(b) % self.p

    def sqrt(self, a: int) -> int | None:
        """A square root of a in F_p, or None if a is a non-residue.

        Tonelli-Shanks; p is odd.  Returns the root r with r <= p - r.
        """
        a %= self.p
        p = self.p
        if a == 0:
            return 0
        if pow(a, (p - 1) // 2, p) != 1:
            return None
        if p % 4 == 3:
            r = pow(a, (p + 1) // 4, p)
            return min(r, p - r)
        # Tonelli-Shanks for p = 1 mod 4.
        q, s = p - 1, 0
        while q % 2 == 0:
            q //= 2
            s += 1
        z = 2
        while pow(z, (p - 1) // 2, p) != p - 1:
            z += 1
        m, c, t, r = s, pow(z, q, p), pow(a, q, p), pow(a, (q + 1) // 2, p)
        while t != 1:
            t2, i = t * t % p, 1
            while t2 != 1:
                t2 = t2 * t2 % p
                i += 1
            b = pow(c, 1 << (m - i - 1), p)
            m, c = i, b * b % p
            t, r = t * c % p, r * b % p
        return min(r, p - r)


def default_field() -> PrimeField:
    """Field with the default modulus, overridable via SYZYGY_MODULUS."""
    env = os.environ.get("SYZYGY_MODULUS")
    return PrimeField(int(env)) if env else PrimeField()
