"""Short Weierstrass curves y^2 = x^3 + a x + b and point counting mod p."""

from dataclasses import dataclass
from functools import lru_cache
import numbers

import numpy as np

from ..exceptions import InputError, SingularCurveError


@dataclass(frozen=True, order=True)
class Curve:
    a: int
    b: int

    def __post_init__(self):
        for name in ("a", "b"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, numbers.Integral):
                raise InputError(f"curve coefficient {name} must be an integer, got {v!r}")
            object.__setattr__(self, name, int(v))
        if 4 * self.a ** 3 + 27 * self.b ** 2 == 0:
            raise SingularCurveError(f"y^2 = x^3 + {self.a}x + {self.b} is singular")

    @property
    def discriminant(self):
        return -16 * (4 * self.a ** 3 + 27 * self.b ** 2)

    @property
    def c4(self):
        return -48 * self.a

    @property
    def c6(self):
        return -864 * self.b

    @property
    def ainvs(self):
        return (0, 0, 0, self.a, self.b)

    def __str__(self):
        return f"[{self.a},{self.b}]"


def discriminant(curve):
    """-16 (4 a^3 + 27 b^2); accepts a Curve or an (a, b) pair."""
    if isinstance(curve, Curve):
        return curve.discriminant
    a, b = curve
    d = -16 * (4 * int(a) ** 3 + 27 * int(b) ** 2)
    if d == 0:
        raise SingularCurveError(f"({a}, {b}) is singular")
    return d


def valuation(n, p):
    n = abs(int(n))
    if n == 0:
        return 10 ** 9
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def primes_up_to(n):
    n = int(n)
    if n < 2:
        return np.empty(0, dtype=np.int64)
    sieve = np.ones(n + 1, dtype=bool)
    sieve[:2] = False
    for i in range(2, int(n ** 0.5) + 1):
        if sieve[i]:
            sieve[i * i:: i] = False
    return np.flatnonzero(sieve).astype(np.int64)


@lru_cache(maxsize=4096)
def _chi_table(p):
    """Quadratic character mod an odd prime p as an int8 lookup table."""
    chi = -np.ones(p, dtype=np.int8)
    x = np.arange(1, p, dtype=np.int64)
    chi[(x * x) % p] = 1
    chi[0] = 0
    chi.setflags(write=False)
    return chi


def legendre(n, p):
    return int(_chi_table(p)[int(n) % p])


@lru_cache(maxsize=4096)
def _cubes(p):
    # int32 keeps the cache near 5 bytes per residue together with the int8 table
    x = np.arange(p, dtype=np.int64)
    c = ((x * x) % p * x % p).astype(np.int32)
    c.setflags(write=False)
    return c


def ap_char_sum(a, b, p):
    """-sum_x chi(x^3 + a x + b) mod an odd prime p (no reduction check)."""
    chi = _chi_table(p)
    x = np.arange(p, dtype=np.int64)
    v = (_cubes(p) + (a % p) * x + (b % p)) % p
    return -int(chi[v].sum(dtype=np.int64))


def count_affine_long(ainvs, p):
    """Affine points of a long Weierstrass model over F_p by direct enumeration."""
    a1, a2, a3, a4, a6 = (int(c) % p for c in ainvs)
    x = np.arange(p, dtype=np.int64)[:, None]
    y = np.arange(p, dtype=np.int64)[None, :]
    lhs = (y * y + a1 * x * y + a3 * y) % p
    rhs = (x * x % p * x + a2 * x * x + a4 * x + a6) % p
    return int(np.count_nonzero(lhs == rhs))


def ap_naive(curve, p):
    """p + 1 - #E(F_p) on the short model by enumerating all (x, y) pairs."""
    return p - count_affine_long(curve.ainvs, p)


def _minimize_short(a, b, p):
    while a % p ** 4 == 0 and b % p ** 6 == 0 and (a or b):
        a //= p ** 4
        b //= p ** 6
    return a, b


def ap_good(curve, p):
    """Trace of Frobenius at a prime of good reduction.

    p >= 5 uses the character sum on the p-minimal short model; p = 2, 3
    enumerate affine points on the local minimal model.
    """
    from .tate import tate

    p = int(p)
    if p < 5:
        data = tate(curve.ainvs, p)
        if data.f != 0:
            raise InputError(f"p={p} is not a prime of good reduction for {curve}")
        return p - count_affine_long(data.model, p)
    a, b = _minimize_short(curve.a, curve.b, p)
    if (4 * a ** 3 + 27 * b ** 2) % p == 0:
        raise InputError(f"p={p} is not a prime of good reduction for {curve}")
    return ap_char_sum(a, b, p)
