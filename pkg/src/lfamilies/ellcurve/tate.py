"""Tate's algorithm for the local reduction type and conductor exponent.

Coordinate changes x = x' + r, y = y' + s x' + t are applied with u = 1;
the only scaling is the final division by p^i when the model is not
minimal. Roots mod p needed along the way are found by search, which is
cheap for the small primes where this routine is used.
"""

from dataclasses import dataclass
from enum import Enum


class Reduction(str, Enum):
    GOOD = "good"
    MULT_SPLIT = "split"
    MULT_NONSPLIT = "nonsplit"
    ADDITIVE = "additive"


@dataclass(frozen=True)
class LocalData:
    p: int
    f: int
    kodaira: str
    reduction: Reduction
    model: tuple
    disc_valuation: int


def b_invariants(a):
    a1, a2, a3, a4, a6 = a
    b2 = a1 * a1 + 4 * a2
    b4 = 2 * a4 + a1 * a3
    b6 = a3 * a3 + 4 * a6
    b8 = a1 * a1 * a6 + 4 * a2 * a6 - a1 * a3 * a4 + a2 * a3 * a3 - a4 * a4
    return b2, b4, b6, b8


def c_invariants(a):
    b2, b4, b6, b8 = b_invariants(a)
    c4 = b2 * b2 - 24 * b4
    c6 = -b2 ** 3 + 36 * b2 * b4 - 216 * b6
    disc = -b2 * b2 * b8 - 8 * b4 ** 3 - 27 * b6 * b6 + 9 * b2 * b4 * b6
    return c4, c6, disc


def rst(a, r, s, t):
    a1, a2, a3, a4, a6 = a
    return (
        a1 + 2 * s,
        a2 - s * a1 + 3 * r - s * s,
        a3 + r * a1 + 2 * t,
        a4 - s * a3 + 2 * r * a2 - (t + r * s) * a1 + 3 * r * r - 2 * s * t,
        a6 + r * a4 + r * r * a2 + r ** 3 - t * a3 - t * t - r * t * a1,
    )


def _val(n, p):
    if n == 0:
        return 10 ** 9
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def _roots(coeffs, p):
    """Roots in F_p of the polynomial with integer coefficients (high to low)."""
    out = []
    for x in range(p):
        v = 0
        for c in coeffs:
            v = (v * x + c) % p
        if v == 0:
            out.append(x)
    return out


def _singular_point(a, p):
    """(x0, y0) with the reduced curve singular there."""
    a1, a2, a3, a4, a6 = a

    def ok(x, y):
        F = y * y + a1 * x * y + a3 * y - x ** 3 - a2 * x * x - a4 * x - a6
        Fx = a1 * y - 3 * x * x - 2 * a2 * x - a4
        Fy = 2 * y + a1 * x + a3
        return F % p == 0 and Fx % p == 0 and Fy % p == 0

    if p == 2:
        for x in range(2):
            for y in range(2):
                if ok(x, y):
                    return x, y
    else:
        inv2 = pow(2, -1, p)
        for x in range(p):
            y = (-(a1 * x + a3) * inv2) % p
            if ok(x, y):
                return x, y
    raise ArithmeticError(f"no singular point mod {p}")


def _quadratic_splits(c2, c1, c0, p):
    """Whether c2 T^2 + c1 T + c0 has a root in F_p (distinct roots assumed)."""
    return bool(_roots([c2 % p, c1 % p, c0 % p], p))


def tate(ainvs, p):
    """Local data of an integral Weierstrass model at the prime p."""
    a = tuple(int(c) for c in ainvs)
    p = int(p)
    while True:
        c4, c6, disc = c_invariants(a)
        if disc == 0:
            raise ArithmeticError("singular model")
        n = _val(disc, p)
        if n == 0:
            return LocalData(p, 0, "I0", Reduction.GOOD, a, 0)
        x0, y0 = _singular_point(a, p)
        a = rst(a, x0, 0, y0)
        a1, a2, a3, a4, a6 = a
        b2, b4, b6, b8 = b_invariants(a)
        if b2 % p != 0:
            split = _quadratic_splits(1, a1, -a2, p)
            red = Reduction.MULT_SPLIT if split else Reduction.MULT_NONSPLIT
            return LocalData(p, 1, f"I{n}", red, a, n)
        if a6 % p ** 2 != 0:
            return LocalData(p, n, "II", Reduction.ADDITIVE, a, n)
        if b8 % p ** 3 != 0:
            return LocalData(p, n - 1, "III", Reduction.ADDITIVE, a, n)
        if b6 % p ** 3 != 0:
            return LocalData(p, n - 2, "IV", Reduction.ADDITIVE, a, n)
        # move to p | a1, a2; p^2 | a3, a4; p^3 | a6
        a = _step_six(a, p)
        a1, a2, a3, a4, a6 = a
        P = [1, a2 // p, a4 // p ** 2, a6 // p ** 3]
        _, b, c, d = P
        if (b * b * c * c - 4 * c ** 3 - 4 * b ** 3 * d - 27 * d * d + 18 * b * c * d) % p:
            return LocalData(p, n - 4, "I0*", Reduction.ADDITIVE, a, n)
        # a repeated root of a cubic over F_p is itself in F_p
        roots = _roots(P, p)
        mults = [_mult_by_division(P, x, p) for x in roots]
        if sorted(mults) == [1, 2]:
            alpha = roots[mults.index(2)]
            a = rst(a, alpha * p, 0, 0)
            m = 1
            mx = my = p * p
            while True:
                a1, a2, a3, a4, a6 = a
                xa2, xa3, xa4, xa6 = a2 // p, a3 // my, a4 // (p * mx), a6 // (mx * my)
                if (xa3 * xa3 + 4 * xa6) % p != 0:
                    break
                beta = _double_root([1, xa3, -xa6], p)
                a = rst(a, 0, 0, beta * my)
                my *= p
                m += 1
                a1, a2, a3, a4, a6 = a
                xa2, xa3, xa4, xa6 = a2 // p, a3 // my, a4 // (p * mx), a6 // (mx * my)
                if (xa4 * xa4 - 4 * xa2 * xa6) % p != 0:
                    break
                gamma = _double_root([xa2, xa4, xa6], p)
                a = rst(a, gamma * mx, 0, 0)
                mx *= p
                m += 1
            return LocalData(p, n - 4 - m, f"I{m}*", Reduction.ADDITIVE, a, n)
        if not roots or max(mults) < 3:
            raise ArithmeticError("unexpected cubic factorisation in Tate's algorithm")
        alpha = roots[0]
        a = rst(a, alpha * p, 0, 0)
        a1, a2, a3, a4, a6 = a
        xa3, xa6 = a3 // p ** 2, a6 // p ** 4
        if (xa3 * xa3 + 4 * xa6) % p != 0:
            return LocalData(p, n - 6, "IV*", Reduction.ADDITIVE, a, n)
        beta = _double_root([1, xa3, -xa6], p)
        a = rst(a, 0, 0, beta * p ** 2)
        a1, a2, a3, a4, a6 = a
        if a4 % p ** 4 != 0:
            return LocalData(p, n - 7, "III*", Reduction.ADDITIVE, a, n)
        if a6 % p ** 6 != 0:
            return LocalData(p, n - 8, "II*", Reduction.ADDITIVE, a, n)
        a = (a1 // p, a2 // p ** 2, a3 // p ** 3, a4 // p ** 4, a6 // p ** 6)


def _step_six_ok(c, p):
    return (c[0] % p == 0 and c[1] % p == 0 and c[2] % p ** 2 == 0
            and c[3] % p ** 2 == 0 and c[4] % p ** 3 == 0)


def _step_six(a, p):
    if p > 2:
        half = (p + 1) // 2
        c = rst(a, 0, -a[0] * half, -a[2] * half)
        if _step_six_ok(c, p):
            return c
    for s in range(p):
        for t in range(p ** 3):
            c = rst(a, 0, s, t)
            if _step_six_ok(c, p):
                return c
    raise ArithmeticError("Tate: no shift reaching p | a1, a2; p^2 | a3, a4; p^3 | a6")


def _double_root(coeffs, p):
    """The repeated root of a quadratic with zero discriminant mod p."""
    c2, c1, c0 = (c % p for c in coeffs)
    for x in range(p):
        if (c2 * x * x + c1 * x + c0) % p == 0 and (2 * c2 * x + c1) % p == 0:
            return x
    raise ArithmeticError(f"no double root mod {p}")


def _mult_by_division(coeffs, x, p):
    """Multiplicity of the root x by repeated synthetic division mod p."""
    c = [k % p for k in coeffs]
    m = 0
    while len(c) > 1:
        q = [c[0]]
        for k in c[1:]:
            q.append((q[-1] * x + k) % p)
        if q[-1] != 0:
            break
        m += 1
        c = q[:-1]
    return m
