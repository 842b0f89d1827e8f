"""Arithmetic data of L(s, E): reduction types, conductor, root number,
Dirichlet coefficients and the gamma factor."""

from dataclasses import dataclass, field, replace
import math

import numpy as np
from scipy.special import loggamma
from sympy import factorint

from ..exceptions import InputError, UnsupportedError
from .curve import Curve, ap_char_sum, ap_good, primes_up_to
from .tate import Reduction, tate

EULER_GAMMA = 0.5772156649015329


def _minimal_short(a, b, p):
    while a % p ** 4 == 0 and b % p ** 6 == 0 and (a or b):
        a //= p ** 4
        b //= p ** 6
    return a, b


def _legendre_big(n, p):
    n %= p
    if n == 0:
        return 0
    return 1 if pow(n, (p - 1) // 2, p) == 1 else -1


def reduction_type(curve, p):
    """Reduction type at p: Tate's algorithm for p in {2, 3}, the
    (ord Delta, ord c4) shortcut on the p-minimal short model otherwise."""
    p = int(p)
    if p < 5:
        return tate(curve.ainvs, p).reduction
    a, b = _minimal_short(curve.a, curve.b, p)
    disc = -16 * (4 * a ** 3 + 27 * b ** 2)
    if disc % p:
        return Reduction.GOOD
    if a % p == 0:
        return Reduction.ADDITIVE
    # node at x0 = -3b/(2a); tangent slopes are rational iff 3 x0 is a square
    return Reduction.MULT_SPLIT if _legendre_big(-2 * a * b, p) == 1 else Reduction.MULT_NONSPLIT


def _bad_primes(curve):
    return sorted(factorint(abs(curve.discriminant)))


def local_exponent(curve, p):
    if p < 5:
        return tate(curve.ainvs, p).f
    red = reduction_type(curve, p)
    return {Reduction.GOOD: 0, Reduction.ADDITIVE: 2}.get(red, 1)


def conductor(curve):
    N = 1
    for p in _bad_primes(curve):
        N *= p ** local_exponent(curve, p)
    return N


def bad_reduction(curve):
    """{p: Reduction} for every prime dividing the conductor."""
    out = {}
    for p in _bad_primes(curve):
        red = reduction_type(curve, p)
        if red is not Reduction.GOOD:
            out[p] = red
    return out


def is_semistable(curve):
    """True when no prime has additive reduction.

    Cheap: for p >= 5 additive reduction on a p-minimal short model means p
    divides both a and b, so only gcd(a, b) and the primes 2, 3 need work.
    """
    for p in (2, 3):
        if tate(curve.ainvs, p).reduction is Reduction.ADDITIVE:
            return False
    g = _strip(_strip(math.gcd(curve.a, curve.b), 2), 3)
    if g == 1:
        return True
    for p in factorint(g):
        if reduction_type(curve, p) is Reduction.ADDITIVE:
            return False
    return True


def _strip(n, p):
    while n % p == 0:
        n //= p
    return n


def ap(curve, p, red=None):
    """a_p for any prime: trace of Frobenius when good, +-1 multiplicative, 0 additive."""
    red = reduction_type(curve, p) if red is None else red
    if red is Reduction.GOOD:
        return ap_good(curve, p)
    if red is Reduction.MULT_SPLIT:
        return 1
    if red is Reduction.MULT_NONSPLIT:
        return -1
    return 0


def root_number(curve, bad=None):
    """Global root number for semistable curves: -prod_{p | N} (-a_p)."""
    bad = bad_reduction(curve) if bad is None else bad
    w = -1
    for p, red in bad.items():
        if red is Reduction.ADDITIVE:
            raise UnsupportedError(f"additive reduction at p={p}; closed-form root number unavailable")
        w *= -(1 if red is Reduction.MULT_SPLIT else -1)
    return w


def dirichlet_coefficients(curve, cutoff, bad=None):
    """Integer table with entry n holding a_n for 1 <= n <= cutoff (entry 0 is 0)."""
    cutoff = int(cutoff)
    if cutoff < 1:
        raise InputError("cutoff must be >= 1")
    bad = bad_reduction(curve) if bad is None else bad
    a = np.zeros(cutoff + 1, dtype=np.int64)
    a[1] = 1
    primes = primes_up_to(cutoff)
    ap_tab = {}
    for p in primes:
        p = int(p)
        if p in bad:
            ap_tab[p] = ap(curve, p, bad[p])
        elif p < 5:
            ap_tab[p] = ap_good(curve, p)
        else:
            aa, bb = _minimal_short(curve.a, curve.b, p)
            ap_tab[p] = ap_char_sum(aa, bb, p)
    # a_n = prod over prime powers exactly dividing n
    a[2:] = 1
    for p, t in ap_tab.items():
        good = p not in bad
        prev, cur = 1, t
        q = p
        while q <= cutoff:
            idx = np.arange(q, cutoff + 1, q)
            if q * p <= cutoff:
                idx = idx[idx % (q * p) != 0]
            a[idx] *= cur
            if good:
                prev, cur = cur, t * cur - p * prev
            else:
                prev, cur = cur, t * cur
            q *= p
    return a


@dataclass(frozen=True)
class GammaFactor:
    """gamma(s) = P(s) Q^s prod_j Gamma(s/2 + mu_j)."""

    Q: float
    mu: tuple
    degree: int
    poly: tuple = (1.0,)

    def __post_init__(self):
        if self.Q <= 0:
            raise InputError("Q must be positive")
        if any(complex(m).real < 0 for m in self.mu):
            raise InputError("Re mu_j must be nonnegative")
        if self.degree != len(self.mu):
            raise InputError("degree must equal the number of Gamma factors")

    def log_gamma(self, s):
        s = np.asarray(s, dtype=complex)
        val = s * math.log(self.Q)
        for m in self.mu:
            val = val + loggamma(s / 2 + m)
        P = np.polyval(np.asarray(self.poly, dtype=complex), s)
        return val + np.log(P)

    def asymmetry(self, s):
        """X(s) = conj(gamma(1 - conj s)) / gamma(s)."""
        s = np.asarray(s, dtype=complex)
        refl = np.conj(self.log_gamma(1 - np.conj(s)))
        return np.exp(refl - self.log_gamma(s))


def gamma_factor(N):
    """Degree-2 gamma data for an elliptic curve of conductor N.

    The analytic completion (sqrt(N)/2pi)^s Gamma(s + 1/2) is, by the
    duplication formula, a constant times (sqrt(N)/pi)^s Gamma(s/2 + 1/4)
    Gamma(s/2 + 3/4).
    """
    N = int(N.conductor if hasattr(N, "conductor") else N)
    return GammaFactor(math.sqrt(N) / math.pi, (0.25, 0.75), 2)


def refined_conductor(gamma, h0=0.1, levels=6):
    """|X'(1/2)| by Richardson-extrapolated central differences."""
    if isinstance(gamma, LData):
        gamma = gamma.gamma
    table = []
    h = h0
    for i in range(levels):
        d = (gamma.asymmetry(0.5 + h) - gamma.asymmetry(0.5 - h)).real / (2 * h)
        row = [d]
        for j in range(1, i + 1):
            row.append(row[j - 1] + (row[j - 1] - table[i - 1][j - 1]) / (4 ** j - 1))
        table.append(row)
        h /= 2
    return abs(table[-1][-1])


def refined_conductor_closed_form(N):
    """log N - 2 log(2 pi) - 2 gamma_E in absolute value."""
    return abs(math.log(N) - 2 * math.log(2 * math.pi) - 2 * EULER_GAMMA)


@dataclass(frozen=True, eq=False)
class LData:
    curve: Curve
    conductor: int
    root_number: int | None
    coefficients: np.ndarray
    gamma: GammaFactor
    refined_conductor: float
    bad: dict = field(default_factory=dict)

    @property
    def epsilon(self):
        return self.root_number

    @property
    def cutoff(self):
        return self.coefficients.size - 1

    @property
    def analytic_Q(self):
        return math.sqrt(self.conductor) / (2 * math.pi)

    def with_cutoff(self, cutoff):
        if cutoff <= self.cutoff:
            return self
        coeffs = dirichlet_coefficients(self.curve, cutoff, self.bad)
        coeffs.setflags(write=False)
        return replace(self, coefficients=coeffs)

    def with_root_number(self, w):
        return replace(self, root_number=w)


def ldata(curve, cutoff=1000, sign="closed"):
    """Assemble LData for a curve.

    ``sign`` is "closed" (semistable formula, UnsupportedError otherwise),
    "none" (leave unset, e.g. for numeric sign determination) or an explicit +-1.
    """
    if not isinstance(curve, Curve):
        curve = Curve(*curve)
    bad = bad_reduction(curve)
    N = 1
    for p in bad:
        N *= p ** local_exponent(curve, p)
    if sign == "closed":
        w = root_number(curve, bad)
    elif sign == "none":
        w = None
    elif sign in (1, -1):
        w = int(sign)
    else:
        raise InputError(f"unknown sign option {sign!r}")
    coeffs = dirichlet_coefficients(curve, cutoff, bad)
    coeffs.setflags(write=False)
    g = gamma_factor(N)
    return LData(curve, N, w, coeffs, g, refined_conductor(g), bad)
