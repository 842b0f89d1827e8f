"""Evaluate L(s, E) near the critical line, find zeros, central derivatives,
numeric sign determination.

Normalisation is analytic throughout: Lambda(s) = A^s Gamma(s + 1/2) L(s)
with A = sqrt(N) / (2 pi), L(s) = sum a_n n^(-1/2-s)... written as
sum b_n n^-s with b_n = a_n / sqrt(n), and Lambda(s) = eps Lambda(1 - s).

Two evaluation routes share the coefficient table:

* ``completed_lambda``: the incomplete-gamma smoothed sum split at a free
  parameter kappa. Different kappa give different series for the same
  number, which makes the functional-equation residual and the numeric
  sign test non-trivial.
* a theta-function quadrature: Lambda(s) is the Mellin transform of
  F(y) = A^(-1/2) sum a_n exp(-n y / A), discretised by the trapezoid rule
  in log y after rotating the contour by an angle phi. One table of F
  values then serves every s by a matrix product, which is what zero
  scanning and the argument principle need. Rotation keeps cancellation
  bounded for larger |t|.
"""

from dataclasses import dataclass
import csv
import math
import weakref

import numpy as np
from scipy.optimize import brentq
from scipy.special import loggamma

from .exceptions import (InputError, MissingZerosError, NeedsMoreCoefficientsError,
                         NumericalCheckError, UndeterminedSignError)


@dataclass(frozen=True)
class EvalParams:
    """Accuracy target, truncation multiplier and differentiation step."""

    accuracy: float = 1e-8
    multiplier: float = 5.0
    diff_step: float = 0.1

    def __post_init__(self):
        if not self.accuracy > 0:
            raise InputError("accuracy must be positive")
        if not self.multiplier >= 3:
            raise InputError("truncation multiplier must be >= 3")
        if not self.diff_step > 0:
            raise InputError("differentiation step must be positive")


DEFAULT = EvalParams()


def _A(ldata):
    return math.sqrt(ldata.conductor) / (2 * math.pi)


def required_terms(ldata, t, params=DEFAULT, kappa=1.0):
    """Series length for the incomplete-gamma route at height t.

    The n-th term decays like exp(-n kappa / A); the length covers
    log(A / accuracy) e-folds plus allowances for the exp(-pi |t| / 2)
    size of Lambda and a safety margin, scaled by multiplier / 2.5.
    """
    A = _A(ldata)
    spread = max(kappa, 1.0 / kappa)
    L = math.log(max(A, 1.0) / params.accuracy) + math.pi * abs(t) / 2 + 2
    return max(16, int(math.ceil(A * spread * params.multiplier / 2.5 * L)))


def _check_cutoff(ldata, n):
    if ldata.cutoff < n:
        raise NeedsMoreCoefficientsError(n)


# --------------------------------------------------------------------------
# Incomplete gamma function
# --------------------------------------------------------------------------

_TINY = 1e-300
_EPS = 1e-16


def _gamma_cf(a, x):
    """Gamma(a, x) by modified Lentz on the Legendre continued fraction."""
    x = np.asarray(x, dtype=float)
    b = x + 1.0 - a
    c = np.full(x.shape, 1.0 / _TINY, dtype=complex)
    d = 1.0 / b
    h = d.copy()
    active = np.ones(x.shape, dtype=bool)
    for i in range(1, 5000):
        an = -i * (i - a)
        b = b + 2.0
        d = an * d + b
        d = np.where(np.abs(d) < _TINY, _TINY, d)
        c = b + an / c
        c = np.where(np.abs(c) < _TINY, _TINY, c)
        d = 1.0 / d
        delta = d * c
        h = np.where(active, h * delta, h)
        active &= np.abs(delta - 1.0) > _EPS
        if not active.any():
            break
    return np.exp(-x + a * np.log(x)) * h


def _gamma_series(a, x):
    """Gamma(a) - gamma(a, x) with the lower function from its power series."""
    x = np.asarray(x, dtype=float)
    term = np.full(x.shape, 1.0 / a, dtype=complex)
    total = term.copy()
    ap = a
    for _ in range(5000):
        ap = ap + 1.0
        term = term * x / ap
        total = total + term
        if np.all(np.abs(term) <= _EPS * np.abs(total)):
            break
    lower = total * np.exp(-x + a * np.log(x))
    return np.exp(loggamma(a)) - lower


_ZETA3 = 1.2020569031595942
_EULER = 0.5772156649015329


def _expm1_over(z):
    """(e^z - 1) / z, accurate for small z."""
    if abs(z) < 1e-2:
        return 1.0 + z / 2 + z * z / 6 + z ** 3 / 24 + z ** 4 / 120
    return (np.exp(z) - 1.0) / z


def _gamma_near_zero(a, x):
    """Gamma(a, x) for |a| < 1/2, where Gamma(a) and gamma(a, x) both blow up.

    Gamma(a, x) = (Gamma(1 + a) - x^a) / a - x^a sum_{k>=1} (-x)^k / (k! (a + k)),
    with the first quotient rearranged so a = 0 gives -gamma_E - log x.
    """
    x = np.asarray(x, dtype=float)
    lx = np.log(x)
    if abs(a) < 1e-3:
        lg_over = -_EULER + (math.pi ** 2 / 12) * a - (_ZETA3 / 3) * a * a + (math.pi ** 4 / 360) * a ** 3
    else:
        lg_over = loggamma(1.0 + a) / a
    w = lg_over - lx
    head = np.exp(a * lx) * w * np.array([_expm1_over(a * wi) for wi in np.atleast_1d(w)]).reshape(w.shape)
    term = np.ones(x.shape, dtype=complex)
    tail = np.zeros(x.shape, dtype=complex)
    for k in range(1, 400):
        term = term * (-x) / k
        inc = term / (a + k)
        tail = tail + inc
        if np.all(np.abs(inc) <= _EPS * np.maximum(np.abs(tail), _TINY)):
            break
    return head - np.exp(a * lx) * tail


def _gamma_small_x(a, x):
    if a.real < -0.5:
        # Gamma(a, x) = (Gamma(a + 1, x) - x^a e^-x) / a
        return (_gamma_small_x(a + 1.0, x) - np.exp(-x + a * np.log(x))) / a
    if abs(a) < 0.5:
        return _gamma_near_zero(a, x)
    return _gamma_series(a, x)


def gamma_upper(a, x):
    """Vectorised Gamma(a, x) for complex scalar a and positive array x."""
    a = complex(a)
    x = np.asarray(x, dtype=float)
    out = np.empty(x.shape, dtype=complex)
    cf = x >= abs(a) + 1.0
    if cf.any():
        out[cf] = _gamma_cf(a, x[cf])
    if (~cf).any():
        out[~cf] = _gamma_small_x(a, x[~cf])
    return out


def incomplete_gamma_upper(s, x):
    """Gamma(s, x) = int_x^inf u^(s-1) e^-u du for x > 0."""
    x = float(x)
    if not x > 0:
        raise InputError("incomplete gamma needs x > 0")
    return complex(gamma_upper(s, np.array([x]))[0])


# --------------------------------------------------------------------------
# Incomplete-gamma route
# --------------------------------------------------------------------------

def _split_parts(ldata, s, params, kappa):
    """(direct part, mirror part) of the kappa-split series; Lambda = P + eps M."""
    s = complex(s)
    n_req = required_terms(ldata, s.imag, params, kappa)
    _check_cutoff(ldata, n_req)
    A = _A(ldata)
    a = ldata.coefficients[1:n_req + 1]
    n = np.flatnonzero(a) + 1
    b = a[n - 1] / np.sqrt(n)
    logr = np.log(A / n)
    P = np.sum(b * np.exp(s * logr) * gamma_upper(s + 0.5, n * kappa / A))
    M = np.sum(b * np.exp((1 - s) * logr) * gamma_upper(1.5 - s, n / (kappa * A)))
    return complex(P), complex(M)


def _sign_of(ldata):
    if ldata.root_number not in (1, -1):
        raise InputError("root number unknown; determine it first (numeric_sign)")
    return ldata.root_number


def completed_lambda(ldata, s, params=DEFAULT, kappa=1.0):
    """Lambda(s) = A^s Gamma(s + 1/2) L(s) by the smoothed two-sided sum."""
    eps = _sign_of(ldata)
    P, M = _split_parts(ldata, s, params, kappa)
    return P + eps * M


def l_value(ldata, s, params=DEFAULT, kappa=1.0):
    s = complex(s)
    lam = completed_lambda(ldata, s, params, kappa)
    return lam / np.exp(s * math.log(_A(ldata)) + loggamma(s + 0.5))


def functional_equation_residual(ldata, s, params=DEFAULT, kappas=(1.0, 1.25)):
    """|Lambda(s) - eps conj(Lambda(1 - conj s))| with the two sides summed
    at different split points, so the identity is tested rather than built in."""
    s = complex(s)
    eps = _sign_of(ldata)
    lhs = completed_lambda(ldata, s, params, kappas[0])
    rhs = eps * np.conj(completed_lambda(ldata, 1 - s.conjugate(), params, kappas[1]))
    return float(abs(lhs - rhs))


SIGN_TEST_POINTS = (0.5 + 0.3j, 0.6 + 1.1j, 0.7 + 1.9j, 0.4 + 2.6j, 0.8 + 3.3j)


def numeric_sign(ldata, params=DEFAULT, kappas=(1.0, 1.25), points=SIGN_TEST_POINTS):
    """The eps in {+1, -1} for which Lambda does not depend on kappa.

    For each test point Lambda_kappa = P_kappa + eps M_kappa; the right eps
    makes the difference between two kappa vanish to working accuracy.
    """
    dP, dM = [], []
    for s in points:
        P1, M1 = _split_parts(ldata, s, params, kappas[0])
        P2, M2 = _split_parts(ldata, s, params, kappas[1])
        dP.append(P1 - P2)
        dM.append(M1 - M2)
    dP, dM = np.array(dP), np.array(dM)
    res = {e: float(np.max(np.abs(dP + e * dM))) for e in (1, -1)}
    best = min(res, key=res.get)
    if not res[best] < 1e-3 * res[-best]:
        raise UndeterminedSignError(
            f"sign residuals {res[1]:.3g} (+1) vs {res[-1]:.3g} (-1) are not separated"
        )
    return best


# --------------------------------------------------------------------------
# Theta-quadrature route
# --------------------------------------------------------------------------

_PHI_FREE = 8.0


def _phi_for(t):
    """Rotation angle for height |t|: none up to 8, then a geometric ladder."""
    t = abs(t)
    if t <= _PHI_FREE:
        return 0.0
    j = math.floor(math.log(t / _PHI_FREE) / math.log(1.25))
    t_lo = _PHI_FREE * 1.25 ** j
    return math.pi / 2 - 6.0 / t_lo


def _theta_efolds(ldata, params):
    # the rotated sum is Lambda scaled up by about exp(phi t), so a fixed
    # number of e-folds gives roughly uniform relative accuracy in t
    return math.log(max(_A(ldata), 1.0) / params.accuracy) + 24.0


def theta_terms(ldata, phi, params=DEFAULT):
    A = _A(ldata)
    L = _theta_efolds(ldata, params)
    return max(16, int(math.ceil(A * L / math.cos(phi))))


class _Theta:
    """Tabulated H(u) = F(exp(u + i phi)) on a uniform u grid."""

    def __init__(self, ldata, phi, params):
        A = _A(ldata)
        self.phi = phi
        self.eps = _sign_of(ldata)
        n_req = theta_terms(ldata, phi, params)
        _check_cutoff(ldata, n_req)
        self.h = min(0.05, (math.pi / 2 - phi) / 6)
        L = _theta_efolds(ldata, params)
        cphi = math.cos(phi)
        u_max = math.log(A * L / cphi) + 1.0
        self.u = np.arange(0.0, u_max + self.h, self.h)
        a = ldata.coefficients[1:n_req + 1].astype(float)
        nz = np.flatnonzero(a)
        n_all = nz + 1.0
        a_nz = a[nz]
        rot = np.exp(1j * phi) / A
        H = np.empty(self.u.size, dtype=complex)
        for k, u in enumerate(self.u):
            m = int(np.searchsorted(n_all, A * L / (cphi * math.exp(u)), side="right"))
            m = max(m, 1)
            H[k] = np.sum(a_nz[:m] * np.exp(-n_all[:m] * (math.exp(u) * rot)))
        self.H = H / math.sqrt(A)

    def __call__(self, s):
        s = np.atleast_1d(np.asarray(s, dtype=complex))
        u = self.u[1:, None]
        Hk = self.H[1:, None]
        rot = np.exp(-2j * self.phi)
        body = Hk * np.exp(u * (s[None, :] + 0.5)) + self.eps * rot * np.conj(Hk) * np.exp(u * (1.5 - s[None, :]))
        total = self.H[0] + body.sum(axis=0)
        return np.exp(1j * self.phi * (s + 0.5)) * self.h * total


_THETA_CACHE = weakref.WeakKeyDictionary()


def _theta(ldata, phi, params):
    per = _THETA_CACHE.setdefault(ldata, {})
    key = (phi, params.accuracy)
    if key not in per:
        per[key] = _Theta(ldata, phi, params)
    return per[key]


def lambda_theta(ldata, s, params=DEFAULT):
    """Lambda at one or many points by the rotated theta quadrature."""
    s = np.atleast_1d(np.asarray(s, dtype=complex))
    out = np.empty(s.shape, dtype=complex)
    flip = s.imag < 0
    q = np.where(flip, np.conj(s), s)
    phis = np.array([_phi_for(t) for t in q.imag])
    for phi in np.unique(phis):
        sel = phis == phi
        out[sel] = _theta(ldata, float(phi), params)(q[sel])
    out[flip] = np.conj(out[flip])
    return out


def coefficients_needed(ldata, T, params=DEFAULT):
    """Table length that both evaluation routes need up to height T."""
    return max(theta_terms(ldata, _phi_for(T), params),
               required_terms(ldata, T, params, 1.25),
               required_terms(ldata, 3.3, params, 1.25))


def prepare(ldata, T=10.0, params=DEFAULT):
    """Extend the coefficient table so every routine here works up to height T."""
    return ldata.with_cutoff(coefficients_needed(ldata, T, params))


def hardy_z(ldata, t, params=DEFAULT):
    """Real rotation of L(1/2 + it) whose sign changes are the zeros.

    Z(t) = Lambda(1/2 + it) / (sqrt(A) |Gamma(1 + it)|), times -i when
    eps = -1, so |Z(t)| = |L(1/2 + it)| and Z(-t) = eps Z(t).
    """
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    lam = lambda_theta(ldata, 0.5 + 1j * t_arr, params)
    norm = math.sqrt(_A(ldata)) * np.exp(loggamma(1.0 + 1j * t_arr).real)
    z = lam / norm
    if ldata.root_number == -1:
        z = -1j * z
    z = z.real
    return float(z[0]) if np.ndim(t) == 0 else z


def smooth_zero_count(ldata, t):
    """Smooth part of the zero count on (0, t]: (t log A + Im log Gamma(1 + it)) / pi."""
    t = np.asarray(t, dtype=float)
    val = (t * math.log(_A(ldata)) + loggamma(1.0 + 1j * t).imag) / math.pi
    return float(val) if val.ndim == 0 else val


# --------------------------------------------------------------------------
# Argument principle
# --------------------------------------------------------------------------

def _log_gamma_part(ldata, s):
    return s * math.log(_A(ldata)) + loggamma(s + 0.5)


def _l_theta(ldata, s, params):
    s = np.asarray(s, dtype=complex)
    return lambda_theta(ldata, s, params) / np.exp(_log_gamma_part(ldata, s))


def _arg_change(f, pts, max_rounds=12, max_step=math.pi / 4):
    """Continuous change of arg f along the polyline through ``pts``."""
    pts = np.asarray(pts, dtype=complex)
    vals = f(pts)
    for _ in range(max_rounds):
        dphi = np.angle(vals[1:] / vals[:-1])
        bad = np.flatnonzero(np.abs(dphi) > max_step)
        if bad.size == 0:
            return float(dphi.sum())
        mids = 0.5 * (pts[bad] + pts[bad + 1])
        mvals = f(mids)
        pts = np.insert(pts, bad + 1, mids)
        vals = np.insert(vals, bad + 1, mvals)
    raise NumericalCheckError("argument tracking did not resolve; a zero may lie on the path")


def argument_principle_count(ldata, t_lo, T, params=DEFAULT, sigma_right=1.5, n_pts=200):
    """Zeros with t_lo < gamma <= T (counted on the critical line).

    Uses the right half of the rectangle [1 - sigma_right, sigma_right] x
    [t_lo, T]; the functional equation gives the left half the same
    change of argument, so count = Delta_right arg Lambda / pi. The
    A^s Gamma(s + 1/2) phase is taken exactly and only arg L is tracked.
    """
    d = np.concatenate([[0.0], np.geomspace(1e-3, sigma_right - 0.5, n_pts // 4)])
    bottom = 0.5 + d + 1j * t_lo
    right = sigma_right + 1j * np.linspace(t_lo, T, n_pts)
    top = (0.5 + d + 1j * T)[::-1]
    f = lambda z: _l_theta(ldata, z, params)
    dl = _arg_change(f, bottom) + _arg_change(f, right) + _arg_change(f, top)
    g = _log_gamma_part(ldata, np.array([0.5 + 1j * t_lo, 0.5 + 1j * T]))
    dg = float(g[1].imag - g[0].imag)
    total = (dl + dg) / math.pi
    k = int(round(total))
    if abs(total - k) > 0.1:
        raise NumericalCheckError(f"argument principle gave non-integer count {total:.4f}")
    return k


# --------------------------------------------------------------------------
# Zeros and central behaviour
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ZeroList:
    ordinates: np.ndarray
    brackets: np.ndarray
    central_order: int
    label: str = ""
    T: float = 0.0

    def __len__(self):
        return self.ordinates.size

    def rows(self):
        for j, (g, br) in enumerate(zip(self.ordinates, self.brackets), start=1):
            yield self.label, j, g, br[1] - br[0]


ZERO_COLUMNS = ("curve", "j", "gamma", "bracket_width")


def write_zeros_csv(path, zero_lists):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(ZERO_COLUMNS)
        for zl in zero_lists:
            for label, j, g, width in zl.rows():
                w.writerow([label, j, repr(float(g)), repr(float(width))])


def central_derivative(ldata, k, params=DEFAULT, with_error=False):
    """k-th derivative of L at s = 1/2 by Richardson-extrapolated central differences.

    The k-th central difference of L along the real axis with step h has
    error O(h^2); three halvings are combined in a Neville table. The
    returned error estimate is the change made by the last level.
    """
    if int(k) != k or k < 0:
        raise InputError("k must be a nonnegative integer")
    k = int(k)
    if k == 0:
        v = l_value(ldata, 0.5, params).real
        return (v, 0.0) if with_error else v
    cache = {}

    def L(x):
        key = round(x, 14)
        if key not in cache:
            cache[key] = l_value(ldata, x, params).real
        return cache[key]

    weights = [(-1) ** j * math.comb(k, j) for j in range(k + 1)]
    rows = []
    h = params.diff_step
    levels = 4
    for i in range(levels):
        d = sum(w * L(0.5 + (k / 2 - j) * h) for j, w in enumerate(weights)) / h ** k
        row = [d]
        for j in range(1, i + 1):
            row.append(row[j - 1] + (row[j - 1] - rows[i - 1][j - 1]) / (4 ** j - 1))
        rows.append(row)
        h /= 2
    value = rows[-1][-1]
    err = abs(rows[-1][-1] - rows[-2][-2])
    return (value, err) if with_error else value


def central_order(ldata, params=DEFAULT, max_order=4, threshold=1e-6):
    """Order of vanishing at s = 1/2: first k with |L^(k)(1/2)| above threshold."""
    eps = _sign_of(ldata)
    start = 0 if eps == 1 else 1
    for k in range(start, max_order + 1):
        if eps == 1 and k % 2 == 1:
            continue  # odd derivatives vanish identically when eps = +1
        if eps == -1 and k % 2 == 0:
            continue
        v, err = central_derivative(ldata, k, params, with_error=True)
        if abs(v) > max(threshold, 10 * err):
            return k
    return max_order + 1


def find_zeros(ldata, T, params=DEFAULT, central=None, t_lo=None, step=None, label=""):
    """All zeros of hardy_z in (t_lo, T], checked against the argument principle.

    The scan step starts near 1/40 of the mean zero spacing and is halved
    up to three times if the sign-change count falls short.
    """
    T = float(T)
    if not T > 0:
        raise InputError("T must be positive")
    _sign_of(ldata)  # zero finding needs the sign
    c = max(ldata.refined_conductor, 1.0)
    if t_lo is None:
        t_lo = min(0.01, T / 100)
    if step is None:
        step = min(0.02, 2 * math.pi / c / 40)
    # move the top edge off any zero
    T_eff = T
    zT = abs(hardy_z(ldata, T_eff, params))
    while zT < 1e-4:
        T_eff += step / 3
        zT = abs(hardy_z(ldata, T_eff, params))
    expected = argument_principle_count(ldata, t_lo, T_eff, params)
    found = None
    for _ in range(4):
        grid = np.linspace(t_lo, T_eff, int(math.ceil((T_eff - t_lo) / step)) + 1)
        z = hardy_z(ldata, grid, params)
        idx = np.flatnonzero(np.sign(z[:-1]) * np.sign(z[1:]) < 0)
        exact = np.flatnonzero(z[1:-1] == 0) + 1
        found = idx.size + exact.size
        if found == expected:
            break
        step /= 2
    if found != expected:
        raise MissingZerosError(
            f"sign changes found {found} zeros, argument principle counts {expected}",
            found=found, expected=expected,
        )
    f = lambda t: hardy_z(ldata, t, params)
    roots, brackets = [], []
    for i in idx:
        r = brentq(f, grid[i], grid[i + 1], xtol=2e-9, rtol=4 * np.finfo(float).eps)
        lo, hi = max(grid[i], r - 5e-9), min(grid[i + 1], r + 5e-9)
        roots.append(r)
        brackets.append((lo, hi))
    for i in exact:
        roots.append(grid[i])
        brackets.append((grid[i], grid[i]))
    order = np.argsort(roots)
    roots = np.asarray(roots)[order] if roots else np.empty(0)
    brackets = np.asarray(brackets)[order] if brackets else np.empty((0, 2))
    keep = roots <= T
    if central is None:
        central = central_order(ldata, params)
    return ZeroList(roots[keep], brackets[keep], int(central), label, T)
