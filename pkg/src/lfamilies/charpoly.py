"""Characteristic polynomials Lambda_A(z) = det(I - A^* z) kept in factored form."""

from dataclasses import dataclass
import math

import numpy as np

from ._validation import check_int
from .ensembles import EigenangleSample, Kind
from .exceptions import InputError


@dataclass(frozen=True, eq=False)
class CharPoly:
    sample: EigenangleSample

    @property
    def spec(self):
        return self.sample.spec

    @property
    def unitary(self):
        return self.spec.kind is Kind.UNITARY

    @property
    def implicit_minus_one(self):
        return int(self.spec.implicit_minus_one)

    @property
    def total_degree(self):
        if self.unitary:
            return len(self.sample.angles)
        return (self.sample.forced_zero_multiplicity + 2 * len(self.sample.angles)
                + self.implicit_minus_one)

    def eigenvalues(self):
        theta = self.sample.angles
        if self.unitary:
            return np.exp(1j * theta)
        parts = [
            np.ones(self.sample.forced_zero_multiplicity),
            np.exp(1j * theta),
            np.exp(-1j * theta),
            -np.ones(self.implicit_minus_one),
        ]
        return np.concatenate(parts).astype(complex)

    def determinant(self):
        return complex(np.prod(self.eigenvalues()))

    @property
    def epsilon(self):
        """Sign of the functional equation, (-1)^N conj(det A).

        For orthogonal kinds det A is real, so this is (-1)^N det A.
        """
        return (-1) ** self.total_degree * self.determinant().conjugate()

    def __call__(self, z):
        return evaluate(self, z)


def evaluate(cp, z):
    """Lambda(z) as a product over all eigenvalues, paired for real kinds."""
    z = np.asarray(z, dtype=complex)
    theta = cp.sample.angles
    if cp.unitary:
        out = np.ones(z.shape, dtype=complex)
        for t in theta:
            out = out * (1.0 - z * np.exp(-1j * t))
        return out if out.ndim else complex(out)
    out = (1.0 - z) ** cp.sample.forced_zero_multiplicity
    if cp.implicit_minus_one:
        out = out * (1.0 + z)
    for c in np.cos(theta):
        out = out * (1.0 - 2.0 * c * z + z * z)
    out = np.asarray(out, dtype=complex)
    return out if out.ndim else complex(out)


def functional_equation_residual(cp, z):
    """|Lambda(z) - eps z^N conj(Lambda(1/conj z))|."""
    z = complex(z)
    if z == 0:
        raise InputError("functional equation check needs z != 0")
    N = cp.total_degree
    lhs = evaluate(cp, z)
    rhs = cp.epsilon * z ** N * np.conj(evaluate(cp, 1.0 / np.conj(z)))
    return float(abs(lhs - rhs))


def conductor(cp):
    return cp.total_degree


def _taylor_factors(cp, k):
    """Truncated Taylor coefficients in w = z - 1 of every factor."""
    w = np.zeros(k + 1, dtype=complex)
    factors = []
    m = cp.sample.forced_zero_multiplicity
    if cp.unitary:
        for t in cp.sample.angles:
            e = np.exp(-1j * t)
            f = w.copy()
            f[0] = 1.0 - e
            if k >= 1:
                f[1] = -e
            factors.append(f)
        return factors
    if m:
        f = w.copy()
        if m <= k:
            f[m] = (-1) ** m
        factors.append(f)
    if cp.implicit_minus_one:
        f = w.copy()
        f[0] = 2.0
        if k >= 1:
            f[1] = 1.0
        factors.append(f)
    for c in np.cos(cp.sample.angles):
        f = w.copy()
        f[0] = 2.0 - 2.0 * c
        if k >= 1:
            f[1] = 2.0 - 2.0 * c
        if k >= 2:
            f[2] = 1.0
        factors.append(f)
    return factors


def critical_derivative(cp, k):
    """k-th derivative of Lambda at z = 1 by exact product-rule accumulation.

    Real kinds return a float, the unitary group a complex number.
    """
    k = check_int(k, "k", 0)
    acc = np.zeros(k + 1, dtype=complex)
    acc[0] = 1.0
    for f in _taylor_factors(cp, k):
        acc = np.convolve(acc, f)[: k + 1]
    value = acc[k] * math.factorial(k)
    return complex(value) if cp.unitary else float(value.real)


def critical_derivative_batch(angles, spec, k):
    """Vectorised critical_derivative over rows of an angle array (real kinds)."""
    if spec.kind is Kind.UNITARY:
        raise InputError("batch derivatives support the real ensembles only")
    k = check_int(k, "k", 0)
    angles = np.atleast_2d(np.asarray(angles, dtype=float))
    n = angles.shape[0]
    acc = np.zeros((n, k + 1))
    acc[:, 0] = 1.0
    m = spec.forced_zero_multiplicity
    if m > k:
        return np.zeros(n)
    # (-w)^m shifts the series by m
    if m:
        acc = np.roll(acc, m, axis=1) * (-1) ** m
        acc[:, :m] = 0.0
    if spec.implicit_minus_one:
        new = 2.0 * acc
        new[:, 1:] += acc[:, :-1]
        acc = new
    for col in range(angles.shape[1]):
        a0 = (2.0 - 2.0 * np.cos(angles[:, col]))[:, None]
        new = a0 * acc
        if k >= 1:
            new[:, 1:] += a0 * acc[:, :-1]
        if k >= 2:
            new[:, 2:] += acc[:, :-2]
        acc = new
    return acc[:, k] * math.factorial(k)


def count_zeros_in_annulus(cp, r_inner=0.5, r_outer=1.5, n_points=None):
    """Number of zeros with r_inner < |z| < r_outer by the argument principle.

    Winding numbers on the two circles come from the unwrapped phase of
    Lambda itself, sampled densely enough that consecutive phase steps are
    far below pi.
    """
    if not 0 < r_inner < r_outer:
        raise InputError("need 0 < r_inner < r_outer")
    N = max(cp.total_degree, 1)
    n_points = n_points or 256 * N
    t = np.linspace(0.0, 2 * math.pi, n_points + 1)

    def winding(radius):
        phase = np.unwrap(np.angle(evaluate(cp, radius * np.exp(1j * t))))
        return (phase[-1] - phase[0]) / (2 * math.pi)

    return int(round(winding(r_outer) - winding(r_inner)))
