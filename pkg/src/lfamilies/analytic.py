"""Closed-form limiting densities and the half-integer Bessel functions behind them."""

from dataclasses import dataclass
import math

import numpy as np

from ._validation import check_int, make_grid
from .exceptions import InputError
from .spectra import write_table_csv


def _half_order(order):
    twice = 2 * order
    if abs(twice - round(twice)) > 1e-12 or int(round(twice)) % 2 == 0:
        raise InputError(f"order must be a half-integer, got {order!r}")
    return int(round(twice)) // 2  # order = n + 1/2


def _series(nu, x):
    """Power series for J_nu, used when x <= nu (upward recurrence unstable)."""
    h = 0.5 * x
    term = h ** nu / math.gamma(nu + 1.0)
    total = term.copy()
    m = 1
    while True:
        term = term * (-h * h) / (m * (m + nu))
        total = total + term
        if np.all(np.abs(term) <= 1e-17 * np.abs(total)) or m > 200:
            return total
        m += 1


def bessel_half(order, x):
    """J_order(x) for half-integer order and x > 0.

    Starts from the trigonometric closed forms of J_{1/2} and J_{-1/2}.
    Negative orders recur downward (J_{-n-1/2} behaves like Y and the
    recurrence is dominant). Positive orders recur upward where x exceeds
    the order and switch to the power series elsewhere.
    """
    n = _half_order(order)
    xa = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(xa)) or np.any(xa <= 0):
        raise InputError("bessel_half needs x > 0")
    scalar = xa.ndim == 0
    xa = np.atleast_1d(xa)
    amp = np.sqrt(2.0 / (math.pi * xa))
    j_plus = amp * np.sin(xa)   # J_{1/2}
    j_minus = amp * np.cos(xa)  # J_{-1/2}
    if n == 0:
        out = j_plus
    elif n == -1:
        out = j_minus
    elif n < -1:
        # J_{nu-1} = (2 nu / x) J_nu - J_{nu+1}, nu from -1/2 down
        hi, cur = j_plus, j_minus
        nu = -0.5
        while nu > order:
            hi, cur = cur, (2 * nu / xa) * cur - hi
            nu -= 1.0
        out = cur
    else:
        out = np.empty_like(xa)
        up = xa > order
        if np.any(up):
            lo, cur = j_minus[up], j_plus[up]
            xs = xa[up]
            nu = 0.5
            while nu < order:
                lo, cur = cur, (2 * nu / xs) * cur - lo
                nu += 1.0
            out[up] = cur
        if np.any(~up):
            out[~up] = _series(float(order), xa[~up])
    return float(out[0]) if scalar else out


def _bessel_density(r, theta):
    """The Bessel one-level density formula; r = 0 allowed for checks."""
    theta = np.asarray(theta, dtype=float)
    scalar = theta.ndim == 0
    theta = np.atleast_1d(theta)
    if np.any(theta < 0):
        raise InputError("theta must be nonnegative")
    out = np.empty_like(theta)
    zero = theta == 0
    out[zero] = 2.0 if r == 0 else 0.0
    t = theta[~zero]
    if t.size:
        x = math.pi * t
        a = bessel_half(r - 1.5, x)
        b = bessel_half(r - 0.5, x)
        out[~zero] = 0.5 * math.pi ** 2 * t * (a * a + b * b - (2 * r - 1) / x * a * b)
    return float(out[0]) if scalar else out


def interaction_density(r, theta):
    """Limiting one-level density of the non-forced angles with r forced at 0.

    r = 0 gives the SO(even) density 1 + sin(2 pi theta) / (2 pi theta).
    """
    r = check_int(r, "r", 0)
    return _bessel_density(r, theta)


def _sinc2pi(theta):
    theta = np.asarray(theta, dtype=float)
    if np.any(theta < 0):
        raise InputError("theta must be nonnegative")
    return np.sinc(2.0 * theta)  # numpy sinc is sin(pi x)/(pi x)


def so_even_density(theta):
    out = 1.0 + _sinc2pi(theta)
    return float(out) if out.ndim == 0 else out


def so_odd_density(theta):
    out = 1.0 - _sinc2pi(theta)
    return float(out) if out.ndim == 0 else out


def sine_kernel_pc(x):
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise InputError("x must be nonnegative")
    out = 1.0 - np.sinc(x) ** 2
    return float(out) if out.ndim == 0 else out


def unitary_density(theta):
    theta = np.asarray(theta, dtype=float)
    out = np.ones_like(theta)
    return float(out) if out.ndim == 0 else out


def density_function(model, r=0):
    """Look up a limiting one-level density by model name."""
    if model == "so_even":
        return so_even_density
    if model == "so_odd":
        return so_odd_density
    if model == "unitary":
        return unitary_density
    if model == "interaction":
        if r == 0:
            return so_even_density
        return lambda t: interaction_density(r, t)
    raise InputError(f"no analytic density for model {model!r}")


def bin_averages(func, edges, nodes=8):
    """Average of ``func`` over each bin by Gauss-Legendre quadrature."""
    edges = np.asarray(edges, dtype=float)
    x, w = np.polynomial.legendre.leggauss(nodes)
    lo, hi = edges[:-1, None], edges[1:, None]
    pts = 0.5 * (hi - lo) * (x[None, :] + 1.0) + lo
    vals = np.asarray(func(pts.ravel()), dtype=float).reshape(pts.shape)
    return 0.5 * (vals * w[None, :]).sum(axis=1)


@dataclass(frozen=True, eq=False)
class PredictionCurve:
    """Analytic curve averaged over the bins of ``grid`` (bin edges)."""

    grid: np.ndarray
    values: np.ndarray
    label: str

    @classmethod
    def from_function(cls, func, grid=None, label=""):
        edges = make_grid(grid)
        return cls(edges, bin_averages(func, edges), label)

    @classmethod
    def for_model(cls, model, r=0, grid=None):
        label = f"{model}" + (f"_r{r}" if model == "interaction" else "")
        return cls.from_function(density_function(model, r), grid, label)

    def to_csv(self, path):
        zeros = np.zeros_like(self.values)
        write_table_csv(path, zip(self.grid[:-1], self.grid[1:], self.values, zeros))
