"""Eigenangle ensembles: classical compact groups plus the Interaction and
Independent models for families with forced zeros at the critical point.

Angles of the real (orthogonal/symplectic) ensembles live on [0, pi]; the
conjugate partner -theta is implied. Unitary angles live on [0, 2 pi).

The default sampler is a component-wise random-walk Metropolis chain that
only ever needs density ratios, so the normalising constants of the Weyl
densities are never computed. An exact direct sampler (tridiagonal Jacobi
model for the real ensembles, Haar QR for the unitary group) is available
with ``method="direct"``.
"""

from dataclasses import dataclass
from enum import Enum
import math

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.stats import unitary_group
from sklearn.base import BaseEstimator

from ._validation import check_angles, check_int, check_random_state
from .exceptions import InputError, UnsupportedError


class Kind(str, Enum):
    UNITARY = "unitary"
    SO_EVEN = "so_even"
    SO_ODD = "so_odd"
    SYMPLECTIC = "symplectic"
    INTERACTION = "interaction"
    INDEPENDENT = "independent"


_FORCED_KINDS = (Kind.INTERACTION, Kind.INDEPENDENT)


@dataclass(frozen=True)
class EnsembleSpec:
    """Which ensemble, its total matrix dimension M and forced multiplicity r.

    For ``INDEPENDENT`` the matrix is ``I_r (+) SO(M - r)``; ``sign`` is the
    declared sign of the functional equation and must equal ``(-1)**M``.
    For ``INTERACTION`` the matrix is drawn from SO(M) conditioned on an
    r-fold eigenvalue at 1; the free angles number ``(M - r) // 2``.
    """

    kind: Kind
    dimension: int
    forced: int = 0
    sign: int | None = None

    def __post_init__(self):
        try:
            kind = Kind(self.kind)
        except ValueError:
            raise InputError(f"unknown ensemble kind {self.kind!r}") from None
        object.__setattr__(self, "kind", kind)
        M = check_int(self.dimension, "dimension", 1)
        r = check_int(self.forced, "forced", 0)
        object.__setattr__(self, "dimension", M)
        object.__setattr__(self, "forced", r)
        if kind not in _FORCED_KINDS and r:
            raise InputError(f"{kind.value} takes no forced multiplicity (got r={r})")
        if kind in (Kind.SO_EVEN, Kind.SYMPLECTIC) and M % 2:
            raise InputError(f"{kind.value} needs an even dimension, got {M}")
        if kind is Kind.SO_ODD and (M % 2 == 0 or M < 3):
            raise InputError(f"so_odd needs an odd dimension >= 3, got {M}")
        if kind in _FORCED_KINDS and M - r < 2:
            raise InputError(f"dimension {M} leaves no free angle after r={r}")
        if self.sign is not None:
            if self.sign not in (1, -1):
                raise InputError(f"sign must be +1 or -1, got {self.sign!r}")
            if kind is not Kind.INDEPENDENT:
                raise InputError("a declared sign only applies to the independent model")
            if self.sign != (-1) ** M:
                raise InputError(
                    f"sign {self.sign:+d} is inconsistent with total degree {M} "
                    f"(r={r}, base SO({M - r}))"
                )
        elif kind is Kind.INDEPENDENT:
            object.__setattr__(self, "sign", (-1) ** M)

    @classmethod
    def for_log_conductor(cls, kind, X, forced=0, sign=None):
        """Spec whose total degree is the integer nearest ``log X`` with the
        parity the ensemble requires."""
        kind = Kind(kind)
        target = math.log(X)
        if kind in (Kind.SO_EVEN, Kind.SYMPLECTIC):
            parity = 0
        elif kind is Kind.SO_ODD:
            parity = 1
        elif kind is Kind.INDEPENDENT and sign is not None:
            parity = 0 if sign == 1 else 1
        elif kind is Kind.INTERACTION:
            parity = forced % 2
        else:
            parity = None
        return cls(kind, matrix_size_for(target, parity, minimum=forced + 2), forced, sign)

    @property
    def base_kind(self):
        """Kind whose Weyl weight applies to the free angles."""
        if self.kind is Kind.INDEPENDENT:
            return Kind.SO_EVEN if (self.dimension - self.forced) % 2 == 0 else Kind.SO_ODD
        return self.kind

    @property
    def free_angle_count(self):
        M, r = self.dimension, self.forced
        if self.kind is Kind.UNITARY:
            return M
        if self.kind in _FORCED_KINDS:
            return (M - r) // 2
        return M // 2

    @property
    def forced_zero_multiplicity(self):
        if self.kind is Kind.SO_ODD:
            return 1
        if self.kind is Kind.INTERACTION:
            return self.forced
        if self.kind is Kind.INDEPENDENT:
            return self.forced + (self.dimension - self.forced) % 2
        return 0

    @property
    def implicit_minus_one(self):
        """Interaction model with M - r odd leaves one eigenvalue at -1."""
        return self.kind is Kind.INTERACTION and (self.dimension - self.forced) % 2 == 1

    @property
    def total_degree(self):
        return self.dimension

    @property
    def angle_upper(self):
        return 2 * math.pi if self.kind is Kind.UNITARY else math.pi

    def jacobi_exponents(self):
        """Exponents (a, b) of (1 - x)^a (1 + x)^b in x = cos(theta)."""
        kind = self.base_kind
        if kind is Kind.SO_EVEN:
            return -0.5, -0.5
        if kind is Kind.SO_ODD:
            return 0.5, -0.5
        if kind is Kind.SYMPLECTIC:
            return 0.5, 0.5
        if kind is Kind.INTERACTION:
            return self.forced - 0.5, -0.5
        raise UnsupportedError("the unitary group has no Jacobi form")


def matrix_size_for(log_x, parity=None, minimum=1):
    """Integer nearest ``log_x`` (optionally of fixed parity), at least ``minimum``."""
    if parity is None:
        n = int(round(log_x))
    else:
        n = 2 * int(round((log_x - parity) / 2)) + parity
    while n < minimum:
        n += 1 if parity is None else 2
    return n


@dataclass(frozen=True, eq=False)
class EigenangleSample:
    angles: np.ndarray
    forced_zero_multiplicity: int
    spec: EnsembleSpec

    def __post_init__(self):
        arr = np.array(self.angles, dtype=float)
        arr.sort()
        arr.setflags(write=False)
        object.__setattr__(self, "angles", arr)


@dataclass(frozen=True)
class McmcParams:
    """Chain settings; ``None`` fields take K-dependent defaults.

    Steps are single-angle updates, so ``thinning = 10 * K`` is ten sweeps.
    """

    burn_in: int | None = None
    thinning: int | None = None
    proposal_width: float | None = None
    seed: int | None = None

    def __post_init__(self):
        if self.burn_in is not None and self.burn_in < 0:
            raise InputError("burn_in must be >= 0")
        if self.thinning is not None and self.thinning < 1:
            raise InputError("thinning must be >= 1")
        if self.proposal_width is not None and not 0 < self.proposal_width < math.pi:
            raise InputError("proposal width must lie in (0, pi)")

    def resolved(self, K):
        return McmcParams(
            burn_in=1000 * K if self.burn_in is None else int(self.burn_in),
            thinning=10 * K if self.thinning is None else int(self.thinning),
            proposal_width=(
                min(0.5 * math.pi / K, 2.0) if self.proposal_width is None else self.proposal_width
            ),
            seed=self.seed,
        )


# --------------------------------------------------------------------------
# Weyl densities
# --------------------------------------------------------------------------

def _log_weight(spec, theta):
    kind = spec.base_kind
    with np.errstate(divide="ignore"):
        if kind in (Kind.SO_EVEN, Kind.UNITARY):
            return np.zeros_like(theta)
        if kind is Kind.SO_ODD:
            # 1 - cos t = 2 sin^2(t/2), accurate near 0
            return np.log(2.0 * np.sin(0.5 * theta) ** 2)
        if kind is Kind.SYMPLECTIC:
            return np.log(np.sin(theta) ** 2)
        r = spec.forced
        if r == 0:
            return np.zeros_like(theta)
        return r * np.log(2.0 * np.sin(0.5 * theta) ** 2)


def _log_density_rows(spec, theta):
    """Unnormalised log Weyl density for each row of ``theta`` (shape (C, K))."""
    theta = np.atleast_2d(theta)
    K = theta.shape[1]
    iu, ju = np.triu_indices(K, 1)
    with np.errstate(divide="ignore"):
        if spec.kind is Kind.UNITARY:
            diff = np.abs(2.0 * np.sin(0.5 * (theta[:, iu] - theta[:, ju])))
        else:
            c = np.cos(theta)
            diff = np.abs(c[:, iu] - c[:, ju])
        vandermonde = 2.0 * np.log(diff).sum(axis=1)
    return vandermonde + _log_weight(spec, theta).sum(axis=1)


def weyl_log_density(spec, angles):
    """Unnormalised log joint density of the free angles.

    Coincident angles give ``-inf``; out-of-domain angles raise InputError.
    """
    theta = check_angles(angles, spec.free_angle_count, spec.angle_upper)
    if spec.kind is Kind.UNITARY and np.any(theta >= 2 * math.pi):
        raise InputError("unitary angles must lie in [0, 2 pi)")
    return float(_log_density_rows(spec, theta[None, :])[0])


def oracle_expectation(spec, observable, nodes=160):
    """E[observable] under the normalised Weyl density, by tensor quadrature.

    Only K <= 2 free angles are supported. ``observable`` receives an array
    of shape (n_points, K) and must return n_points values.
    """
    K = spec.free_angle_count
    if K > 2:
        raise UnsupportedError(f"quadrature oracle supports K <= 2, got K={K}")
    if spec.kind is Kind.UNITARY:
        # periodic integrand: trapezoid rule is spectrally accurate
        x = np.arange(nodes) * (2 * math.pi / nodes)
        w = np.full(nodes, 2 * math.pi / nodes)
    else:
        x, w = np.polynomial.legendre.leggauss(nodes)
        x = 0.5 * math.pi * (x + 1.0)
        w = 0.5 * math.pi * w
    grids = np.meshgrid(*([x] * K), indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=1)
    wts = np.ones(len(pts))
    for k in range(K):
        wts = wts * np.meshgrid(*([w] * K), indexing="ij")[k].ravel()
    logp = _log_density_rows(spec, pts)
    dens = np.exp(logp - logp[np.isfinite(logp)].max()) * wts
    values = np.asarray(observable(pts), dtype=float).reshape(len(pts))
    return float(np.dot(dens, values) / dens.sum())


# --------------------------------------------------------------------------
# Direct samplers
# --------------------------------------------------------------------------

def _signed_beta(rng, s, t, size):
    """Draw from density prop. to (1 - x)^(s-1) (1 + x)^(t-1) on [-1, 1]."""
    return 2.0 * rng.beta(t, s, size=size) - 1.0


def jacobi_angles(rng, n, a, b, size):
    """Exact beta=2 Jacobi ensemble in angle form via the Killip-Nenciu model.

    Returns ``size`` rows of ``n`` sorted angles whose cosines have joint
    density prop. to prod (1-x)^a (1+x)^b |Vandermonde|^2.
    """
    beta = 2.0
    out = np.empty((size, n))
    m = 2 * n - 1
    alpha = np.empty((size, m + 2))  # index shift: alpha[:, k + 1] holds alpha_k
    alpha[:, 0] = -1.0
    alpha[:, m + 1] = -1.0
    for k in range(m):
        if k % 2 == 0:
            s = (2 * n - k - 2) * beta / 4 + a + 1
            t = (2 * n - k - 2) * beta / 4 + b + 1
        else:
            s = (2 * n - k - 3) * beta / 4 + a + b + 2
            t = (2 * n - k - 1) * beta / 4
        alpha[:, k + 1] = _signed_beta(rng, s, t, size)

    def al(k):
        return alpha[:, k + 1]

    diag = np.empty((size, n))
    off = np.empty((size, max(n - 1, 0)))
    for k in range(n):
        prev2 = al(2 * k - 2) if k > 0 else np.zeros(size)
        diag[:, k] = (1 - al(2 * k - 1)) * al(2 * k) - (1 + al(2 * k - 1)) * prev2
        if k < n - 1:
            off[:, k] = np.sqrt(
                np.clip((1 - al(2 * k - 1)) * (1 - al(2 * k) ** 2) * (1 + al(2 * k + 1)), 0, None)
            )
    for i in range(size):
        if n == 1:
            lam = diag[i]
        else:
            lam = eigh_tridiagonal(diag[i], off[i], eigvals_only=True)
        out[i] = np.sort(np.arccos(np.clip(lam / 2.0, -1.0, 1.0)))
    return out


def unitary_angles(rng, n, size):
    out = np.empty((size, n))
    for i in range(size):
        u = unitary_group.rvs(n, random_state=rng) if n > 1 else np.exp(
            2j * math.pi * rng.random((1, 1))
        )
        out[i] = np.sort(np.mod(np.angle(np.linalg.eigvals(u)), 2 * math.pi))
    return out


# --------------------------------------------------------------------------
# Vectorised Metropolis chains
# --------------------------------------------------------------------------

class _Chains:
    """C independent component-wise Metropolis chains advanced in lockstep."""

    def __init__(self, spec, theta, width, rng):
        self.spec = spec
        self.unitary = spec.kind is Kind.UNITARY
        self.theta = np.array(theta, dtype=float)
        self.coord = self._coord(self.theta)
        self.width = float(width)
        self.rng = rng
        self.site = 0
        self.accepted = 0
        self.proposed = 0

    def _coord(self, theta):
        return theta if self.unitary else np.cos(theta)

    def _step(self):
        C, K = self.theta.shape
        j = self.site
        old = self.theta[:, j]
        prop = old + self.width * (2.0 * self.rng.random(C) - 1.0)
        if self.unitary:
            prop = np.mod(prop, 2 * math.pi)
        else:
            prop = np.where(prop < 0, -prop, prop)
            prop = np.where(prop > math.pi, 2 * math.pi - prop, prop)
        with np.errstate(divide="ignore", invalid="ignore"):
            if self.unitary:
                num = np.abs(np.sin(0.5 * (self.theta - prop[:, None])))
                den = np.abs(np.sin(0.5 * (self.theta - old[:, None])))
            else:
                cp = np.cos(prop)
                num = np.abs(self.coord - cp[:, None])
                den = np.abs(self.coord - self.coord[:, j:j + 1])
            num[:, j] = 1.0
            den[:, j] = 1.0
            delta = 2.0 * np.log(np.prod(num / den, axis=1))
            delta += _log_weight(self.spec, prop) - _log_weight(self.spec, old)
        delta = np.nan_to_num(delta, nan=-np.inf)
        accept = np.log(self.rng.random(C)) < delta
        self.theta[accept, j] = prop[accept]
        if not self.unitary:
            self.coord[accept, j] = np.cos(prop[accept])
        self.accepted += int(accept.sum())
        self.proposed += C
        self.site = (j + 1) % K

    def advance(self, n_steps):
        for _ in range(n_steps):
            self._step()

    def burn_in(self, n_steps, adapt=True, window=None):
        K = self.theta.shape[1]
        window = window or 20 * K
        done = 0
        while done < n_steps:
            chunk = min(window, n_steps - done)
            self.accepted = self.proposed = 0
            self.advance(chunk)
            done += chunk
            if adapt and self.proposed:
                rate = self.accepted / self.proposed
                if rate < 0.2:
                    self.width *= 0.7
                elif rate > 0.5:
                    self.width = min(self.width * 1.3, 0.99 * math.pi)
        self.accepted = self.proposed = 0


def _spread_start(rng, C, K, upper):
    """Jittered evenly spaced starting angles, distinct with probability 1."""
    base = (np.arange(K) + 0.25 + 0.5 * rng.random((C, K))) * (upper / K)
    return np.sort(base, axis=1)


class EigenangleSampler(BaseEstimator):
    """Draw eigenangle configurations for one ensemble.

    ``fit`` runs the burn-in (tuning the proposal width toward 0.2-0.5
    acceptance) and ``sample`` returns thinned draws round-robin across
    chains. With ``method="direct"`` no chains are kept and ``fit`` only
    validates and seeds.
    """

    def __init__(self, kind="so_even", dimension=2, forced=0, sign=None, *,
                 method="mcmc", n_chains=64, burn_in=None, thinning=None,
                 proposal_width=None, adapt=True, init="spread", random_state=None):
        self.kind = kind
        self.dimension = dimension
        self.forced = forced
        self.sign = sign
        self.method = method
        self.n_chains = n_chains
        self.burn_in = burn_in
        self.thinning = thinning
        self.proposal_width = proposal_width
        self.adapt = adapt
        self.init = init
        self.random_state = random_state

    @classmethod
    def from_spec(cls, spec, **kwargs):
        return cls(spec.kind.value, spec.dimension, spec.forced, spec.sign, **kwargs)

    def fit(self, X=None, y=None):
        self.spec_ = EnsembleSpec(self.kind, self.dimension, self.forced, self.sign)
        if self.method not in ("mcmc", "direct"):
            raise InputError(f"unknown sampling method {self.method!r}")
        self.n_chains_ = check_int(self.n_chains, "n_chains", 1)
        self.rng_ = check_random_state(self.random_state)
        K = self.spec_.free_angle_count
        if self.method == "direct":
            return self
        params = McmcParams(self.burn_in, self.thinning, self.proposal_width).resolved(K)
        self.mcmc_params_ = params
        upper = self.spec_.angle_upper
        if self.init == "spread":
            start = _spread_start(self.rng_, self.n_chains_, K, upper)
        elif self.init == "direct":
            start = self._direct(self.n_chains_)
        else:
            raise InputError(f"unknown init {self.init!r}")
        self.chains_ = _Chains(self.spec_, start, params.proposal_width, self.rng_)
        self.chains_.burn_in(params.burn_in, adapt=self.adapt)
        self.proposal_width_ = self.chains_.width
        return self

    def _direct(self, n):
        spec = self.spec_
        K = spec.free_angle_count
        if spec.kind is Kind.UNITARY:
            return unitary_angles(self.rng_, K, n)
        a, b = spec.jacobi_exponents()
        return jacobi_angles(self.rng_, K, a, b, n)

    def sample_array(self, n_samples):
        """Angles of ``n_samples`` draws as an (n_samples, K) array."""
        n_samples = check_int(n_samples, "n_samples", 1)
        if not hasattr(self, "spec_"):
            self.fit()
        if self.method == "direct":
            return self._direct(n_samples)
        chains = self.chains_
        rows = []
        taken = 0
        chains.accepted = chains.proposed = 0
        while taken < n_samples:
            chains.advance(self.mcmc_params_.thinning)
            rows.append(np.sort(chains.theta, axis=1))
            taken += chains.theta.shape[0]
        self.acceptance_rate_ = chains.accepted / max(chains.proposed, 1)
        return np.concatenate(rows, axis=0)[:n_samples]

    def sample(self, n_samples):
        arr = self.sample_array(n_samples)
        m = self.spec_.forced_zero_multiplicity
        return [EigenangleSample(row, m, self.spec_) for row in arr]


def sample_angles(spec, rng, mcmc=None):
    """One draw from ``spec`` using a single Metropolis chain."""
    if spec.kind is Kind.INDEPENDENT:
        return sample_independent(spec, rng, mcmc)
    mcmc = mcmc or McmcParams()
    sampler = EigenangleSampler.from_spec(
        spec, n_chains=1, burn_in=mcmc.burn_in, thinning=mcmc.thinning,
        proposal_width=mcmc.proposal_width, random_state=check_random_state(rng),
    )
    return sampler.fit().sample(1)[0]


def sample_independent(spec, rng, mcmc=None):
    """Independent model: SO(M - r) angles untouched by the r imposed zeros."""
    if spec.kind is not Kind.INDEPENDENT:
        raise InputError("sample_independent needs an independent-model spec")
    base_dim = spec.dimension - spec.forced
    base = EnsembleSpec(Kind.SO_EVEN if base_dim % 2 == 0 else Kind.SO_ODD, base_dim)
    draw = sample_angles(base, rng, mcmc)
    return EigenangleSample(draw.angles, spec.forced_zero_multiplicity, spec)
