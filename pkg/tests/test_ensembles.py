import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from lfamilies.ensembles import (EigenangleSampler, EnsembleSpec, McmcParams,
                                 jacobi_angles, matrix_size_for, oracle_expectation,
                                 sample_angles, sample_independent, weyl_log_density)
from lfamilies.exceptions import InputError, UnsupportedError
from lfamilies.spectra import moment_estimator


def direct_product_log_density(weight, angles):
    """Independent evaluation: log of the explicit double product."""
    val = 1.0
    for j in range(len(angles)):
        for k in range(j + 1, len(angles)):
            val *= (math.cos(angles[j]) - math.cos(angles[k])) ** 2
        val *= weight(angles[j])
    return math.log(val)


def selberg_mean(n, a, b):
    """E prod (2 - 2 cos theta_j) for the Jacobi weight (1-x)^a (1+x)^b |Delta|^2."""
    alpha, beta = a + 1, b + 1
    out = 4.0 ** n
    for j in range(n):
        out *= (alpha + j) / (alpha + beta + n + j - 1)
    return out


# --------------------------------------------------------------------------
# Specs
# --------------------------------------------------------------------------

def test_free_angle_counts():
    assert EnsembleSpec("unitary", 5).free_angle_count == 5
    assert EnsembleSpec("so_even", 8).free_angle_count == 4
    assert EnsembleSpec("so_odd", 9).free_angle_count == 4
    assert EnsembleSpec("symplectic", 6).free_angle_count == 3
    assert EnsembleSpec("interaction", 13, 3).free_angle_count == 5
    assert EnsembleSpec("interaction", 14, 3).free_angle_count == 5
    assert EnsembleSpec("independent", 7, 1, -1).free_angle_count == 3


def test_forced_multiplicities():
    assert EnsembleSpec("so_odd", 5).forced_zero_multiplicity == 1
    assert EnsembleSpec("so_even", 4).forced_zero_multiplicity == 0
    assert EnsembleSpec("unitary", 4).forced_zero_multiplicity == 0
    assert EnsembleSpec("interaction", 9, 3).forced_zero_multiplicity == 3
    assert EnsembleSpec("independent", 6, 2).forced_zero_multiplicity == 2


@pytest.mark.parametrize("args", [
    ("so_even", 5, 0), ("so_odd", 4, 0), ("so_odd", 1, 0), ("so_even", 4, 1),
    ("interaction", 3, 2), ("bogus", 4, 0), ("unitary", 0, 0),
])
def test_spec_rejects_bad_input(args):
    with pytest.raises(InputError):
        EnsembleSpec(*args)


def test_independent_sign_must_match_parity():
    with pytest.raises(InputError):
        EnsembleSpec("independent", 7, 1, sign=1)
    assert EnsembleSpec("independent", 7, 1).sign == -1
    with pytest.raises(InputError):
        EnsembleSpec("interaction", 7, 1, sign=-1)


def test_independent_bookkeeping_r1_sign_minus(rng):
    spec = EnsembleSpec("independent", 9, 1, -1)
    s = sample_independent(spec, rng, McmcParams(burn_in=50, thinning=5))
    assert s.forced_zero_multiplicity == 1
    assert s.angles.size == (9 - 1) // 2


def test_matrix_size_rule():
    assert matrix_size_for(10.4) == 10
    assert matrix_size_for(10.4, parity=1) == 11
    assert matrix_size_for(0.2, minimum=4) == 4
    spec = EnsembleSpec.for_log_conductor("so_odd", math.exp(20.2))
    assert spec.dimension == 21
    spec = EnsembleSpec.for_log_conductor("interaction", math.exp(20.2), forced=2)
    assert spec.dimension == 20


# --------------------------------------------------------------------------
# Weyl density
# --------------------------------------------------------------------------

def test_weyl_spot_values():
    assert weyl_log_density(EnsembleSpec("interaction", 3, 1), [math.pi / 2]) == pytest.approx(0.0, abs=1e-15)
    assert weyl_log_density(EnsembleSpec("so_even", 4), [math.pi / 3, math.pi / 3]) == -math.inf
    val = weyl_log_density(EnsembleSpec("interaction", 6, 2), [math.pi / 3, 2 * math.pi / 3])
    assert val == pytest.approx(2 * math.log(3 / 4), abs=1e-13)
    oracle = direct_product_log_density(lambda t: (1 - math.cos(t)) ** 2, [math.pi / 3, 2 * math.pi / 3])
    assert val == pytest.approx(oracle, abs=1e-13)


@pytest.mark.parametrize("kind,M,r,weight", [
    ("so_even", 8, 0, lambda t: 1.0),
    ("so_odd", 9, 0, lambda t: 1 - math.cos(t)),
    ("symplectic", 8, 0, lambda t: 1 - math.cos(t) ** 2),
    ("interaction", 11, 3, lambda t: (1 - math.cos(t)) ** 3),
])
def test_weyl_matches_direct_product(kind, M, r, weight, rng):
    spec = EnsembleSpec(kind, M, r)
    for _ in range(20):
        th = rng.uniform(0, math.pi, spec.free_angle_count)
        assert weyl_log_density(spec, th) == pytest.approx(direct_product_log_density(weight, th), abs=1e-10)


def test_weyl_unitary_vandermonde(rng):
    th = rng.uniform(0, 2 * math.pi, 4)
    z = np.exp(1j * th)
    oracle = sum(2 * math.log(abs(z[j] - z[k])) for j in range(4) for k in range(j + 1, 4))
    assert weyl_log_density(EnsembleSpec("unitary", 4), th) == pytest.approx(oracle, abs=1e-12)


def test_weyl_domain_errors():
    with pytest.raises(InputError):
        weyl_log_density(EnsembleSpec("so_even", 4), [0.1, 4.0])
    with pytest.raises(InputError):
        weyl_log_density(EnsembleSpec("so_even", 4), [0.1])


angle_lists = st.lists(st.floats(0.01, math.pi - 0.01), min_size=5, max_size=5)


@given(angle_lists)
@settings(max_examples=200, deadline=None)
def test_interaction_reductions(th):
    assert weyl_log_density(EnsembleSpec("interaction", 10, 0), th) == pytest.approx(
        weyl_log_density(EnsembleSpec("so_even", 10), th), abs=1e-12)
    assert weyl_log_density(EnsembleSpec("interaction", 11, 1), th) == pytest.approx(
        weyl_log_density(EnsembleSpec("so_odd", 11), th), abs=1e-12)


@given(angle_lists, st.permutations(range(5)))
@settings(max_examples=100, deadline=None)
def test_weyl_exchange_symmetry(th, perm):
    spec = EnsembleSpec("interaction", 13, 3)
    assert weyl_log_density(spec, [th[i] for i in perm]) == pytest.approx(weyl_log_density(spec, th), abs=1e-10)


# --------------------------------------------------------------------------
# Quadrature oracle
# --------------------------------------------------------------------------

def test_oracle_examples():
    f = lambda th: np.prod(2 - 2 * np.cos(th), axis=-1)
    assert oracle_expectation(EnsembleSpec("so_even", 2), f) == pytest.approx(2.0, abs=1e-6)
    assert oracle_expectation(EnsembleSpec("so_odd", 3), f) == pytest.approx(3.0, abs=1e-6)
    one = lambda th: np.ones(th.shape[0])
    for spec in (EnsembleSpec("so_even", 4), EnsembleSpec("interaction", 7, 3), EnsembleSpec("unitary", 2)):
        assert oracle_expectation(spec, one) == pytest.approx(1.0, abs=1e-6)
    with pytest.raises(UnsupportedError):
        oracle_expectation(EnsembleSpec("so_even", 6), one)


@pytest.mark.parametrize("kind,M,r", [("so_even", 4, 0), ("so_odd", 5, 0), ("symplectic", 4, 0),
                                      ("interaction", 7, 3), ("interaction", 6, 2)])
def test_selberg_formula_against_quadrature(kind, M, r):
    spec = EnsembleSpec(kind, M, r)
    f = lambda th: np.prod(2 - 2 * np.cos(th), axis=-1)
    a, b = spec.jacobi_exponents()
    assert oracle_expectation(spec, f) == pytest.approx(selberg_mean(spec.free_angle_count, a, b), rel=1e-6)


# --------------------------------------------------------------------------
# Samplers
# --------------------------------------------------------------------------

def _draws(spec, n, seed, **kw):
    return EigenangleSampler.from_spec(spec, random_state=seed, **kw).fit().sample_array(n)


def test_so_even_k1_marginal_ks():
    th = _draws(EnsembleSpec("so_even", 2), 100_000, 1)[:, 0]
    assert stats.kstest(th, stats.uniform(0, math.pi).cdf).statistic < 0.01


def test_so_odd_k1_marginal_ks():
    th = _draws(EnsembleSpec("so_odd", 3), 100_000, 2)[:, 0]
    cdf = lambda t: (t - np.sin(t)) / math.pi
    assert stats.kstest(th, cdf).statistic < 0.01


def test_independent_r2_so2_base_is_uniform():
    th = _draws(EnsembleSpec("independent", 4, 2), 100_000, 3)[:, 0]
    assert stats.kstest(th, stats.uniform(0, math.pi).cdf).statistic < 0.01


OBSERVABLES = [
    lambda c: c.sum(axis=1),
    lambda c: (c ** 2).sum(axis=1),
    lambda c: (c ** 3).sum(axis=1),
    lambda c: c.prod(axis=1),
    lambda c: (1 + c).prod(axis=1) ** 2,
]

SMALL_SPECS = [("so_even", 2, 0), ("so_even", 4, 0), ("so_odd", 3, 0), ("so_odd", 5, 0),
               ("symplectic", 2, 0), ("symplectic", 4, 0), ("unitary", 1, 0), ("unitary", 2, 0),
               ("interaction", 5, 3), ("interaction", 6, 2), ("independent", 4, 2), ("independent", 5, 1)]


@pytest.mark.parametrize("kind,M,r", SMALL_SPECS)
def test_mcmc_matches_quadrature_oracle(kind, M, r):
    spec = EnsembleSpec(kind, M, r)
    th = _draws(spec, 100_000, 11)
    c = np.cos(th)
    for obs in OBSERVABLES:
        exact = oracle_expectation(spec, lambda t: obs(np.cos(np.atleast_2d(t))))
        mean, se = moment_estimator(obs(c), 1, blocks=50)
        assert abs(mean - exact) <= 3 * se + 1e-9, (kind, M, r, mean, exact, se)


@pytest.mark.parametrize("kind,M,r", [("so_even", 12, 0), ("so_odd", 13, 0),
                                      ("symplectic", 12, 0), ("interaction", 15, 3)])
@pytest.mark.parametrize("method", ["direct", "mcmc"])
def test_samplers_match_selberg_mean(kind, M, r, method):
    spec = EnsembleSpec(kind, M, r)
    th = _draws(spec, 20_000, 5, method=method)
    vals = np.prod(2 - 2 * np.cos(th), axis=1)
    mean, se = moment_estimator(vals, 1, blocks=40)
    a, b = spec.jacobi_exponents()
    assert abs(mean - selberg_mean(spec.free_angle_count, a, b)) < 4 * se


def test_interaction_r1_matches_so_odd():
    a = _draws(EnsembleSpec("interaction", 7, 1), 40_000, 8)
    b = _draws(EnsembleSpec("so_odd", 7), 40_000, 9, method="direct")
    for obs in OBSERVABLES:
        ma, sa = moment_estimator(obs(np.cos(a)), 1, blocks=40)
        mb, sb = moment_estimator(obs(np.cos(b)), 1, blocks=40)
        assert abs(ma - mb) < 4 * math.hypot(sa, sb)


def test_independent_r0_matches_plain_so():
    a = _draws(EnsembleSpec("independent", 6, 0), 40_000, 12)
    b = _draws(EnsembleSpec("so_even", 6), 40_000, 13, method="direct")
    for obs in OBSERVABLES:
        ma, sa = moment_estimator(obs(np.cos(a)), 1, blocks=40)
        mb, sb = moment_estimator(obs(np.cos(b)), 1, blocks=40)
        assert abs(ma - mb) < 4 * math.hypot(sa, sb)


def test_jacobi_angles_shape_and_range(rng):
    th = jacobi_angles(rng, 5, 0.5, -0.5, 100)
    assert th.shape == (100, 5)
    assert np.all((th >= 0) & (th <= math.pi))
    assert np.all(np.diff(th, axis=1) >= 0)


def test_determinism():
    spec = EnsembleSpec("interaction", 11, 3)
    a = _draws(spec, 500, 42, n_chains=8)
    b = _draws(spec, 500, 42, n_chains=8)
    assert np.array_equal(a, b)
    s1 = sample_angles(spec, np.random.default_rng(5), McmcParams(burn_in=100, thinning=10))
    s2 = sample_angles(spec, np.random.default_rng(5), McmcParams(burn_in=100, thinning=10))
    assert np.array_equal(s1.angles, s2.angles)


def test_sample_invariants():
    spec = EnsembleSpec("unitary", 6)
    out = EigenangleSampler.from_spec(spec, n_chains=4, random_state=0).fit().sample(10)
    for s in out:
        assert np.all(np.diff(s.angles) >= 0)
        assert np.all((s.angles >= 0) & (s.angles < 2 * math.pi))
    sampler = EigenangleSampler.from_spec(EnsembleSpec("so_odd", 9), n_chains=16, random_state=0).fit()
    sampler.sample_array(2000)
    assert 0.15 < sampler.acceptance_rate_ < 0.6


def test_mcmc_params_validation():
    with pytest.raises(InputError):
        McmcParams(burn_in=-1)
    with pytest.raises(InputError):
        McmcParams(thinning=0)
    with pytest.raises(InputError):
        McmcParams(proposal_width=4.0)
    p = McmcParams().resolved(7)
    assert (p.burn_in, p.thinning) == (7000, 70)
