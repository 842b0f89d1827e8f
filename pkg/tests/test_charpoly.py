import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lfamilies.charpoly import (CharPoly, conductor, count_zeros_in_annulus, critical_derivative,
                                critical_derivative_batch, evaluate, functional_equation_residual)
from lfamilies.ensembles import (EigenangleSample, EigenangleSampler, EnsembleSpec,
                                 oracle_expectation)
from lfamilies.exceptions import InputError
from lfamilies.spectra import moment_estimator


def make(kind, M, r, angles):
    spec = EnsembleSpec(kind, M, r)
    return CharPoly(EigenangleSample(np.asarray(angles, float), spec.forced_zero_multiplicity, spec))


def expanded_derivative(cp, k):
    """Oracle: expand prod (1 - z conj(lambda)) into monomials and differentiate."""
    coeffs = np.array([1.0 + 0j])
    for lam in cp.eigenvalues():
        coeffs = np.convolve(coeffs, [1.0, -np.conj(lam)])  # ascending powers of z
    poly = np.polynomial.Polynomial(coeffs)
    return complex(poly.deriv(k)(1.0)) if k else complex(poly(1.0))


SPECS = [("so_even", 8, 0), ("so_odd", 9, 0), ("symplectic", 6, 0), ("unitary", 5, 0),
         ("interaction", 9, 3), ("interaction", 10, 3), ("independent", 8, 2), ("independent", 9, 1)]


def random_cp(rng, kind, M, r):
    spec = EnsembleSpec(kind, M, r)
    upper = 2 * math.pi if kind == "unitary" else math.pi
    th = np.sort(rng.uniform(0, upper, spec.free_angle_count))
    return CharPoly(EigenangleSample(th, spec.forced_zero_multiplicity, spec))


def test_eval_examples():
    cp = make("so_even", 2, 0, [1.1])
    assert evaluate(cp, 0) == 1
    assert evaluate(cp, 1).real == pytest.approx(2 - 2 * math.cos(1.1), abs=1e-15)
    z = np.exp(1j * 1.1)
    assert abs((1 - z) * (1 - np.conj(z)) - evaluate(cp, 1)) < 1e-14
    assert evaluate(make("interaction", 5, 1, [0.4, 1.2]), 1.0) == 0
    assert evaluate(make("so_odd", 5, 0, [0.4, 1.2]), 1.0) == 0


@pytest.mark.parametrize("kind,M,r", SPECS)
def test_functional_equation_residual(kind, M, r, rng):
    for _ in range(100):
        cp = random_cp(rng, kind, M, r)
        z = complex(*rng.normal(size=2))
        N = cp.total_degree
        assert functional_equation_residual(cp, z) <= 1e-10 * (1 + abs(z)) ** N
        z = np.exp(1j * rng.uniform(0, 2 * math.pi))
        assert functional_equation_residual(cp, z) <= 1e-10 * 2 ** N


def test_functional_equation_zero_z():
    with pytest.raises(InputError):
        functional_equation_residual(make("so_even", 4, 0, [0.1, 0.2]), 0)


def test_epsilon_values(rng):
    assert make("so_even", 6, 0, [0.3, 1.0, 2.0]).epsilon == pytest.approx(1)
    assert make("so_odd", 7, 0, [0.3, 1.0, 2.0]).epsilon == pytest.approx(-1)
    assert make("independent", 7, 1, [0.3, 1.0, 2.0]).epsilon == pytest.approx(-1)
    assert make("independent", 8, 2, [0.3, 1.0, 2.0]).epsilon == pytest.approx(1)
    # leftover eigenvalue -1 when M - r is odd
    cp = make("interaction", 8, 3, [0.3, 1.0])
    assert cp.implicit_minus_one == 1
    assert cp.determinant() == pytest.approx(-1)
    cp = random_cp(rng, "unitary", 4, 0)
    assert abs(cp.epsilon) == pytest.approx(1)


def test_conductor_counts():
    assert conductor(make("unitary", 5, 0, np.linspace(0.1, 5, 5))) == 5
    assert conductor(make("independent", 6, 2, [0.5, 1.5])) == 6
    assert conductor(make("interaction", 8, 3, [0.3, 1.0])) == 8
    assert conductor(make("so_odd", 9, 0, [0.1, 0.2, 0.3, 0.4])) == 9


def test_critical_derivative_examples():
    th = 0.9
    cp = make("interaction", 3, 1, [th])
    assert abs(critical_derivative(cp, 1)) == pytest.approx(2 - 2 * math.cos(th), rel=1e-14)
    cp = make("so_even", 6, 0, [0.2, 1.0, 2.5])
    assert critical_derivative(cp, 0) == pytest.approx(np.prod(2 - 2 * np.cos([0.2, 1.0, 2.5])), rel=1e-14)
    # forced multiplicity r: first nonzero derivative is (-1)^r r! prod(2 - 2 cos)
    cp = make("interaction", 9, 3, [0.2, 1.0, 2.5])
    expect = (-1) ** 3 * 6 * np.prod(2 - 2 * np.cos([0.2, 1.0, 2.5]))
    assert critical_derivative(cp, 3) == pytest.approx(expect, rel=1e-13)
    assert critical_derivative(cp, 2) == 0


@pytest.mark.parametrize("kind,M,r", SPECS)
def test_critical_derivative_matches_expanded_polynomial(kind, M, r, rng):
    for _ in range(10):
        cp = random_cp(rng, kind, M, r)
        for k in range(4):
            got = complex(critical_derivative(cp, k))
            want = expanded_derivative(cp, k)
            assert abs(got - want) <= 1e-9 * max(1.0, abs(want))


@pytest.mark.parametrize("kind,M,r", [s for s in SPECS if s[0] != "unitary"])
def test_batch_matches_scalar(kind, M, r, rng):
    spec = EnsembleSpec(kind, M, r)
    th = np.sort(rng.uniform(0, math.pi, (20, spec.free_angle_count)), axis=1)
    for k in range(4):
        batch = critical_derivative_batch(th, spec, k)
        single = [critical_derivative(CharPoly(EigenangleSample(row, spec.forced_zero_multiplicity, spec)), k)
                  for row in th]
        np.testing.assert_allclose(batch, single, rtol=1e-12, atol=1e-12)


def test_so3_expected_abs_derivative():
    spec = EnsembleSpec("so_odd", 3)
    exact = oracle_expectation(spec, lambda t: np.abs(critical_derivative_batch(t, spec, 1)))
    assert exact == pytest.approx(3.0, abs=1e-6)
    th = EigenangleSampler.from_spec(spec, random_state=4).fit().sample_array(50_000)
    mean, se = moment_estimator(np.abs(critical_derivative_batch(th, spec, 1)), 1, blocks=50)
    assert abs(mean - 3.0) < 3 * se


@given(st.lists(st.floats(0.05, 3.1), min_size=3, max_size=3), st.floats(-2, 2), st.floats(-2, 2))
@settings(max_examples=100, deadline=None)
def test_conjugate_symmetry(th, x, y):
    cp = make("interaction", 9, 3, sorted(th))
    z = complex(x, y)
    assert abs(evaluate(cp, z.conjugate()) - np.conj(evaluate(cp, z))) <= 1e-12 * (1 + abs(evaluate(cp, z)))


@pytest.mark.parametrize("kind,M,r", SPECS)
def test_all_zeros_on_unit_circle(kind, M, r, rng):
    cp = random_cp(rng, kind, M, r)
    # distinct angles away from each other keep the count well conditioned
    assert count_zeros_in_annulus(cp) == cp.total_degree
    assert count_zeros_in_annulus(cp, 0.1, 0.9) == 0
