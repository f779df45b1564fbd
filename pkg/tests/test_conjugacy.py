import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from circleconj import conjugacy as cj
from circleconj import maps, mocs


@pytest.fixture(scope="module")
def profile(tuned_golden):
    return cj.build_profile(tuned_golden, N=14)


def test_gamma_recursion(tuned_golden):
    g = cj.build_gamma(tuned_golden, 0.0, 377)
    assert g.gamma[0] == 0.0
    assert g.recursion_residual < 1e-12


def test_density_normalized(profile):
    d = profile.density
    assert d.integral() == pytest.approx(1.0, abs=1e-12)
    assert np.all(d.values > 0)


def test_phi_normalized_and_monotone(profile):
    phi = profile.phi
    assert phi(phi.x0) == pytest.approx(0.0, abs=1e-15)
    assert phi(phi.x0 + 1.0) == pytest.approx(1.0, abs=1e-12)
    assert phi.min_slope() > 0


@given(st.floats(-2.0, 3.0))
def test_phi_inverse_roundtrip(profile_cache, x):
    phi = profile_cache.phi
    assert phi.inverse(phi(x)) == pytest.approx(x, abs=1e-10)


@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_phi_degree_one_and_increasing(profile_cache, x, y):
    phi = profile_cache.phi
    assert phi(x + 1.0) - phi(x) == pytest.approx(1.0, abs=1e-12)
    if x < y:
        assert phi(x) <= phi(y)


def test_residuals_small(profile):
    assert profile.residual_homological < 1e-3
    assert profile.residual_conjugation < 1e-3
    assert profile.discrepancy <= 2.0 / profile.M


def test_rigid_density_is_flat(rigid_golden):
    p = cj.build_profile(rigid_golden, N=12)
    assert np.max(np.abs(p.density.values - 1.0)) < 1e-12
    xs = np.linspace(0, 1, 11)
    assert np.allclose(p.phi(xs), xs, atol=1e-12)


def test_refinement_reduces_residuals(tuned_golden):
    r = cj.refinement_factors(tuned_golden, N=13, step=1)
    assert r["homological_factor"] > 1.5
    assert r["conjugation_factor"] > 1.5


def test_predicted_beta():
    assert cj.predicted_beta(1.0, 0.9, 1.0) == 1.0
    assert cj.predicted_beta(0.5, 0.5, 0.25) == pytest.approx(0.25)
    assert cj.predicted_beta(1.0, 0.1, 0.5) == 1.0


def test_regularity_lipschitz(profile):
    est = cj.estimate_regularity(profile, {"beta": 1.0})
    assert est.fit.exponent >= 0.9 and est.ok


def test_c1_criterion_rigid_and_sine(rigid_golden, tuned_golden):
    assert cj.c1_criterion(rigid_golden, N=8).kind == "zero"
    r = cj.c1_criterion(tuned_golden, mocs.lipschitz(), N=10)
    assert r.verdict == "converging"
    assert np.all(np.diff(r.partial_sums) >= 0)


def test_c1_explicit_taus():
    n = np.arange(1, 61, dtype=float)
    assert cj.c1_criterion(taus=0.8**n, ks=np.ones(60)).verdict == "converging"
    assert cj.c1_criterion(taus=1.0 / n, ks=np.ones(60)).verdict == "diverging"
