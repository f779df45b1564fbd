import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st
from scipy import integrate

from circleconj import integrability as ig
from circleconj import mocs, numberth
from circleconj.errors import Inconclusive, InvalidParams

H05 = mocs.holder(0.5)
HOLDERS = {a: mocs.holder(a) for a in (0.25, 0.5, 0.8)}
MODULI = {
    "holder0.5": H05,
    "lipschitz": mocs.lipschitz(),
    "log_holder2": mocs.log_holder(2.0),
}


def test_holder_value_both_routes():
    a = ig.main_integral(numberth.phi_constant(), H05, 0.7)
    b = ig.main_integral_fubini(numberth.phi_constant(), H05, 0.7)
    assert a.finite and b.finite
    assert a.value == pytest.approx(2.0, abs=1e-8)
    assert b.value == pytest.approx(2.0, abs=1e-6)


def test_exponential_gauge_value():
    # w = y^0.5, a = lam^-0.25: reduced 1 / (alpha - b) = 4, main carries E = a^t / (1 - b)
    r = ig.case_reduction("C3", H05, {"b": 0.25}, lam=0.7)
    assert r.reduced.value == pytest.approx(4.0, rel=1e-8)
    assert r.main.value == pytest.approx(4.0 / 0.75, rel=1e-8)
    assert r.agree


def test_exponential_too_fast_diverges():
    r = ig.main_integral(numberth.phi_exponential(1 / 0.7), H05, 0.7)
    assert not r.finite and r.value == math.inf


@given(st.floats(0.2, 0.95), st.floats(0.0, 30.0), st.floats(0.1, 3.0))
def test_inner_factor_power_matches_quadrature(lam, t, nu):
    L = -math.log(lam)
    phi = numberth.phi_power(nu)
    exact, _ = integrate.quad(lambda v: (t + v / L) ** nu * math.exp(-v), 0, math.inf)
    assert float(ig.inner_factor(phi, np.array([t]), L)[0]) == pytest.approx(exact, rel=1e-7)


@given(st.floats(0.2, 0.95), st.floats(0.0, 20.0), st.floats(1.01, 1.5))
def test_inner_factor_exponential(lam, t, a):
    L = -math.log(lam)
    assume(math.log(a) / L < 0.9)
    la = math.log(a)
    exact, _ = integrate.quad(lambda v: math.exp((t + v / L) * la - v), 0, math.inf)
    val = float(ig.inner_factor(numberth.phi_exponential(a), np.array([t]), L)[0])
    assert val == pytest.approx(exact, rel=1e-8)


@settings(max_examples=15)
@given(st.sampled_from(sorted(MODULI)), st.floats(0.3, 0.9), st.sampled_from([0.5, 1.0]))
def test_routes_agree(name, lam, nu):
    moc = MODULI[name]
    phi = numberth.phi_power(nu)
    a = ig.main_integral(phi, moc, lam)
    b = ig.main_integral_fubini(phi, moc, lam)
    assert a.finite == b.finite
    if a.finite:
        assert a.value == pytest.approx(b.value, rel=1e-5)


def test_grid_stability():
    s = ig.grid_stability(numberth.phi_constant(), H05, 0.7)
    assert s["same_verdict"] and s["relative_change"] < 1e-4


def test_gauge_quotients():
    ks = ig.gauge_quotients(numberth.phi_power(1.0), 5)
    assert ks.tolist() == [1.0, 1.0, 2.0, 3.0, 4.0]


def test_series_prefers_quotients():
    r = ig.series_criterion(H05, 0.7, ks=np.ones(200), phi=numberth.phi_exponential(2.0))
    assert r.source == "quotients" and r.verdict == "converging"


def test_case_reduction_errors():
    with pytest.raises(InvalidParams):
        ig.case_reduction("C2", H05, {})
    with pytest.raises(InvalidParams):
        ig.case_reduction("C3", H05, {"a": 1.2})


def test_verdict_matrix_agrees():
    rows = ig.verdict_matrix(0.7, stability=False)
    assert len(rows) == 20
    assert all(r["agree"] for r in rows), [r for r in rows if not r["agree"]]


@given(st.floats(0.3, 0.97), st.sampled_from([0.25, 0.5, 0.8]))
def test_R_holder_closed_form(lam, alpha):
    # B(U) = (e^-aU - e^-U)/(1 - a), so R(n) = (lam^(a n)/a - lam^n)/(1 - a)
    hr = ig.higher_regularity(numberth.phi_constant(), HOLDERS[alpha], lam, n_max=30, fit_range=(5, 30))
    n = hr.n
    exact = (lam ** (alpha * n) / alpha - lam**n) / (1 - alpha)
    assert np.allclose(hr.R, exact, rtol=1e-9)


def test_R_rate_holder():
    hr = ig.higher_regularity(numberth.phi_constant(), H05, 0.7)
    assert hr.geometric_rate == pytest.approx(0.7**0.5, rel=0.02)
    assert hr.vanishing


def test_R_log_holder_bounded_rescaled():
    hr = ig.higher_regularity(numberth.phi_constant(), mocs.log_holder(1.5), 0.7)
    tail = hr.R[10:61] * hr.n[10:61] ** 0.5
    assert tail.max() / tail.min() < 2.0


def test_R_undefined_when_divergent():
    with pytest.raises(Inconclusive):
        ig.RFunction(numberth.phi_constant(), mocs.log_holder(1.0), 0.7, 20)


def test_omega_tilde_monotone():
    cf = numberth.from_quotients([1] * 80)
    hr = ig.higher_regularity(numberth.phi_constant(), H05, 0.7, cf=cf, alpha=0.5)
    assert hr.monotone and np.all(hr.omega_tilde > 0)
    assert hr.predicted_beta["theta"] == 1.0


def test_report_verdict():
    rep = ig.integrability_report(numberth.phi_power(1.0), mocs.log_holder(2.5), 0.7, N=300)
    assert rep.agree and rep.verdict == "finite"
