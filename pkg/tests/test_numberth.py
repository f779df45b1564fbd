import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from circleconj import numberth as nt
from circleconj.errors import BadDistribution, IntegerOverflow, OutOfRange, PrecisionExhausted


# ------------------------------------------------------------------ oracles


def test_golden_silver_tanh_quotients():
    assert nt.cf_expand(nt.GOLDEN, 20).ks == (1,) * 20
    assert nt.cf_expand(nt.SILVER, 15).ks == (2,) * 15
    assert nt.cf_expand(nt.TANH1, 8).ks == (1, 3, 5, 7, 9, 11, 13, 15)


def test_convergent_examples():
    ps, qs = nt.convergents([1, 1, 1, 1, 1])
    assert qs[1:] == [1, 1, 2, 3, 5, 8]
    ps, qs = nt.convergents([2, 2, 2])
    assert Fraction(ps[-1], qs[-1]) == Fraction(5, 12)


def test_seeds_and_determinant_sign():
    ps, qs = nt.convergents([3, 1, 4, 1, 5])
    assert (ps[0], qs[0], ps[1], qs[1]) == (1, 0, 0, 1)
    for i in range(1, len(ps)):
        n = i - 1
        assert ps[i] * qs[i - 1] - ps[i - 1] * qs[i] == (-1) ** (n + 1)


def test_precision_exhausted_carries_prefix():
    with pytest.raises(PrecisionExhausted) as exc:
        nt.cf_expand(nt.GOLDEN, 60)
    assert exc.value.m == len(exc.value.prefix) > 20
    assert set(exc.value.prefix) == {1}


def test_non_strict_returns_prefix():
    cf = nt.cf_expand(nt.GOLDEN, 60, strict=False)
    assert 20 < cf.depth < 60


def test_rational_input_terminates():
    assert nt.cf_expand(Fraction(3, 7), 10).ks == (2, 3)


def test_out_of_range_input():
    with pytest.raises(OutOfRange):
        nt.cf_expand(1.5, 3)


def test_integer_overflow_prefix():
    with pytest.raises(IntegerOverflow) as exc:
        nt.convergents([10**10] * 5, width=64)
    assert exc.value.n == 2
    ps, qs = nt.convergents([10**10] * 5, width=None)
    assert qs[-1] > 2**63


def test_accessors_raise_outside_range():
    cf = nt.cf_expand(nt.GOLDEN, 5)
    assert cf.q(-1) == 0 and cf.p(-1) == 1
    with pytest.raises(OutOfRange):
        cf.k(0)
    with pytest.raises(OutOfRange):
        cf.q(6)


def test_from_quotients_gaps_below_epsilon():
    cf = nt.from_quotients([1] * 100)
    d = nt.delta_seq(cf)
    assert d[-1] < 1e-18
    assert np.allclose(d[1:] / d[:-1], nt.GOLDEN, rtol=1e-12)


def test_gap_inverse_golden_midpoint():
    cf = nt.from_quotients([1] * 20)
    x = math.sqrt(cf.delta(2) * cf.delta(3))
    assert nt.delta_inverse(cf, x) == pytest.approx(2.5, abs=1e-12)
    assert nt.delta_inverse(cf, cf.delta(7)) == pytest.approx(7.0, abs=1e-12)
    with pytest.raises(OutOfRange):
        nt.delta_inverse(cf, 1e-30)


def test_delta_tilde_golden():
    cf = nt.from_quotients([1] * 10)
    assert np.allclose(nt.delta_tilde(cf)[:4], [0.25, 0.125, 0.0625, 0.03125])


def test_gauss_kuzmin_pmf_sums_to_one():
    k = np.arange(1, 200001)
    assert nt.gauss_kuzmin_pmf(k).sum() == pytest.approx(1.0, abs=1e-5)


def test_gauss_kuzmin_sample_frequencies():
    s = nt.gauss_kuzmin_sample(200_000, 7)
    for k in (1, 2, 3):
        assert np.mean(s == k) == pytest.approx(nt.gauss_kuzmin_pmf(k), abs=4e-3)


def test_quotient_distribution_rates():
    d = nt.QuotientDistribution((1, 2), (0.5, 0.5))
    assert d.theta() == pytest.approx(2 ** -0.5)
    assert d.theta_tilde() == pytest.approx((2 * 3) ** -0.5)
    with pytest.raises(BadDistribution):
        nt.QuotientDistribution((1, 2), (0.4, 0.4))


def test_generator_bounds_and_determinism():
    phi = nt.phi_power(1.0)
    a = nt.gen_partial_quotients(phi, 50, 3)
    b = nt.gen_partial_quotients(phi, 50, 3)
    assert np.array_equal(a, b)
    bound = np.maximum(1, np.ceil(phi(np.arange(50))))
    assert np.all((a >= 1) & (a <= bound))
    assert np.array_equal(nt.gen_partial_quotients(phi, 50, 0, mode="max"), bound)


def test_kn_series_tail_rule():
    n = 4096
    ok = nt.check_kn_series(np.ones(n), nt.weights_summable(n))
    bad = nt.check_kn_series(np.ones(n), nt.weights_borderline(n))
    assert ok.converged and not bad.converged


def test_appendix_small_run():
    rep = nt.appendix_monte_carlo(n_seeds=200, n_terms=4096, seed=1)
    assert rep.converged_fraction > 0.95
    assert rep.checkpoints == [1024, 2048, 4096]
    assert rep.strictly_increasing


# --------------------------------------------------------------- properties


@given(st.lists(st.integers(1, 50), min_size=1, max_size=30))
def test_determinant_identity(ks):
    ps, qs = nt.convergents(ks, width=None)
    for i in range(1, len(ps)):
        assert ps[i] * qs[i - 1] - ps[i - 1] * qs[i] == (-1) ** i


@given(st.floats(1e-6, 1 - 1e-6))
def test_approximation_bound(x):
    cf = nt.cf_expand(x, 40, strict=False)
    rho = Fraction(x)
    terminated = rho == Fraction(cf.p(cf.depth), cf.q(cf.depth))
    for n in range(1, cf.depth):
        err = abs(rho - Fraction(cf.p(n), cf.q(n)))
        bound = Fraction(1, cf.q(n) * cf.q(n + 1))
        # a terminating expansion meets the bound with equality at its last step
        assert err <= bound if terminated and n == cf.depth - 1 else err < bound


@given(st.lists(st.integers(1, 9), min_size=2, max_size=12))
def test_expansion_roundtrip(ks):
    ps, qs = nt.convergents(ks, width=None)
    value = Fraction(ps[-1], qs[-1])
    got = nt.cf_expand(value, len(ks) + 2).ks
    # a terminal 1 merges into the previous quotient
    canon = list(ks[:-1]) + [ks[-1]] if ks[-1] > 1 else list(ks[:-2]) + [ks[-2] + 1]
    assert list(got) == canon


@given(st.lists(st.integers(1, 20), min_size=3, max_size=40))
def test_gaps_decrease_and_bracket(ks):
    cf = nt.from_quotients(ks)
    d = nt.delta_seq(cf)
    assert np.all(np.diff(d) < 0)
    for n in range(0, cf.depth):
        # 1/(q_{n+1} + q_n) < Delta_n < 1/q_{n+1}
        assert 1.0 / (cf.q(n + 1) + cf.q(n)) < d[n + 1] * (1 + 1e-12)
        assert d[n + 1] < 1.0 / cf.q(n + 1) * (1 + 1e-12)


@given(st.lists(st.integers(1, 20), min_size=3, max_size=30))
def test_delta_tilde_below_delta(ks):
    cf = nt.from_quotients(ks)
    dt = nt.delta_tilde(cf)
    d = nt.delta_seq(cf)
    assert np.all(dt <= d[: dt.size] * (1 + 1e-12))
