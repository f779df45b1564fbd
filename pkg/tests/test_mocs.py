import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from circleconj import mocs
from circleconj.errors import DiniViolated, InsufficientRange, InvalidParams, NotAModulus, SeriesDiverges


def test_builders_validate():
    with pytest.raises(InvalidParams):
        mocs.holder(1.5)
    with pytest.raises(InvalidParams):
        mocs.log_holder(0.0)
    with pytest.raises(InvalidParams):
        mocs.iterated_log([1, 1, 1, 1, 1])
    with pytest.raises(InvalidParams):
        mocs.make_moc("nonsense")


def test_log_evaluation_survives_underflow():
    m = mocs.holder(0.5)
    assert m.log_eval(1e6) == pytest.approx(-0.5e6)
    assert m(0.0) == 0.0


def test_power_series_check():
    a = 1.0 / np.arange(1, 65) ** 2
    g = np.linspace(0.5, 1.0, 64)
    mocs.power_series(a, g, 0.5)
    with pytest.raises(SeriesDiverges):
        mocs.power_series(np.ones(64), np.full(64, 0.5), 1.0)


@pytest.mark.parametrize("m,finite", [
    (mocs.holder(0.5), True),
    (mocs.lipschitz(), True),
    (mocs.log_holder(2.0), True),
    (mocs.log_holder(1.0), False),
    (mocs.log_holder(0.5), False),
    (mocs.iterated_log([1.0, 2.0]), True),
    (mocs.iterated_log([1.0, 1.0]), False),
])
def test_dini_verdicts(m, finite):
    r = mocs.dini_check(m, 0.5)
    assert r.finite is finite and r.agree


def test_dini_holder_value():
    # int_0^1 x^(a-1) dx = 1/a
    r = mocs.dini_check(mocs.holder(0.5))
    assert r.integral_value == pytest.approx(2.0, abs=1e-8)


def test_geometric_sum():
    m = mocs.holder(0.5)
    g = mocs.geometric_sum_moc(m, 0.5)
    x = 1e-3
    expected = sum((0.5**n * x) ** 0.5 for n in range(1, 200))
    assert g(x) == pytest.approx(expected, rel=1e-8)
    with pytest.raises(DiniViolated):
        mocs.geometric_sum_moc(mocs.log_holder(1.0), 0.5)


@pytest.mark.parametrize("m1,m2,expected", [
    (mocs.holder(0.5), mocs.lipschitz(), "strictly_weaker"),
    (mocs.lipschitz(), mocs.holder(0.5), "not_weaker"),
    (mocs.holder(0.5), mocs.holder(0.5, 3.0), "weaker"),
    (mocs.log_holder(1.0), mocs.holder(0.1), "strictly_weaker"),
])
def test_weaker_than(m1, m2, expected):
    assert mocs.weaker_than(m1, m2) == expected


def test_empirical_fits():
    x = np.linspace(0, 1, 4097)[:-1]
    assert mocs.empirical_moc(np.column_stack([x, x])).fit_class == "lipschitz"
    fit = mocs.empirical_moc(np.column_stack([x, np.sqrt(x)]))
    assert fit.fit_class == "holder" and fit.exponent == pytest.approx(0.5, abs=0.05)
    assert mocs.empirical_moc(np.column_stack([x, np.ones_like(x)])).degenerate
    per = mocs.empirical_moc(np.column_stack([x, np.sin(2 * np.pi * x)]), period=1.0)
    assert per.exponent == pytest.approx(1.0, abs=0.05)


def test_empirical_needs_range():
    x = np.linspace(0, 1, 20)
    with pytest.raises(InsufficientRange):
        mocs.empirical_moc(np.column_stack([x, x]))


def test_dict_roundtrip():
    m = mocs.iterated_log([1.0, 1.5])
    m2 = mocs.moc_from_dict(m.to_dict())
    x = np.geomspace(1e-12, 1e-2, 7)
    assert np.allclose(m(x), m2(x))


moduli = st.sampled_from([
    mocs.lipschitz(2.0), mocs.holder(0.3), mocs.holder(0.8), mocs.log_holder(0.7),
    mocs.log_holder(2.5), mocs.iterated_log([1.0, 1.5]), mocs.iterated_log([0.5, 0.5, 0.5]),
])


@given(moduli, st.floats(1e-12, 1.0), st.floats(1e-12, 1.0))
def test_modulus_axioms(m, x, y):
    lo, hi = min(x, y), max(x, y)
    assert m(lo) <= m(hi) * (1 + 1e-12)
    assert m(x + y) <= (m(x) + m(y)) * (1 + 1e-12)
    assert m.zeta(lo) <= m.zeta(hi) * (1 + 1e-12)


@given(st.floats(0.05, 0.95), st.floats(0.05, 0.95))
def test_holder_ordering_property(a, b):
    if abs(a - b) < 0.05:
        return
    verdict = mocs.weaker_than(mocs.holder(min(a, b)), mocs.holder(max(a, b)))
    assert verdict == "strictly_weaker"
