import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from circleconj import denjoy, maps, mocs
from circleconj.errors import DepthUnavailable


@pytest.fixture(scope="module")
def golden_data(tuned_golden):
    return denjoy.return_data(tuned_golden, 0.0, depth=18)


def test_seed_levels(golden_data):
    assert golden_data.q(-1) == 0 and golden_data.q(0) == 1
    assert golden_data.d(-1) == pytest.approx(-1.0)
    assert [golden_data.q(n) for n in range(1, 7)] == [1, 2, 3, 5, 8, 13]


def test_partition_tiles_circle(tuned_golden, golden_data):
    for n in (2, 5, 9):
        chk = denjoy.build_partition(tuned_golden, 0.0, n, golden_data).check()
        assert chk["disjoint"] and chk["chained"] and chk["covers"]


def test_partition_depth_guard():
    with pytest.raises(DepthUnavailable):
        denjoy.build_partition(maps.make_map("rigid", rho=0.375), 0.0, 8)


def test_ordering(golden_data):
    assert denjoy.ordering_holds(golden_data, 16)


def test_l_n_bounds_delta(tuned_golden, golden_data):
    for n in range(1, 10):
        assert denjoy.l_n(tuned_golden, n, data=golden_data) >= golden_data.delta(n) * (1 - 1e-12)


def test_rigid_is_trivial(rigid_golden):
    data = denjoy.return_data(rigid_golden, 0.0, depth=12)
    assert denjoy.l_n(rigid_golden, 6, data=data) == pytest.approx(data.delta(6), rel=1e-9)
    tau, _ = denjoy.tau_n(rigid_golden, None, 6, data=data)
    assert tau == 0.0


def test_identities_hold(tuned_golden, golden_data):
    for n in (2, 4, 7):
        c = denjoy.mk_identity_check(tuned_golden, 0.0, n, golden_data)
        assert max(c.residuals) < 1e-10


def test_tau_sequence_bruteforce():
    ls = np.array([1.0, 0.6, 0.35, 0.2, 0.11, 0.06])
    w = mocs.holder(0.5)
    tau = denjoy.tau_sequence(ls, w)
    for n in range(5):
        expected = sum(ls[n + 1] / ls[n + 1 - k] * w(ls[n - k]) for k in range(n + 1))
        assert tau[n] == pytest.approx(expected, rel=1e-12)


HOLDER = {a: mocs.holder(a) for a in (0.2, 0.5, 0.8)}


@given(st.floats(0.3, 0.95), st.integers(1, 40), st.sampled_from(sorted(HOLDER)))
def test_tau_geometric_closed_form(lam, n, alpha):
    # mesh l_{-1} = 1, l_k = lam^k
    ls = np.concatenate(([1.0], lam ** np.arange(0, n + 1, dtype=float)))
    tau = denjoy.tau_sequence(ls, HOLDER[alpha])[-1]
    expected = lam**n + sum(lam ** (n - j) * lam ** (alpha * (j - 1)) for j in range(1, n + 1))
    assert tau == pytest.approx(expected, rel=1e-10)


@given(st.floats(0.3, 0.95), st.integers(1, 30))
def test_tau_bound_lipschitz_closed_form(lam, n):
    # lam^n int_{lam^n}^1 y^-1 dy = n L lam^n
    L = -math.log(lam)
    assert denjoy.tau_bound(n, lam, mocs.lipschitz()) == pytest.approx(n * L * lam**n, rel=1e-8)


@settings(max_examples=8)
@given(st.floats(0.1, 0.8), st.floats(0.0, 1.0))
def test_partition_property(K, x0):
    m = maps.tune_parameter(K, [2] + [1] * 11, tol=1e-8).map()
    data = denjoy.return_data(m, x0, depth=10)
    chk = denjoy.build_partition(m, x0, 6, data).check()
    assert chk["disjoint"] and chk["covers"]


def test_report_golden(tuned_golden):
    rep = denjoy.denjoy_inequality_report(tuned_golden, N=10)
    c = rep.checks()
    assert c["l_ge_delta"] and c["lambda_emp_le_lambda"]
    assert c["partition_ok"] and c["ordering_ok"]
    assert c["max_identity_residual"] < 1e-10
    assert len(rep.rows()) == rep.ns.size
