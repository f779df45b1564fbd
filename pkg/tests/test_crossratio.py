import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from circleconj import crossratio as cr
from circleconj import maps, mocs
from circleconj.errors import DegenerateConfiguration, NonMonotone

pts = st.floats(-10.0, 10.0, allow_nan=False)


def test_definitions():
    assert cr.ratio(0.0, 1.0, 3.0) == pytest.approx(0.5)
    assert cr.cross_ratio(0.0, 1.0, 2.0, 3.0) == pytest.approx(-1.0 / 3.0)
    with pytest.raises(DegenerateConfiguration):
        cr.ratio(0.0, 1.0, 1.0)


def test_nonmonotone_rejected():
    f = cr.SmoothFunction(lambda x: -x, lambda x: -1.0 + 0 * x, lambda x: 0 * x)
    with pytest.raises(NonMonotone):
        cr.distortion(0.0, 1.0, 2.0, f)


@given(st.floats(0.01, 100.0), st.floats(-100.0, 100.0), pts, pts, pts, pts)
def test_affine_invariance(a, b, x1, x2, x3, x4):
    assume(len({x1, x2, x3, x4}) == 4)
    f = cr.Affine(a, b)
    assert cr.distortion(x1, x2, x3, f) == 1.0
    assert cr.cross_distortion(x1, x2, x3, x4, f) == 1.0


def _sine():
    return maps.make_map("sine", omega=0.3, K=0.6)


@given(st.floats(0.0, 1.0), st.floats(1e-4, 0.3), st.floats(0.1, 0.9), st.floats(0.1, 0.9))
def test_cross_distortion_routes_agree(c, s, t2, t4):
    assume(abs(t2 - t4) > 0.05)
    x1, x3 = c, c + s
    x2, x4 = c + t2 * s, c + t4 * s
    f = _sine()
    a = cr.cross_distortion(x1, x2, x3, x4, f)
    b = cr.cross_distortion_via_ratio(x1, x2, x3, x4, f)
    d = cr.cross_distortion_direct(x1, x2, x3, x4, f)
    assert a == pytest.approx(b, rel=1e-12)
    assert a == pytest.approx(d, rel=1e-6)


@given(st.floats(0.0, 1.0), st.floats(1e-3, 0.2), st.floats(0.1, 0.9))
def test_composition_chain_rule(c, s, t):
    f, g = _sine(), maps.make_map("sine", omega=0.1, K=0.3)
    x1, x2, x3 = c, c + t * s, c + s
    fg = cr.compose(f, g)
    y = [float(g.lift(np.float64(x))) for x in (x1, x2, x3)]
    lhs = cr.distortion(x1, x2, x3, fg)
    rhs = cr.distortion(*y, f) * cr.distortion(x1, x2, x3, g)
    assert lhs == pytest.approx(rhs, rel=1e-12)


def test_residual_slopes_sine():
    spans = np.geomspace(1e-4, 1e-1, 10)
    rD = cr.residual_scan_D(_sine(), 0.37, spans, moc=mocs.lipschitz())
    rX = cr.residual_scan_Dist(_sine(), 0.37, spans, moc=mocs.lipschitz())
    assert 0.9 <= rD.slope <= 1.1
    assert 0.9 <= rX.slope <= 1.1


def test_residual_zero_for_affine():
    spans = np.geomspace(1e-4, 1e-1, 5)
    r = cr.residual_scan_Dist(cr.Affine(2.0, 0.1), 0.3, spans, moc=mocs.lipschitz())
    assert np.all(r.r == 0.0)
