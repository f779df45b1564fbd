"""Ratios, cross-ratios and their distortion under increasing maps.

All distortions are assembled from first divided differences
``f[a, b] = (f(b) - f(a)) / (b - a)``, with ``f[a, a] = f'(a)``.  Function
objects may supply their own ``divided_difference``; affine maps and
compositions do, so that affine distortions are exactly 1 and the chain
rule for compositions holds to rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DegenerateConfiguration, NonMonotone


# ----------------------------------------------------------- function types


@dataclass(frozen=True)
class Affine:
    """``x -> a x + b`` with ``a > 0``."""

    a: float
    b: float = 0.0

    def value(self, x):
        return self.a * np.asarray(x, dtype=np.float64) + self.b

    def d1(self, x):
        return np.full(np.shape(x), float(self.a))

    def d2(self, x):
        return np.zeros(np.shape(x))

    def divided_difference(self, x, y):
        return np.full(np.broadcast(np.asarray(x), np.asarray(y)).shape, float(self.a))


@dataclass(frozen=True)
class SmoothFunction:
    """A function given by value and derivative callables."""

    f: Callable
    df: Optional[Callable] = None
    d2f: Optional[Callable] = None

    def value(self, x):
        return self.f(np.asarray(x, dtype=np.float64))

    def d1(self, x):
        if self.df is None:
            raise DegenerateConfiguration("coincident points need a derivative")
        return self.df(np.asarray(x, dtype=np.float64))

    def d2(self, x):
        if self.d2f is None:
            raise DegenerateConfiguration("second derivative not supplied")
        return self.d2f(np.asarray(x, dtype=np.float64))

    def divided_difference(self, x, y):
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        same = x == y
        with np.errstate(invalid="ignore", divide="ignore"):
            dd = (self.value(y) - self.value(x)) / (y - x)
        if np.any(same):
            dd = np.where(same, self.d1(x), dd)
        return dd


class _MapAdapter:
    """Exposes a :class:`~circleconj.maps.CircleMap` lift through the protocol."""

    def __init__(self, m):
        self.m = m

    def value(self, x):
        return self.m.lift(np.asarray(x, dtype=np.float64))

    def d1(self, x):
        return self.m.d1(np.asarray(x, dtype=np.float64))

    def d2(self, x):
        return self.m.d2(np.asarray(x, dtype=np.float64))

    def divided_difference(self, x, y):
        return self.m.divided_difference(x, y)


@dataclass(frozen=True)
class Compose:
    """``outer o inner``; divided differences multiply along the chain."""

    outer: object
    inner: object

    def value(self, x):
        return as_function(self.outer).value(as_function(self.inner).value(x))

    def d1(self, x):
        g = as_function(self.inner)
        return as_function(self.outer).d1(g.value(x)) * g.d1(x)

    def d2(self, x):
        f, g = as_function(self.outer), as_function(self.inner)
        gx = g.value(x)
        return f.d2(gx) * g.d1(x) ** 2 + f.d1(gx) * g.d2(x)

    def divided_difference(self, x, y):
        f, g = as_function(self.outer), as_function(self.inner)
        return f.divided_difference(g.value(x), g.value(y)) * g.divided_difference(x, y)


def as_function(f):
    """Normalize maps, affine objects and plain callables to the protocol."""
    if hasattr(f, "divided_difference") and hasattr(f, "value"):
        return f
    if hasattr(f, "lift") and hasattr(f, "divided_difference"):
        return _MapAdapter(f)
    if callable(f):
        return SmoothFunction(f)
    raise TypeError(f"cannot use {type(f).__name__} as a function")


def compose(outer, inner) -> Compose:
    return Compose(outer, inner)


def divided_difference(f, x, y):
    return as_function(f).divided_difference(x, y)


# ------------------------------------------------------------- definitions


def ratio(x1, x2, x3):
    """``(x1 - x2) / (x2 - x3)``."""
    den = np.subtract(x2, x3)
    if np.any(den == 0):
        raise DegenerateConfiguration("ratio needs x2 != x3")
    return np.subtract(x1, x2) / den


def cross_ratio(x1, x2, x3, x4):
    """``(x1 - x2)(x3 - x4) / ((x2 - x3)(x4 - x1))``."""
    den = np.subtract(x2, x3) * np.subtract(x4, x1)
    if np.any(den == 0):
        raise DegenerateConfiguration("cross-ratio needs x2 != x3 and x4 != x1")
    return np.subtract(x1, x2) * np.subtract(x3, x4) / den


def _checked_dd(fn, a, b):
    dd = fn.divided_difference(a, b)
    if np.any(~(dd > 0)):
        raise NonMonotone("function is not increasing on the points used")
    return dd


def distortion(x1, x2, x3, f):
    """Ratio distortion ``D(x1, x2, x3; f) = f[x1, x2] / f[x2, x3]``."""
    fn = as_function(f)
    return _checked_dd(fn, x1, x2) / _checked_dd(fn, x2, x3)


def cross_distortion(x1, x2, x3, x4, f):
    """Cross-ratio distortion ``f[x1,x2] f[x3,x4] / (f[x2,x3] f[x4,x1])``."""
    fn = as_function(f)
    num = _checked_dd(fn, x1, x2) * _checked_dd(fn, x3, x4)
    den = _checked_dd(fn, x2, x3) * _checked_dd(fn, x4, x1)
    return num / den


def cross_distortion_direct(x1, x2, x3, x4, f):
    """Cross-ratio of the images divided by the cross-ratio of the points.

    Needs four distinct points; kept as an independent route to
    :func:`cross_distortion`.
    """
    fn = as_function(f)
    ys = [fn.value(x) for x in (x1, x2, x3, x4)]
    return cross_ratio(*ys) / cross_ratio(x1, x2, x3, x4)


def cross_distortion_via_ratio(x1, x2, x3, x4, f):
    """``D(x1, x2, x3; f) / D(x1, x4, x3; f)``."""
    return distortion(x1, x2, x3, f) / distortion(x1, x4, x3, f)


# --------------------------------------------------------- residual scans


def _triples(case: int, span: float, center: float, n: int, rng) -> tuple:
    """Triples of hull width ``span`` with ``x_case-th`` point in the middle.

    Case 1 puts x2 between x1 and x3, case 2 puts x1 between x2 and x3 and
    case 3 puts x3 between x1 and x2.  Every gap is at least span/4.
    """
    lo = center - 0.5 * span
    hi = center + 0.5 * span
    mid = lo + span * (0.25 + 0.5 * rng.random(n))
    flip = rng.random(n) < 0.5
    a = np.where(flip, hi, lo)
    b = np.where(flip, lo, hi)
    if case == 1:
        return a, mid, b
    if case == 2:
        return mid, a, b
    if case == 3:
        return a, b, mid
    raise ValueError("case must be 1, 2 or 3")


def _quads(case: int, span: float, center: float, n: int, rng) -> tuple:
    """Quadruples of hull width ``span``; the case picks which pair is outermost."""
    lo = center - 0.5 * span
    u = np.sort(rng.random((n, 2)), axis=1)
    inner1 = lo + span * (0.2 + 0.6 * u[:, 0])
    inner2 = lo + span * (0.2 + 0.6 * u[:, 1])
    inner2 = np.maximum(inner2, inner1 + 0.1 * span)
    ends = (np.full(n, lo), np.full(n, lo + span))
    if case == 1:  # x1, x3 outermost
        return ends[0], inner1, ends[1], inner2
    if case == 2:  # x1 inside
        return inner1, ends[0], inner2, ends[1]
    if case == 3:  # x3 inside
        return ends[0], ends[1], inner1, inner2
    raise ValueError("case must be 1, 2 or 3")


@dataclass
class ScanReport:
    spans: np.ndarray
    omega: np.ndarray
    residual: dict  # case -> array over spans
    worst_xstar: np.ndarray
    slope: float
    case_slopes: dict

    @property
    def r(self) -> np.ndarray:
        return np.max(np.vstack(list(self.residual.values())), axis=0)

    def rows(self):
        out = []
        for case, vals in sorted(self.residual.items()):
            for s, w, r in zip(self.spans, self.omega, vals):
                out.append((float(s), float(r), float(w), f"case{case}"))
        return out

    def to_dict(self) -> dict:
        return {
            "spans": self.spans.tolist(),
            "r": self.r.tolist(),
            "omega": self.omega.tolist(),
            "worst_xstar": self.worst_xstar.tolist(),
            "slope": self.slope,
            "case_slopes": dict(self.case_slopes),
        }


def _fit_slope(omega, r) -> float:
    pos = r > 0
    if pos.sum() < 2:
        return math.nan
    return float(np.polyfit(np.log(omega[pos]), np.log(r[pos]), 1)[0])


def _modulus_for(f, moc):
    if moc is not None:
        return moc
    from . import mocs

    tag = getattr(getattr(f, "m", f), "smoothness", "lipschitz")
    if tag == "lipschitz":
        return mocs.lipschitz()
    return mocs.make_moc(tag["kind"], tag.get("params")) if isinstance(tag, dict) else mocs.lipschitz()


def residual_scan_D(f, center: float, spans: Sequence[float], moc=None, n: int = 64,
                    seed: int = 0, cases=(1, 2, 3)) -> ScanReport:
    """Scaling of ``|D - 1 - (x1 - x3) f''/(2 f')| / |x1 - x3|`` with the span.

    ``f''`` and ``f'`` are taken at the hull midpoint; the worst value over
    an 11-point grid of evaluation points across the hull is also reported.
    """
    fn = as_function(f)
    spans = np.asarray(spans, dtype=np.float64)
    moc = _modulus_for(f, moc)
    omega = np.asarray(moc(spans), dtype=np.float64)
    residual = {}
    worst = np.zeros(spans.size)
    for case in cases:
        rng = np.random.default_rng([seed, case])
        vals = np.empty(spans.size)
        for i, s in enumerate(spans):
            x1, x2, x3 = _triples(case, s, center, n, rng)
            D = distortion(x1, x2, x3, fn)
            hull_lo = np.minimum(np.minimum(x1, x2), x3)
            hull_hi = np.maximum(np.maximum(x1, x2), x3)
            xs = 0.5 * (hull_lo + hull_hi)
            pred = (x1 - x3) * fn.d2(xs) / (2.0 * fn.d1(xs))
            vals[i] = float(np.max(np.abs(D - 1.0 - pred) / np.abs(x1 - x3)))
            for t in np.linspace(0.0, 1.0, 11):
                xt = hull_lo + t * (hull_hi - hull_lo)
                pt = (x1 - x3) * fn.d2(xt) / (2.0 * fn.d1(xt))
                worst[i] = max(worst[i], float(np.max(np.abs(D - 1.0 - pt) / np.abs(x1 - x3))))
        residual[case] = vals
    r = np.max(np.vstack(list(residual.values())), axis=0)
    return ScanReport(spans, omega, residual, worst, _fit_slope(omega, r),
                      {c: _fit_slope(omega, v) for c, v in residual.items()})


def residual_scan_Dist(f, center: float, spans: Sequence[float], moc=None, n: int = 64,
                       seed: int = 0, cases=(1, 2, 3)) -> ScanReport:
    """Scaling of ``|Dist - 1| / |x1 - x3|`` with the span of the quadruple."""
    fn = as_function(f)
    spans = np.asarray(spans, dtype=np.float64)
    moc = _modulus_for(f, moc)
    omega = np.asarray(moc(spans), dtype=np.float64)
    residual = {}
    for case in cases:
        rng = np.random.default_rng([seed, 10 + case])
        vals = np.empty(spans.size)
        for i, s in enumerate(spans):
            x1, x2, x3, x4 = _quads(case, s, center, n, rng)
            dist = cross_distortion(x1, x2, x3, x4, fn)
            vals[i] = float(np.max(np.abs(dist - 1.0) / np.abs(x1 - x3)))
        residual[case] = vals
    r = np.max(np.vstack(list(residual.values())), axis=0)
    return ScanReport(spans, omega, residual, r.copy(), _fit_slope(omega, r),
                      {c: _fit_slope(omega, v) for c, v in residual.items()})
