"""Moduli of continuity: builders, Dini test, geometric sums, comparison, fitting.

Every modulus is evaluated through its logarithm as a function of
``u = -log x``, which keeps moduli such as ``x^(1/2)`` meaningful at
``x = exp(-10^6)`` where the value itself underflows.  Above its natural
right endpoint ``delta`` a modulus is continued linearly, ``w(delta) x/delta``,
which preserves monotonicity and subadditivity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import optimize
from scipy.special import logsumexp

from . import _quad
from .errors import (
    DiniViolated,
    Inconclusive,
    InsufficientRange,
    InvalidParams,
    NotAModulus,
    SeriesDiverges,
)
from .kernels import window_oscillation

KINDS = ("lipschitz", "holder", "log_holder", "iterated_log", "power_series",
         "geometric_sum", "empirical")


@dataclass(frozen=True)
class ModulusOfContinuity:
    """An evaluatable modulus with its kind tag and domain endpoint."""

    kind: str
    params: dict
    delta: float
    _core: Callable = field(repr=False, compare=False, default=None)

    @property
    def u_delta(self) -> float:
        return -math.log(self.delta)

    def log_eval(self, u):
        """``log w(exp(-u))``; linear continuation for ``u < -log delta``."""
        u = np.asarray(u, dtype=np.float64)
        ud = self.u_delta
        inside = u >= ud
        out = np.empty_like(u)
        if np.any(inside):
            out[inside] = self._core(u[inside])
        if np.any(~inside):
            out[~inside] = float(self._core(np.asarray([ud]))[0]) - (u[~inside] - ud)
        return float(out) if out.ndim == 0 else out

    def of_log(self, u):
        """``w(exp(-u))``."""
        return np.exp(self.log_eval(u))

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        if np.any(x < 0):
            raise ValueError("modulus evaluated at a negative argument")
        with np.errstate(divide="ignore"):
            u = -np.log(x)
        out = np.where(x > 0, np.exp(self.log_eval(np.where(x > 0, u, 0.0))), 0.0)
        return float(out) if out.ndim == 0 else out

    def zeta(self, x):
        """``x / w(x)``."""
        x = np.asarray(x, dtype=np.float64)
        return np.exp(np.log(x) - self.log_eval(-np.log(x)))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "params": _jsonable(self.params), "delta": self.delta}

    def table(self, hs) -> np.ndarray:
        """Two-column array ``(h, w(h))`` for CSV export."""
        hs = np.asarray(hs, dtype=np.float64)
        return np.column_stack([hs, self(hs)])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


# ---------------------------------------------------------------- builders


def lipschitz(c: float = 1.0) -> ModulusOfContinuity:
    return make_moc("lipschitz", {"c": c})


def holder(alpha: float, c: float = 1.0) -> ModulusOfContinuity:
    return make_moc("holder", {"alpha": alpha, "c": c})


def log_holder(alpha: float) -> ModulusOfContinuity:
    return make_moc("log_holder", {"alpha": alpha})


def iterated_log(sigma) -> ModulusOfContinuity:
    return make_moc("iterated_log", {"sigma": list(sigma)})


def power_series(a, gamma, x_star: float = 1.0) -> ModulusOfContinuity:
    return make_moc("power_series", {"a": list(a), "gamma": list(gamma), "x_star": x_star})


def _iterated_logs(u, depth):
    """Stack of L_1 = u, L_j = log L_{j-1}; rows for j = 1..depth."""
    rows = [np.asarray(u, dtype=np.float64)]
    for _ in range(depth - 1):
        rows.append(np.log(rows[-1]))
    return rows


def _iterated_log_delta(sigma) -> float:
    """Smallest u beyond which every L_j > 1 and the elasticity is at most 1."""
    depth = len(sigma)
    u_min = 1.0
    for _ in range(depth - 1):
        u_min = math.exp(u_min)
    u_min *= 1.0 + 1e-9

    def elasticity(u):
        logs = _iterated_logs(u, depth)
        prod = 1.0
        total = 0.0
        for s, L in zip(sigma, logs):
            prod *= float(L)
            total += s / prod
        return total

    if elasticity(u_min) <= 1.0:
        return u_min
    hi = u_min * 2.0 + 10.0
    while elasticity(hi) > 1.0:
        hi *= 2.0
    return optimize.brentq(lambda v: elasticity(v) - 1.0, u_min, hi, xtol=1e-12, rtol=1e-14)


def _power_series_check(a, gamma, x_star):
    """Partial-sum growth tests for sum a_j x*^g_j and sum a_j tau^g_j / g_j."""
    tau = 0.5 * x_star
    for label, terms in (
        ("sum a_j x*^g_j", a * np.power(x_star, gamma)),
        ("sum a_j tau^g_j / g_j", a * np.power(tau, gamma) / gamma),
    ):
        total = float(terms.sum())
        if not math.isfinite(total):
            raise SeriesDiverges(f"{label} is not finite")
        if terms.size >= 16:
            tail = float(terms[(3 * terms.size) // 4:].sum())
            if tail > 1e-2 * total:
                raise SeriesDiverges(f"{label}: last quarter carries {tail / total:.1%} of the sum")


def make_moc(kind: str, params: Optional[dict] = None, check: bool = True) -> ModulusOfContinuity:
    """Build a modulus of the given kind and run the invariant grid checks."""
    params = dict(params or {})
    if kind == "lipschitz":
        c = float(params.get("c", 1.0))
        if c <= 0:
            raise InvalidParams("lipschitz constant must be positive")
        log_c = math.log(c)
        core = lambda u: log_c - u
        delta = 1.0
    elif kind == "holder":
        alpha = float(params.get("alpha", math.nan))
        c = float(params.get("c", 1.0))
        if not 0 < alpha < 1 or c <= 0:
            raise InvalidParams("holder modulus needs 0 < alpha < 1 and c > 0")
        log_c = math.log(c)
        core = lambda u: log_c - alpha * u
        delta = 1.0
    elif kind == "log_holder":
        alpha = float(params.get("alpha", math.nan))
        if not alpha > 0:
            raise InvalidParams("log-holder index must be positive")
        core = lambda u: -alpha * np.log(u)
        delta = math.exp(-alpha)  # x/w(x) is increasing below this point
    elif kind == "iterated_log":
        sigma = [float(s) for s in params.get("sigma", ())]
        if not sigma or sigma[0] <= 0 or any(s < 0 for s in sigma[1:]) or len(sigma) > 4:
            raise InvalidParams("iterated_log needs 1..4 exponents, the first positive")
        depth = len(sigma)

        def core(u, sigma=sigma, depth=depth):
            logs = _iterated_logs(u, depth)
            return -sum(s * np.log(L) for s, L in zip(sigma, logs))

        delta = math.exp(-_iterated_log_delta(sigma))
    elif kind == "power_series":
        a = np.asarray(params.get("a", ()), dtype=np.float64)
        gamma = np.asarray(params.get("gamma", ()), dtype=np.float64)
        x_star = float(params.get("x_star", 1.0))
        if a.size == 0 or a.size != gamma.size or np.any(a <= 0) or np.any(gamma <= 0) \
                or np.any(gamma > 1) or x_star <= 0:
            raise InvalidParams("power series needs positive a_j, 0 < gamma_j <= 1, x* > 0")
        _power_series_check(a, gamma, x_star)
        log_a = np.log(a)

        def core(u, log_a=log_a, gamma=gamma):
            u = np.asarray(u, dtype=np.float64)
            return logsumexp(log_a[None, :] - np.outer(u, gamma), axis=1).reshape(u.shape)

        delta = x_star
    elif kind == "geometric_sum":
        base = params["base"]
        theta = float(params["theta"])
        if not isinstance(base, ModulusOfContinuity):
            base = moc_from_dict(base)
        core = _geometric_sum_core(base, theta)
        delta = base.delta
        params = {"base": base.to_dict(), "theta": theta}
    elif kind == "empirical":
        hs = np.asarray(params["h"], dtype=np.float64)
        ws = np.asarray(params["w"], dtype=np.float64)
        if hs.size < 2 or np.any(np.diff(hs) <= 0) or np.any(ws <= 0) or np.any(np.diff(ws) < 0):
            raise InvalidParams("empirical table must be increasing and positive")
        exponent = float(params.get("exponent", 1.0))
        uh = -np.log(hs[::-1])
        lw = np.log(ws[::-1])

        def core(u, uh=uh, lw=lw, exponent=exponent):
            u = np.asarray(u, dtype=np.float64)
            out = np.interp(u, uh, lw)
            beyond = u > uh[-1]
            out[beyond] = lw[-1] - exponent * (u[beyond] - uh[-1])
            return out

        delta = float(hs[-1])
    else:
        raise InvalidParams(f"unknown modulus kind {kind!r}")

    def wrapped(u, core=core):
        return np.asarray(core(np.asarray(u, dtype=np.float64)), dtype=np.float64)

    m = ModulusOfContinuity(kind, params, float(delta), wrapped)
    if check:
        report = check_modulus(m, n=40 if kind == "geometric_sum" else 1000)
        if not report["ok"]:
            raise NotAModulus(f"{kind} failed invariant checks: {report['failed']}", report)
    return m


def moc_from_dict(d: dict) -> ModulusOfContinuity:
    return make_moc(d["kind"], d.get("params", {}))


def check_modulus(m: ModulusOfContinuity, n: int = 1000, seed: int = 0) -> dict:
    """Grid checks: monotone, vanishing at 0+, subadditive, x/w(x) monotone."""
    ud = m.u_delta
    u = ud + np.geomspace(1e-6, 1e6, n)
    u = np.concatenate(([ud], u))
    lw = m.log_eval(u)
    failed = []
    if not np.all(np.isfinite(lw)):
        failed.append("non-finite values")
    if np.any(np.diff(lw) >= 0):
        failed.append("not strictly increasing")
    if not m.log_eval(ud + 1e12) < lw[0]:
        failed.append("no decay towards 0+")
    rng = np.random.default_rng(seed)
    x = m.delta * rng.random(n) * 0.5 + 1e-300
    y = m.delta * rng.random(n) * 0.5 + 1e-300
    if np.any(m(x + y) > (m(x) + m(y)) * (1 + 1e-12)):
        failed.append("not subadditive")
    lz = -u - lw  # log zeta along decreasing x
    if np.any(np.diff(lz) > 1e-12 * np.maximum(1.0, np.abs(u[1:]))):
        failed.append("x/w(x) not increasing")
    return {"ok": not failed, "failed": failed}


# --------------------------------------------------------------- Dini test


@dataclass(frozen=True)
class DiniReport:
    integral: _quad.BlockVerdict
    series: _quad.BlockVerdict
    theta: float

    @property
    def finite(self) -> bool:
        return self.integral.finite

    @property
    def agree(self) -> bool:
        return self.integral.finite == self.series.finite

    @property
    def integral_value(self) -> float:
        return self.integral.value

    @property
    def series_value(self) -> float:
        return self.series.value

    def to_dict(self) -> dict:
        return {
            "theta": self.theta,
            "integral": self.integral.to_dict(),
            "series": self.series.to_dict(),
            "agree": self.agree,
        }


def dini_check(m: ModulusOfContinuity, theta: float = 0.5) -> DiniReport:
    """Integral of w(x)/x over (0, delta] and the sum of w(theta^n delta).

    With ``x = exp(-u)`` the integral becomes the integral of ``w(exp(-u))``
    over ``u >= -log delta``; the series samples the same function on the
    lattice ``-log delta + n log(1/theta)``.
    """
    if not 0 < theta < 1:
        raise InvalidParams("theta must lie in (0, 1)")
    ud = m.u_delta
    step = -math.log(theta)
    integral = _quad.integral_to_infinity(lambda u: float(m.of_log(u)), ud)
    series = _quad.series_to_infinity(lambda n: m.of_log(ud + n * step), start=1)
    if integral.finite != series.finite:
        raise Inconclusive("integral and series verdicts disagree",
                           DiniReport(integral, series, theta))
    return DiniReport(integral, series, theta)


def _geometric_sum_core(base: ModulusOfContinuity, theta: float):
    step = -math.log(theta)

    def core(u):
        u = np.asarray(u, dtype=np.float64)
        out = np.empty_like(u)
        for i, ui in enumerate(u.ravel()):
            ref = float(base.log_eval(ui + step))
            verdict = _quad.series_to_infinity(
                lambda n: np.exp(base.log_eval(ui + n * step) - ref), start=1)
            out.ravel()[i] = ref + math.log(verdict.value)
        return out

    return core


def geometric_sum_moc(m: ModulusOfContinuity, theta: float) -> ModulusOfContinuity:
    """``x -> sum_{n>=1} w(theta^n x)``; requires ``w`` to be Dini."""
    try:
        report = dini_check(m, theta)
    except Inconclusive as exc:
        raise DiniViolated(f"Dini condition could not be confirmed: {exc}") from exc
    if not report.finite:
        raise DiniViolated(f"{m.kind} modulus is not Dini")
    return make_moc("geometric_sum", {"base": m, "theta": theta})


# --------------------------------------------------------------- ordering


def weaker_than(m1: ModulusOfContinuity, m2: ModulusOfContinuity, decades: float = 12.0) -> str:
    """Is ``m1`` weaker than ``m2`` near 0, i.e. is limsup w2/w1 finite?

    The log-ratio ``log w2 - log w1`` is tracked on a geometric grid in
    ``u = -log x`` reaching ``10^decades`` beyond the common endpoint.  A
    clear downward trend means the ratio tends to 0, a clear upward trend
    means it is unbounded, and a flat profile means bounded.
    """
    u0 = max(m1.u_delta, m2.u_delta, 1.0)
    u = u0 * np.geomspace(1.0, 10.0**decades, 400)
    ratio = m2.log_eval(u) - m1.log_eval(u)
    mid = ratio[len(ratio) // 4 : len(ratio) // 2]
    late = ratio[-len(ratio) // 8 :]
    change = float(np.max(late) - np.max(mid))
    if change < -1.0:
        return "strictly_weaker"
    if change > 1.0:
        return "not_weaker"
    if abs(change) < 0.1 and np.ptp(ratio[len(ratio) // 4 :]) < 1.0:
        return "weaker"
    return "inconclusive"


# --------------------------------------------------------------- fitting


@dataclass(frozen=True)
class EmpiricalFit:
    """Result of :func:`empirical_moc`."""

    fit_class: str
    exponent: float
    log_holder_index: float
    h: np.ndarray
    omega: np.ndarray
    fit_range: tuple
    modulus: Optional[ModulusOfContinuity]

    @property
    def degenerate(self) -> bool:
        return self.fit_class == "degenerate"

    def rows(self):
        return list(zip(self.h.tolist(), self.omega.tolist()))

    def to_dict(self) -> dict:
        return {
            "class": self.fit_class,
            "exponent": self.exponent,
            "log_holder_index": self.log_holder_index,
            "fit_range": list(self.fit_range),
        }


def empirical_moc(samples, period: Optional[float] = None, n_h: int = 40,
                  min_samples: int = 64) -> EmpiricalFit:
    """Tabulate omega(h) = max |f(x) - f(y)| over |x - y| <= h and fit its order.

    ``samples`` is an ``(N, 2)`` array-like of ``(x, f(x))``.  With
    ``period`` set the data are treated as periodic, so windows wrap around.
    The Hoelder exponent is the log-log slope of omega over separations from
    twice the largest sample spacing upward; if that slope falls below 0.05
    a log-Hoelder index is fitted instead.
    """
    arr = np.asarray(samples, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError("samples must be (x, f(x)) pairs")
    if arr.shape[0] < min_samples:
        raise InsufficientRange(f"need at least {min_samples} samples, got {arr.shape[0]}")
    order = np.argsort(arr[:, 0], kind="stable")
    xs, ys = arr[order, 0], arr[order, 1]
    span = float(xs[-1] - xs[0]) if period is None else float(period)
    gaps = np.diff(xs)
    if period is not None:
        gaps = np.append(gaps, xs[0] + period - xs[-1])
    spacing = float(gaps.max())
    h_lo = 2.0 * spacing
    h_hi = min(span / 16.0, 1000.0 * h_lo)
    if not span > 0 or h_hi / h_lo < 10.0 ** 1.0 or span / max(float(gaps[gaps > 0].min()), 1e-300) < 1e3:
        raise InsufficientRange("sample separations span fewer than three decades")
    if period is not None:
        xs_w = np.concatenate([xs, xs + period])
        ys_w = np.concatenate([ys, ys])
    else:
        xs_w, ys_w = xs, ys
    # whole multiples of the spacing avoid a staircase bias on regular grids
    hs = spacing * np.unique(np.round(np.geomspace(2.0, h_hi / spacing, n_h)))
    omega = window_oscillation(xs_w, ys_w, hs)
    if period is not None:
        omega = np.minimum(omega, window_oscillation(xs_w, ys_w, [period])[0])
    if np.all(omega <= 0):
        return EmpiricalFit("degenerate", math.nan, math.nan, hs, omega, (h_lo, h_hi), None)
    pos = omega > 0
    if pos.sum() < 4:
        raise InsufficientRange("too few positive oscillation values to fit")
    slope = float(np.polyfit(np.log(hs[pos]), np.log(omega[pos]), 1)[0])
    index = math.nan
    if slope >= 0.95:
        fit_class = "lipschitz"
    elif slope >= 0.05:
        fit_class = "holder"
    else:
        fit_class = "log_holder"
        index = -float(np.polyfit(np.log(np.log(1.0 / hs[pos])), np.log(omega[pos]), 1)[0])
    # a strictly increasing table for evaluation
    w = np.maximum.accumulate(np.where(pos, omega, omega[pos].min()))
    w = w * (1.0 + 1e-12 * np.arange(w.size))
    modulus = make_moc("empirical", {"h": hs.tolist(), "w": w.tolist(),
                                     "exponent": max(slope, 1e-3)}, check=False)
    return EmpiricalFit(fit_class, slope, index, hs, omega, (h_lo, h_hi), modulus)
