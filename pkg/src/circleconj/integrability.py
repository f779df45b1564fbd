"""Integrability condition on (gauge, modulus, lambda) and its consequences.

With ``x = lambda^s``, ``y = exp(-u)`` and ``L = -log lambda`` the double
integral of ``phi(log_lambda x) w(y) / y^2`` over ``0 < x < y < 1`` becomes

    I = int_0^inf w(e^-u) E(u / L) du,   E(t) = int_0^inf phi(t + v/L) e^-v dv,

and, integrating in the other order,

    I = R(0),   R(n) = L int_n^inf phi(s) B(L s) ds,
    B(U) = int_0^U e^-(U - u) w(e^-u) du  (= lambda^n times the integral of
    w(y)/y^2 over [lambda^n, 1] at U = n L).

Both routes are evaluated independently.  Integrals over ``[0, inf)`` are
split into dyadic blocks in ``u`` (geometric grids in ``y``), each block
integrated by composite Gauss-Legendre; ``refine`` doubles the panel count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.special import gamma as gamma_fn, gammaincc

from . import _quad
from .errors import Inconclusive, InvalidParams, NotAModulus
from .mocs import ModulusOfContinuity, make_moc
from .numberth import ContinuedFraction, PhiType, delta_inverse, delta_seq, delta_tilde, phi_constant, phi_exponential, phi_power

GL_NODES, GL_WEIGHTS = np.polynomial.legendre.leggauss(16)
LAG_NODES, LAG_WEIGHTS = np.polynomial.laguerre.laggauss(48)
B_ANCHOR_LIMIT = 4096.0
B_WINDOW = 80.0


def _gl(f, a: float, b: float, panels: int) -> float:
    """Composite 16-point Gauss-Legendre of a vectorized ``f`` on ``[a, b]``."""
    if b <= a:
        return 0.0
    edges = np.linspace(a, b, panels + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    x = (mid[:, None] + half[:, None] * GL_NODES[None, :]).ravel()
    w = (half[:, None] * GL_WEIGHTS[None, :]).ravel()
    return float(np.dot(w, f(x)))


def _gl_batch(f, a: np.ndarray, b: np.ndarray, panels: int) -> np.ndarray:
    """Many integrals at once; ``f`` maps a ``(rows, nodes)`` array of abscissae."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    t = (np.arange(panels)[:, None] + 0.5 + 0.5 * GL_NODES[None, :]).ravel() / panels
    wts = np.tile(GL_WEIGHTS, panels) / (2.0 * panels)
    x = a[:, None] + (b - a)[:, None] * t[None, :]
    vals = f(x)
    return (vals * wts[None, :]).sum(axis=1) * (b - a)


# ---------------------------------------------------------------- kernels


def inner_factor(phi: PhiType, t, L: float):
    """``E(t) = int_0^inf phi(t + v/L) e^-v dv`` (infinite if it diverges)."""
    t = np.asarray(t, dtype=np.float64)
    prm = phi.params
    if phi.kind == "constant":
        out = np.full_like(t, float(prm.get("c", 1.0)))
    elif phi.kind == "exponential":
        rate = math.log(float(prm["a"])) / L
        if rate >= 1.0:
            out = np.full_like(t, math.inf)
        else:
            out = float(prm.get("c", 1.0)) * np.power(float(prm["a"]), t) / (1.0 - rate)
    elif phi.kind == "power":
        nu, c = float(prm["nu"]), float(prm.get("c", 1.0))
        z = L * t
        out = np.empty_like(t)
        small = z <= 50.0
        if np.any(small):
            zs = z[small]
            out[small] = c * L**-nu * np.exp(zs) * gamma_fn(nu + 1) * gammaincc(nu + 1, zs)
        if np.any(~small):
            tt = t[~small]
            out[~small] = c * np.power(tt[:, None] + LAG_NODES[None, :] / L, nu) @ LAG_WEIGHTS
    else:
        v = (np.arange(400) + 0.5) * 0.1  # midpoint rule on [0, 40]
        out = (phi(t[..., None] + v / L) * np.exp(-v)).sum(axis=-1) * 0.1
    return out


class _BFunction:
    """``B(U)`` at arbitrary ``U >= 0``.

    Values are anchored on unit steps (plus the modulus endpoint) up to
    ``B_ANCHOR_LIMIT`` by the exact recursion
    ``B(U') = e^-(U'-U) B(U) + int_U^U' e^-(U'-u) w(e^-u) du``; beyond that
    only lags ``U - u`` below ``B_WINDOW`` contribute at double precision.
    """

    def __init__(self, moc: ModulusOfContinuity, refine: int = 1):
        self.moc = moc
        self.panels = 4 * refine
        self.anchors = np.asarray([0.0])
        self.values = np.asarray([0.0])

    def _extend(self, top: float):
        top = min(math.ceil(top) + 1.0, B_ANCHOR_LIMIT)
        if self.anchors[-1] >= top:
            return
        grid = np.arange(0.0, top + 1.0)
        ud = self.moc.u_delta
        if 0 < ud < top:
            grid = np.unique(np.append(grid, ud))
        vals = np.empty(grid.size)
        vals[0] = 0.0
        a, b = grid[:-1], grid[1:]
        pieces = _gl_batch(lambda x: np.exp(-(b[:, None] - x)) * self.moc.of_log(x), a, b, self.panels)
        decay = np.exp(-(b - a))
        for k in range(pieces.size):
            vals[k + 1] = decay[k] * vals[k] + pieces[k]
        self.anchors, self.values = grid, vals

    def __call__(self, U):
        U = np.asarray(U, dtype=np.float64)
        flat = U.ravel()
        out = np.empty_like(flat)
        near = flat <= B_ANCHOR_LIMIT
        if np.any(near):
            self._extend(float(flat[near].max()))
            Un = flat[near]
            k = np.searchsorted(self.anchors, Un, side="right") - 1
            A = self.anchors[k]
            piece = _gl_batch(lambda x: np.exp(-(Un[:, None] - x)) * self.moc.of_log(x), A, Un, self.panels)
            out[near] = np.exp(-(Un - A)) * self.values[k] + piece
        if np.any(~near):
            Uf = flat[~near]
            # integrate over the lag v = U - u so the window survives U ~ 1e16 and beyond
            zeros = np.zeros_like(Uf)
            out[~near] = _gl_batch(lambda v: np.exp(-v) * self.moc.of_log(Uf[:, None] - v),
                                   zeros, zeros + B_WINDOW, 4 * self.panels)
        return out.reshape(U.shape)


def _blocks_from(f, start: float, breaks=(), panels: int = 8, max_blocks: int = 256):
    """Block verdict for ``int_start^inf f``; blocks are split at ``breaks``."""

    def block(j):
        lo = start if j == 0 else start + 2.0 ** (j - 1)
        hi = start + 2.0**j
        cuts = [lo] + sorted(b for b in breaks if lo < b < hi) + [hi]
        return sum(_gl(f, a, b, panels) for a, b in zip(cuts[:-1], cuts[1:]))

    return _quad.classify_blocks(block, max_blocks=max_blocks)


# ------------------------------------------------------------ main integral


@dataclass(frozen=True)
class IntegralResult:
    finite: bool
    value: float
    reason: str
    n_blocks: int = 0

    @property
    def verdict(self) -> str:
        return "finite" if self.finite else "divergent"

    def to_dict(self) -> dict:
        return {"verdict": self.verdict, "value": self.value if self.finite else None,
                "reason": self.reason, "n_blocks": self.n_blocks}


def _from_blocks(v: _quad.BlockVerdict) -> IntegralResult:
    return IntegralResult(v.finite, v.value, v.reason, len(v.blocks))


def _check_lambda(lam: float) -> float:
    if not 0.0 < lam < 1.0:
        raise InvalidParams("lambda must lie in (0, 1)")
    return -math.log(lam)


def main_integral(phi: PhiType, moc: ModulusOfContinuity, lam: float, refine: int = 1) -> IntegralResult:
    """Outer-inner route: ``int_0^inf w(e^-u) E(u/L) du``."""
    L = _check_lambda(lam)
    if not np.isfinite(inner_factor(phi, np.asarray([0.0]), L))[0]:
        return IntegralResult(False, math.inf, "inner integral diverges (gauge grows at least like 1/lambda)")
    f = lambda u: moc.of_log(u) * inner_factor(phi, u / L, L)
    return _from_blocks(_blocks_from(f, 0.0, (moc.u_delta,), 8 * refine))


def main_integral_fubini(phi: PhiType, moc: ModulusOfContinuity, lam: float, refine: int = 1) -> IntegralResult:
    """Inner-outer route: ``R(0) = L int_0^inf phi(s) B(L s) ds``."""
    L = _check_lambda(lam)
    B = _BFunction(moc, refine)
    f = lambda s: L * phi(s) * B(L * s)
    return _from_blocks(_blocks_from(f, 0.0, (moc.u_delta / L,), 8 * refine))


def grid_stability(phi: PhiType, moc: ModulusOfContinuity, lam: float) -> dict:
    """Relative change of the main integral when the panel count doubles."""
    a = main_integral(phi, moc, lam, refine=1)
    b = main_integral(phi, moc, lam, refine=2)
    rel = abs(a.value - b.value) / abs(b.value) if a.finite and b.finite and b.value else math.nan
    return {"coarse": a.value, "fine": b.value, "relative_change": rel,
            "same_verdict": a.finite == b.finite}


# ------------------------------------------------------------ series form


@dataclass(frozen=True)
class SeriesResult:
    terms: np.ndarray
    partial_sums: np.ndarray
    verdict: str
    rate: float
    kind: str
    source: str

    @property
    def finite(self) -> Optional[bool]:
        return {"converging": True, "diverging": False}.get(self.verdict)

    def to_dict(self) -> dict:
        return {"verdict": self.verdict, "rate": self.rate, "kind": self.kind, "source": self.source,
                "partial_sums": self.partial_sums.tolist()}


def gauge_quotients(phi: PhiType, N: int) -> np.ndarray:
    """``k_{n+1} = max(1, ceil phi(n))`` for n = 0..N-1."""
    return np.maximum(1.0, np.ceil(np.asarray(phi(np.arange(N, dtype=np.float64)), dtype=np.float64)))


def series_criterion(moc: ModulusOfContinuity, lam: float, ks=None, phi: Optional[PhiType] = None,
                     N: int = 400, refine: int = 1) -> SeriesResult:
    """Partial sums of ``k_{n+1} lambda^n int_{lambda^n}^1 w(y)/y^2 dy``.

    Actual quotients ``ks`` take precedence over the gauge ``phi``.
    """
    L = _check_lambda(lam)
    if ks is not None:
        ks = np.asarray(ks, dtype=np.float64)[:N]
        source = "quotients"
    elif phi is not None:
        ks = gauge_quotients(phi, N)
        source = "gauge"
    else:
        raise ValueError("need quotients or a gauge")
    n = np.arange(ks.size, dtype=np.float64)
    terms = ks * _BFunction(moc, refine)(n * L)
    v = _quad.finite_series_verdict(terms[1:])  # the n = 0 term is zero
    return SeriesResult(terms, np.cumsum(terms), v["verdict"], v["rate"], v["kind"], source)


# -------------------------------------------------------- case reductions


@dataclass(frozen=True)
class CaseResult:
    case: str
    params: dict
    reduced: IntegralResult
    main: Optional[IntegralResult]

    @property
    def agree(self) -> Optional[bool]:
        return None if self.main is None else self.main.finite == self.reduced.finite

    def to_dict(self) -> dict:
        return {"case": self.case, "params": dict(self.params), "reduced": self.reduced.to_dict(),
                "main": self.main.to_dict() if self.main else None, "agree": self.agree}


def case_gauge(case: str, params: dict, lam: float) -> PhiType:
    """Gauge matching a case: constant, ``n^nu`` or ``a^n`` with ``a = lambda^-b``."""
    if case == "C1":
        return phi_constant()
    if case == "C2":
        return phi_power(float(params["nu"]))
    if case == "C3":
        return phi_exponential(_c3_a(params, lam))
    raise InvalidParams(f"unknown case {case!r}")


def _c3_b(params: dict, lam: float) -> float:
    if "b" in params:
        return float(params["b"])
    return math.log(float(params["a"])) / -math.log(lam)


def _c3_a(params: dict, lam: float) -> float:
    if "a" in params:
        return float(params["a"])
    return lam ** -float(params["b"])


def case_reduction(case: str, moc: ModulusOfContinuity, params: Optional[dict] = None,
                   lam: Optional[float] = None, refine: int = 1) -> CaseResult:
    """Reduced integral of a case, checked against the main integral when ``lam`` is given.

    C1 integrates ``w(y)/y``, C2 ``(-log y)^nu w(y)/y`` and C3 ``w(y)/y^(1+b)``;
    for C3, ``b`` may be given directly or as ``a`` with ``b = log a / log(1/lambda)``.
    """
    params = dict(params or {})
    if case == "C1":
        f = lambda u: moc.of_log(u)
    elif case == "C2":
        nu = float(params.get("nu", math.nan))
        if not nu > 0:
            raise InvalidParams("C2 needs nu > 0")
        f = lambda u: np.power(u, nu) * moc.of_log(u)
    elif case == "C3":
        if "b" not in params and lam is None:
            raise InvalidParams("C3 needs b, or a together with lambda")
        b = _c3_b(params, lam)
        if not b > 0:
            raise InvalidParams("C3 needs b > 0")
        params["b"] = b
        f = lambda u: np.exp(b * u + moc.log_eval(u))
    else:
        raise InvalidParams(f"unknown case {case!r}")
    reduced = _from_blocks(_blocks_from(f, 0.0, (moc.u_delta,), 8 * refine))
    main = None
    if lam is not None:
        main = main_integral(case_gauge(case, params, lam), moc, lam, refine)
    return CaseResult(case, params, reduced, main)


# ------------------------------------------------------- higher regularity


@dataclass
class HigherRegularity:
    n: np.ndarray
    R: np.ndarray
    x: np.ndarray
    omega_tilde: np.ndarray
    tail: IntegralResult
    geometric_rate: float
    power_rate: float
    monotone: bool
    vanishing: bool
    holder_fit: float
    predicted_beta: dict = field(default_factory=dict)

    def R_rows(self):
        return list(zip(self.n.tolist(), self.R.tolist()))

    def omega_rows(self):
        return list(zip(self.x.tolist(), self.omega_tilde.tolist()))

    def to_dict(self) -> dict:
        return {
            "geometric_rate": self.geometric_rate,
            "power_rate": self.power_rate,
            "monotone": self.monotone,
            "vanishing": self.vanishing,
            "holder_fit": self.holder_fit,
            "predicted_beta": dict(self.predicted_beta),
        }


class RFunction:
    """``R(s) = L int_s^inf phi(t) B(L t) dt`` for real ``s`` in ``[0, n_max]``."""

    def __init__(self, phi: PhiType, moc: ModulusOfContinuity, lam: float, n_max: int, refine: int = 1):
        self.L = _check_lambda(lam)
        self.phi = phi
        self.B = _BFunction(moc, refine)
        self.panels = 4 * refine
        L = self.L
        self.integrand = lambda s: L * phi(s) * self.B(L * s)
        ud = moc.u_delta / L
        self.tail = _from_blocks(_blocks_from(self.integrand, float(n_max), (ud,), 8 * refine))
        if not self.tail.finite:
            raise Inconclusive("R is not defined: the integrability condition fails", self.tail)
        edges = np.arange(n_max + 1, dtype=np.float64)
        pieces = np.asarray([self._piece(a, a + 1.0, ud) for a in edges[:-1]])
        self.n_max = n_max
        self.grid = np.append(np.cumsum(pieces[::-1])[::-1], 0.0) + self.tail.value
        self._ud = ud

    def _piece(self, a, b, ud):
        if a < ud < b:
            return _gl(self.integrand, a, ud, self.panels) + _gl(self.integrand, ud, b, self.panels)
        return _gl(self.integrand, a, b, self.panels)

    def __call__(self, s):
        s = np.asarray(s, dtype=np.float64)
        flat = s.ravel()
        out = np.empty_like(flat)
        for i, v in enumerate(flat):
            if v < 0 or v > self.n_max:
                raise InvalidParams("R evaluated outside [0, n_max]")
            top = math.ceil(v)
            out[i] = self.grid[top] + self._piece(v, float(top), self._ud)
        return float(out[0]) if s.ndim == 0 else out.reshape(s.shape)


def _slope(x, y) -> float:
    return float(np.polyfit(x, y, 1)[0])


def higher_regularity(phi: PhiType, moc: ModulusOfContinuity, lam: float,
                      cf: Optional[ContinuedFraction] = None, n_max: int = 60,
                      fit_range=(10, 60), n_x: int = 60, alpha: Optional[float] = None,
                      refine: int = 1, delta_kind: str = "delta") -> HigherRegularity:
    """``R(n)`` for n = 0..n_max and ``w~ = R o Delta^-1`` on a geometric grid.

    Raises :class:`NotAModulus` if ``w~`` is not increasing on the grid.
    """
    Rf = RFunction(phi, moc, lam, n_max, refine)
    n = np.arange(n_max + 1, dtype=np.float64)
    R = Rf.grid.copy()
    lo, hi = fit_range
    sel = (n >= lo) & (n <= hi) & (R > 0)
    geo = math.exp(_slope(n[sel], np.log(R[sel]))) if sel.sum() >= 2 else math.nan
    pw = -_slope(np.log(n[sel]), np.log(R[sel])) if sel.sum() >= 2 else math.nan
    second = n >= n_max / 2
    vanishing = bool(np.all(np.diff(R) < 0) and R[-1] < R[0]
                     and _slope(np.log(n[second]), np.log(np.maximum(R[second], 1e-300))) < -0.05)
    x = np.empty(0)
    wt = np.empty(0)
    monotone = True
    holder = math.nan
    pred = {}
    if cf is not None:
        grid = delta_seq(cf) if delta_kind == "delta" else np.concatenate(([1.0], delta_tilde(cf)))
        top = min(n_max, grid.size - 2)
        x = np.geomspace(grid[top + 1], grid[1], n_x)  # Delta_top .. Delta_0
        wt = Rf(delta_inverse(cf, x, delta_kind))
        monotone = bool(np.all(np.diff(wt) > 0))
        if np.all(wt > 0):
            holder = _slope(np.log(x), np.log(wt))
        if alpha is not None:
            ks = np.asarray(cf.ks, dtype=np.float64)
            theta = float(np.exp(-np.mean(np.log(ks))))
            theta_t = float(np.exp(-np.mean(np.log1p(ks))))
            gaps = delta_seq(cf)[1:]
            theta_d = float(np.exp(_slope(np.arange(gaps.size), np.log(gaps))))
            for label, th in (("theta", theta), ("theta_tilde", theta_t), ("theta_delta", theta_d)):
                pred[label] = 1.0 if th >= 1 else min(1.0, alpha * math.log(lam) / math.log(th))
        report = HigherRegularity(n, R, x, wt, Rf.tail, geo, pw, monotone, vanishing, holder, pred)
        if not monotone:
            raise NotAModulus("R o Delta^-1 is not increasing on the grid", report)
        return report
    return HigherRegularity(n, R, x, wt, Rf.tail, geo, pw, monotone, vanishing, holder, pred)


# ------------------------------------------------------------------ report


@dataclass
class IntegrabilityReport:
    main: IntegralResult
    fubini: IntegralResult
    series: SeriesResult
    case: Optional[CaseResult]
    higher: Optional[HigherRegularity]
    stability: Optional[dict] = None

    @property
    def agree(self) -> bool:
        verdicts = {self.main.finite, self.fubini.finite}
        if self.series.finite is not None:
            verdicts.add(self.series.finite)
        if self.case is not None:
            verdicts.add(self.case.reduced.finite)
        return len(verdicts) == 1

    @property
    def verdict(self) -> str:
        return self.main.verdict

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "main": self.main.to_dict(),
            "fubini": self.fubini.to_dict(),
            "series": self.series.to_dict(),
            "case": self.case.to_dict() if self.case else None,
            "higher_regularity": self.higher.to_dict() if self.higher else None,
            "stability": self.stability,
            "agree": self.agree,
        }


def classify_gauge(phi: PhiType, lam: float) -> tuple:
    """Case tag and parameters for a gauge, or ``("custom", {})``."""
    if phi.kind == "constant":
        return "C1", {}
    if phi.kind == "power":
        return "C2", {"nu": float(phi.params["nu"])}
    if phi.kind == "exponential":
        return "C3", {"a": float(phi.params["a"])}
    return "custom", {}


def integrability_report(phi: PhiType, moc: ModulusOfContinuity, lam: float, ks=None,
                         cf: Optional[ContinuedFraction] = None, N: int = 400, n_max: int = 60,
                         alpha: Optional[float] = None, stability: bool = True) -> IntegrabilityReport:
    main = main_integral(phi, moc, lam)
    fubini = main_integral_fubini(phi, moc, lam)
    series = series_criterion(moc, lam, ks=ks, phi=phi, N=N)
    tag, params = classify_gauge(phi, lam)
    case = case_reduction(tag, moc, params, lam) if tag != "custom" else None
    higher = None
    if main.finite:
        try:
            higher = higher_regularity(phi, moc, lam, cf, n_max, alpha=alpha)
        except NotAModulus as exc:
            higher = exc.report
    stab = grid_stability(phi, moc, lam) if stability and main.finite else None
    return IntegrabilityReport(main, fubini, series, case, higher, stab)


# ------------------------------------------------------------ test matrix


def default_matrix(lam: float = 0.7) -> list:
    """Twenty (case, params, modulus) triples straddling each threshold."""
    lh = lambda a: ("log_holder", {"alpha": a})
    rows = [
        ("C1", {}, ("holder", {"alpha": 0.5}), True),
        ("C1", {}, ("holder", {"alpha": 0.25}), True),
        ("C1", {}, ("lipschitz", {}), True),
        ("C1", {}, lh(1.5), True),
        ("C1", {}, lh(2.0), True),
        ("C1", {}, lh(0.5), False),
        ("C1", {}, lh(0.75), False),
        ("C1", {}, ("iterated_log", {"sigma": [1.0, 1.5]}), True),
        ("C2", {"nu": 1.0}, lh(2.5), True),
        ("C2", {"nu": 1.0}, lh(1.5), False),
        ("C2", {"nu": 1.0}, ("holder", {"alpha": 0.5}), True),
        ("C2", {"nu": 1.0}, ("lipschitz", {}), True),
        ("C2", {"nu": 2.0}, lh(3.5), True),
        ("C2", {"nu": 2.0}, lh(2.5), False),
        ("C2", {"nu": 0.5}, lh(2.0), True),
        ("C2", {"nu": 0.5}, lh(1.25), False),
        ("C3", {"a": 1.2}, ("lipschitz", {}), True),
        ("C3", {"a": 1.5}, ("lipschitz", {}), False),
        ("C3", {"a": 1.1}, ("holder", {"alpha": 0.5}), True),
        ("C3", {"a": 1.0 / lam}, ("holder", {"alpha": 0.5}), False),
    ]
    return [(case, params, make_moc(kind, prm), expected) for case, params, (kind, prm), expected in rows]


def verdict_matrix(lam: float = 0.7, N: int = 400, stability: bool = True) -> list:
    """Both integral routes, series and case reduction verdicts on :func:`default_matrix`."""
    out = []
    for case, params, moc, expected in default_matrix(lam):
        phi = case_gauge(case, params, lam)
        main = main_integral(phi, moc, lam)
        fubini = main_integral_fubini(phi, moc, lam)
        series = series_criterion(moc, lam, phi=phi, N=N)
        red = case_reduction(case, moc, params, lam=None if case != "C3" else lam)
        stab = grid_stability(phi, moc, lam) if stability and main.finite else None
        out.append({
            "case": case,
            "params": {k: v for k, v in params.items()},
            "modulus": moc.to_dict(),
            "expected": "finite" if expected else "divergent",
            "main": main.verdict,
            "main_value": main.value if main.finite else None,
            "fubini": fubini.verdict,
            "series": series.verdict,
            "reduced": red.reduced.verdict,
            "reduced_value": red.reduced.value if red.reduced.finite else None,
            "agree": (main.finite == fubini.finite == red.reduced.finite == expected
                      and series.finite == expected),
            "relative_change": stab["relative_change"] if stab else None,
        })
    return out
