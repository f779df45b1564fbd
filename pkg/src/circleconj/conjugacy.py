"""Invariant density and conjugacy to the rigid rotation, built from one orbit.

Along the orbit ``gamma`` accumulates ``-log T'``; interpolated linearly on
the sorted orbit points and exponentiated, it gives the invariant density
``h``, and the cumulative integral of ``h`` is the conjugacy ``phi`` with
``phi o T o phi^-1 = R_rho``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _quad, mocs
from .denjoy import _modulus, l_n, return_data, tau_sequence
from .errors import DepthUnavailable, NonPositiveDerivative
from .maps import CircleMap, OrbitData, lift_iterate_split, orbit
from .numberth import QuotientDistribution

PROBE_SHIFT = math.sqrt(2.0) - 1.0  # keeps the probe grid off the orbit


# ------------------------------------------------------------------ gamma


@dataclass(frozen=True)
class GammaData:
    """``gamma`` on ``xi_0..xi_{M-1}`` in orbit order."""

    orbit: OrbitData
    gamma: np.ndarray
    log_d1: np.ndarray

    @property
    def recursion_residual(self) -> float:
        r = np.diff(self.gamma) + self.log_d1[:-1]
        return float(np.max(np.abs(r))) if r.size else 0.0

    @property
    def range(self) -> float:
        return float(np.ptp(self.gamma))


def build_gamma(m: CircleMap, x0: float, M: int) -> GammaData:
    """``gamma(xi_0) = 0`` and ``gamma(xi_{i+1}) = gamma(xi_i) - log T'(xi_i)``."""
    orb = orbit(m, x0, M)
    d1 = np.asarray(m.d1(orb.points), dtype=np.float64)
    if np.any(~(d1 > 0)):
        raise NonPositiveDerivative("T' is not positive on the orbit")
    logs = np.log(d1)
    gamma = np.concatenate(([0.0], -np.cumsum(logs[:-1])))
    return GammaData(orb, gamma, logs)


# ---------------------------------------------------------------- density


def _periodic_trapezoid(xs: np.ndarray, ys: np.ndarray) -> float:
    widths = np.diff(np.append(xs, xs[0] + 1.0))
    return float(np.sum(0.5 * widths * (ys + np.roll(ys, -1))))


@dataclass(frozen=True)
class Density:
    """``h(x) = exp(PL gamma(x)) / Z`` on the circle."""

    xs: np.ndarray        # sorted orbit points in [0, 1)
    gamma: np.ndarray     # gamma at xs
    Z: float

    @property
    def values(self) -> np.ndarray:
        return np.exp(self.gamma) / self.Z

    def gamma_at(self, x):
        return np.interp(np.mod(x, 1.0), self.xs, self.gamma, period=1.0)

    def __call__(self, x):
        return np.exp(self.gamma_at(x)) / self.Z

    def integral(self) -> float:
        return _periodic_trapezoid(self.xs, self.values)


def build_density(g: GammaData) -> Density:
    """Exponentiate the piecewise-linear extension of gamma and normalize."""
    order = g.orbit.order
    xs = g.orbit.points[order]
    gamma = g.gamma[order]
    Z = _periodic_trapezoid(xs, np.exp(gamma))
    return Density(xs, gamma, Z)


# -------------------------------------------------------------- conjugacy


@dataclass(frozen=True)
class Conjugacy:
    """Degree-one lift ``phi(x) = integral of h from xi_0 to x``.

    Between nodes ``h`` is taken linear, so ``phi`` is quadratic there and
    equals the cumulative trapezoid at the nodes; the inverse solves the
    quadratic exactly.
    """

    x0: float
    s: np.ndarray   # node offsets from x0 in [0, 1], closed with s = 1
    h: np.ndarray   # h at the nodes, closed periodically
    C: np.ndarray   # phi at the nodes

    def _panel(self, t):
        k = np.clip(np.searchsorted(self.s, t, side="right") - 1, 0, self.s.size - 2)
        return k

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        shift = x - self.x0
        whole = np.floor(shift)
        t = shift - whole
        k = self._panel(t)
        w = self.s[k + 1] - self.s[k]
        tau = t - self.s[k]
        val = self.C[k] + self.h[k] * tau + (self.h[k + 1] - self.h[k]) * tau**2 / (2.0 * w)
        out = whole + val
        return float(out) if out.ndim == 0 else out

    def inverse(self, v):
        v = np.asarray(v, dtype=np.float64)
        whole = np.floor(v)
        c_all = v - whole
        k = np.clip(np.searchsorted(self.C, c_all, side="right") - 1, 0, self.C.size - 2)
        w = self.s[k + 1] - self.s[k]
        a = (self.h[k + 1] - self.h[k]) / (2.0 * w)
        b = self.h[k]
        c = c_all - self.C[k]
        tau = 2.0 * c / (b + np.sqrt(b * b + 4.0 * a * c))
        out = self.x0 + whole + self.s[k] + tau
        return float(out) if out.ndim == 0 else out

    def min_slope(self) -> float:
        return float(np.min(np.diff(self.C) / np.diff(self.s)))


def build_phi(d: Density, x0: float) -> Conjugacy:
    """Cumulative trapezoid of ``h`` starting at the base point."""
    f0 = x0 - math.floor(x0)
    s = np.mod(d.xs - f0, 1.0)
    order = np.argsort(s, kind="stable")
    s = s[order]
    h = d.values[order]
    s = np.append(s, 1.0)
    h = np.append(h, h[0])
    C = np.concatenate(([0.0], np.cumsum(0.5 * np.diff(s) * (h[1:] + h[:-1]))))
    C = C / C[-1]  # exact closure phi(x0 + 1) = 1
    return Conjugacy(f0, s, h, C)


# -------------------------------------------------------------- residuals


def probe_grid(n: int = 1000) -> np.ndarray:
    return (np.arange(n) + PROBE_SHIFT) / n


def homological_residual(m: CircleMap, d: Density, probes: np.ndarray) -> float:
    """``max |h(T x) T'(x) - h(x)|`` over the probe points."""
    f, _, ld = lift_iterate_split(m, probes, 1)
    return float(np.max(np.abs(d(f) * np.exp(ld) - d(probes))))


def conjugation_residual(m: CircleMap, phi: Conjugacy, rho: float, probes: np.ndarray) -> float:
    """``max |frac(phi(T x) - phi(x)) - rho|`` over the probe points, wrapped."""
    f, c, _ = lift_iterate_split(m, probes, 1)
    base = np.floor(probes)
    step = phi(f) + (c - base) - phi(probes) - rho
    return float(np.max(np.abs(step - np.round(step))))


def equidistribution(phi: Conjugacy, points: np.ndarray, rho: float) -> dict:
    """Compare ``phi(xi_i)`` with the rotation orbit ``i rho`` mod 1.

    ``discrepancy`` is the largest gap between the two empirical
    distribution functions; ``pointwise`` the largest circular distance
    between ``phi(xi_i)`` and ``i rho``.
    """
    M = points.size
    a = np.mod(phi(points), 1.0)
    b = np.mod(np.arange(M) * rho, 1.0)
    diff = a - b
    pointwise = float(np.max(np.abs(diff - np.round(diff))))
    both = np.sort(np.concatenate((a, b)))
    Fa = np.searchsorted(np.sort(a), both, side="right")
    Fb = np.searchsorted(np.sort(b), both, side="right")
    return {"discrepancy": float(np.max(np.abs(Fa - Fb))) / M, "pointwise": pointwise}


# ---------------------------------------------------------------- profile


@dataclass
class ConjugacyProfile:
    N: int
    M: int
    rho: float
    gamma: GammaData
    density: Density
    phi: Conjugacy
    residual_homological: float
    residual_conjugation: float
    discrepancy: float
    pointwise: float
    fitted_regularity: Optional[mocs.EmpiricalFit] = None
    extras: dict = field(default_factory=dict)

    @property
    def orbit(self) -> OrbitData:
        return self.gamma.orbit

    def rows(self):
        xs = self.density.xs
        return list(zip(xs.tolist(), self.density.gamma.tolist(), self.density.values.tolist(),
                        np.mod(self.phi(xs), 1.0).tolist()))

    def to_dict(self) -> dict:
        out = {
            "N": self.N,
            "M": self.M,
            "rho": self.rho,
            "residual_homological": self.residual_homological,
            "residual_conjugation": self.residual_conjugation,
            "discrepancy": self.discrepancy,
            "discrepancy_bound": 2.0 / self.M,
            "pointwise": self.pointwise,
            "gamma_range": self.gamma.range,
            "recursion_residual": self.gamma.recursion_residual,
            "integral_h": self.density.integral(),
            "min_h": float(self.density.values.min()),
            "min_phi_slope": self.phi.min_slope(),
        }
        if self.fitted_regularity is not None:
            out["fitted_regularity"] = self.fitted_regularity.to_dict()
        out.update(self.extras)
        return out


def build_profile(m: CircleMap, N: int = 16, x0: float = 0.0, n_probes: int = 1000,
                  fit: bool = True) -> ConjugacyProfile:
    """Full pipeline on ``M = q_N`` orbit points."""
    data = return_data(m, x0, depth=N + 2)
    if data.depth < N:
        raise DepthUnavailable(f"q_{N} needed, only depth {data.depth} reached")
    M = data.q(N)
    rho = float(data.rho())
    g = build_gamma(m, x0, M)
    d = build_density(g)
    phi = build_phi(d, x0)
    probes = probe_grid(n_probes)
    eq = equidistribution(phi, g.orbit.points, rho)
    fitted = None
    if fit:
        try:
            fitted = mocs.empirical_moc(np.column_stack([d.xs, d.values]), period=1.0)
        except mocs.InsufficientRange:
            fitted = None
    return ConjugacyProfile(
        N, M, rho, g, d, phi,
        homological_residual(m, d, probes),
        conjugation_residual(m, phi, rho, probes),
        eq["discrepancy"], eq["pointwise"], fitted,
    )


def refinement_factors(m: CircleMap, N: int = 16, step: int = 2, x0: float = 0.0) -> dict:
    """Residual ratios between depth ``N - step`` and depth ``N``."""
    coarse = build_profile(m, N - step, x0, fit=False)
    fine = build_profile(m, N, x0, fit=False)
    ratio = lambda a, b: a / b if b > 0 else math.inf
    return {
        "M": (coarse.M, fine.M),
        "homological": (coarse.residual_homological, fine.residual_homological),
        "conjugation": (coarse.residual_conjugation, fine.residual_conjugation),
        "homological_factor": ratio(coarse.residual_homological, fine.residual_homological),
        "conjugation_factor": ratio(coarse.residual_conjugation, fine.residual_conjugation),
    }


# ------------------------------------------------------------- regularity


def predicted_beta(alpha: float, lam: float, theta: float) -> float:
    """``min(1, alpha log lam / log theta)`` for quotients with gap rate ``theta``."""
    if theta >= 1.0:
        return 1.0
    return min(1.0, alpha * math.log(lam) / math.log(theta))


@dataclass(frozen=True)
class RegularityEstimate:
    fit: mocs.EmpiricalFit
    predicted: dict
    comparison: dict

    @property
    def ok(self) -> bool:
        return all(self.comparison.values()) if self.comparison else True

    def to_dict(self) -> dict:
        return {"fit": self.fit.to_dict(), "predicted": dict(self.predicted),
                "comparison": dict(self.comparison), "ok": self.ok}


def estimate_regularity(samples, predicted: Optional[dict] = None) -> RegularityEstimate:
    """Fit a modulus to density samples and compare with predictions.

    ``samples`` is a :class:`ConjugacyProfile`, a :class:`Density` or an
    ``(N, 2)`` array of ``(x, h(x))``.  ``predicted`` may hold ``beta`` (a
    Hoelder exponent), or ``alpha``, ``lambda`` and either ``theta`` or a
    ``distribution`` (with ``tilde`` to use the lower gap rate), or ``sigma``
    (a log-Hoelder index).  Only the one-sided ordering ``fitted >=
    predicted - 0.1`` is asserted.
    """
    if isinstance(samples, ConjugacyProfile):
        samples = samples.density
    if isinstance(samples, Density):
        samples = np.column_stack([samples.xs, samples.values])
    fit = mocs.empirical_moc(samples, period=1.0)
    pred = dict(predicted or {})
    if "beta" not in pred and "alpha" in pred:
        theta = pred.get("theta")
        dist = pred.get("distribution")
        if theta is None and dist is not None:
            if not isinstance(dist, QuotientDistribution):
                dist = QuotientDistribution(*dist)
            theta = dist.theta_tilde() if pred.get("tilde") else dist.theta()
            pred["probabilities"] = list(dist.probs)
        pred.pop("distribution", None)
        if theta is not None:
            pred["theta"] = theta
            pred["beta"] = predicted_beta(pred["alpha"], pred["lambda"], theta)
    comparison = {}
    if fit.degenerate:
        comparison["degenerate"] = True
    else:
        if "beta" in pred:
            comparison["holder_exponent"] = bool(fit.exponent >= pred["beta"] - 0.1)
        if "sigma" in pred:
            if fit.fit_class == "log_holder":
                comparison["log_holder_index"] = bool(fit.log_holder_index >= pred["sigma"] - 0.1)
            else:
                comparison["log_holder_index"] = True  # a power modulus beats any log scale
    return RegularityEstimate(fit, pred, comparison)


# ----------------------------------------------------------- C1 criterion


@dataclass(frozen=True)
class C1Result:
    terms: np.ndarray
    partial_sums: np.ndarray
    verdict: str
    rate: float
    kind: str

    def to_dict(self) -> dict:
        return {
            "terms": self.terms.tolist(),
            "partial_sums": self.partial_sums.tolist(),
            "verdict": self.verdict,
            "rate": self.rate,
            "kind": self.kind,
        }


def c1_criterion(m: Optional[CircleMap] = None, moc=None, ks=None, N: int = 14,
                 taus=None, grid_size: int = 1024, x0: float = 0.0) -> C1Result:
    """Partial sums of ``k_{n+1} tau_n`` for n = 0..N with a tail-trend verdict.

    ``taus`` may be given directly; otherwise they are computed from the map.
    ``ks`` defaults to the map's own partial quotients.
    """
    data = None
    if taus is None:
        if m is None:
            raise ValueError("need a map or explicit taus")
        data = return_data(m, x0, depth=N + 3)
        if data.depth < N + 2:
            raise DepthUnavailable(f"depth {N + 2} needed, only {data.depth} reached")
        moc = _modulus(m, moc)
        ls = [1.0] + [l_n(m, n, grid_size, data) for n in range(N + 1)]
        taus = tau_sequence(ls, moc)
    taus = np.asarray(taus, dtype=np.float64)
    if ks is None:
        if data is None:
            ks = np.ones(taus.size)
        else:
            ks = np.asarray(data.ks[: taus.size], dtype=np.float64)
    ks = np.asarray(ks, dtype=np.float64)[: taus.size]
    terms = ks * taus[: ks.size]
    sums = np.cumsum(terms)
    if np.all(terms == 0):
        return C1Result(terms, sums, "converging", 0.0, "zero")
    v = _quad.finite_series_verdict(terms)
    return C1Result(terms, sums, v["verdict"], v["rate"], v["kind"])
