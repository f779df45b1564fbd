"""Dynamical partitions, partition mesh l_n, tau_n and Denjoy-type checks.

Points near the base point are handled through their signed displacement
``d = X_i - xi_0 - P`` (lifted orbit point minus base point minus whole
turns), so that closest returns keep full precision even when they sit
``1e-6`` away from the base point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np
from scipy import integrate, optimize

from . import crossratio, mocs
from .errors import (
    DepthExhausted,
    DepthUnavailable,
    DerivativeUnderflow,
    PeriodicOrbitDetected,
    PrecisionExhausted,
)
from .maps import CircleMap, _orbit_arrays, closest_returns, denjoy_lambda, lift_iterate_split


# ------------------------------------------------------------ return data


@dataclass(frozen=True)
class ReturnData:
    """Closest returns of one base point with the orbit that produced them.

    ``qs``, ``ps`` and ``ds`` are indexed from level -1 (offset by one);
    ``ps`` include whole turns, so ``ds[n + 1] = X_{q_n} - xi_0 - p_n``.
    """

    x0: float
    ks: tuple
    qs: tuple
    ps: tuple
    ds: tuple
    fracs: np.ndarray
    counts: np.ndarray
    cum_log_d1: np.ndarray
    rho_ref: Fraction

    @property
    def depth(self) -> int:
        return len(self.ks)

    def q(self, n):
        return self.qs[n + 1]

    def p(self, n):
        return self.ps[n + 1]

    def d(self, n):
        return self.ds[n + 1]

    def rho(self) -> Fraction:
        return self.rho_ref

    def delta(self, n: int) -> float:
        """``|q_n rho - p_n|`` with rho the deepest available convergent."""
        return float(abs(self.q(n) * self.rho() - self.p(n)))

    def offset(self, i: int, P: int) -> float:
        """``X_i - xi_0 - P`` at full precision."""
        return float(int(self.counts[i]) - P) + float(self.fracs[i] - self.fracs[0])

    def log_dq(self, start: int, length: int) -> float:
        """``log (T^length)'`` at orbit point ``start``."""
        return float(self.cum_log_d1[start + length] - self.cum_log_d1[start])


def return_data(m: CircleMap, x0: float = 0.0, depth: int = 20, extra: int = 0,
                max_iter: int = 10**7, rho_q_max: int = 2 * 10**6) -> ReturnData:
    """Closest returns up to ``depth`` (fewer if precision runs out).

    The orbit is kept up to ``q_depth + q_{depth-1} + extra`` so that the
    images of every closest return under ``T^{q_n}`` are available.  The
    reference rotation number is the exact parameter for rigid rotations and
    otherwise the convergent reached once return times pass ``rho_q_max``.
    """
    ks, qs, ps, ds = [], [0, 1], [1, 0], [-1.0]
    rho_ref = None
    try:
        gen = closest_returns(m, x0, max_iter)
        whole, _, _, d0 = next(gen)
        ps = [1, whole]
        ds.append(d0)
        rho_ref = Fraction(whole)
        for k, q, p, d in gen:
            rho_ref = Fraction(p + whole * q, q)
            if len(ks) < depth:
                ks.append(k)
                qs.append(q)
                ps.append(p + whole * q)
                ds.append(d)
            elif q > rho_q_max:
                break
    except PeriodicOrbitDetected as exc:
        rho_ref = Fraction(exc.rho)
    except (DepthExhausted, PrecisionExhausted):
        pass
    if m.family == "rigid":
        rho_ref = Fraction(float(m.params["rho"]))
    if rho_ref is None:
        rho_ref = Fraction(ps[-1], qs[-1])
    n_orbit = qs[-1] + qs[-2] + extra + 1
    f0 = x0 - math.floor(x0)
    fracs, counts = _orbit_arrays(m, f0, 0, n_orbit)
    logs = np.log(m.d1(fracs[:-1]))
    if not np.all(np.isfinite(logs)):
        raise DerivativeUnderflow("log T' not finite along the orbit")
    cum = np.concatenate(([0.0], np.cumsum(logs)))
    return ReturnData(f0, tuple(ks), tuple(qs), tuple(ps), tuple(ds), fracs, counts, cum, rho_ref)


# -------------------------------------------------------------- partition


@dataclass(frozen=True)
class DynamicalPartition:
    """Level-``n`` partition: ``q_{n+1}`` segments of level n and ``q_n`` of level n+1.

    Segment ``j`` runs from orbit index ``left[j]`` to ``right[j]``; ``start``
    is its left end in ``[0, 1)`` and ``length`` its length.
    """

    n: int
    x0: float
    level: np.ndarray
    base: np.ndarray
    left: np.ndarray
    right: np.ndarray
    start: np.ndarray
    length: np.ndarray

    def segment_lengths(self, level: int) -> np.ndarray:
        return self.length[self.level == level]

    def check(self) -> dict:
        """Disjointness and coverage of the circle, from sorted endpoints."""
        order = np.argsort(self.start, kind="stable")
        left, right = self.left[order], self.right[order]
        chained = bool(np.all(right == np.roll(left, -1)))
        ends = np.append(self.start[order], self.start[order][0] + 1.0)
        disjoint = bool(np.all(ends[:-1] + self.length[order] <= ends[1:] + 1e-15)) and chained
        total = float(self.length.sum())
        return {"disjoint": disjoint, "chained": chained, "total_length": total,
                "covers": abs(total - 1.0) < 1e-9}


def build_partition(m: CircleMap, x0: float, n: int, data: Optional[ReturnData] = None) -> DynamicalPartition:
    """Fundamental segments of levels n and n+1 from the orbit of ``x0``."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    if data is None or data.depth < n + 1:
        data = return_data(m, x0, depth=n + 2)
    if data.depth < n + 1:
        raise DepthUnavailable(f"level {n} needs q_{n + 1}; only depth {data.depth} reached")
    levels, bases, lefts, rights, starts, lengths = [], [], [], [], [], []
    for lev, count in ((n, data.q(n + 1)), (n + 1, data.q(n))):
        q, p = data.q(lev), data.p(lev)
        i = np.arange(count)
        disp = (data.counts[i + q] - data.counts[i] - p).astype(np.float64) + (data.fracs[i + q] - data.fracs[i])
        even = lev % 2 == 0
        left = i if even else i + q
        right = i + q if even else i
        levels.append(np.full(count, lev))
        bases.append(i)
        lefts.append(left)
        rights.append(right)
        starts.append(data.fracs[left])
        lengths.append(np.abs(disp))
    return DynamicalPartition(
        n, data.x0,
        np.concatenate(levels), np.concatenate(bases), np.concatenate(lefts),
        np.concatenate(rights), np.concatenate(starts), np.concatenate(lengths),
    )


def ordering_holds(data: ReturnData, levels: int) -> bool:
    """Odd closest returns increase towards the base point from the left, even ones decrease from the right."""
    d = np.asarray([data.d(k) for k in range(-1, min(levels, data.depth) + 1)])
    odd = d[0::2]   # levels -1, 1, 3, ...
    even = d[1::2]  # levels 0, 2, 4, ...
    return bool(np.all(odd < 0) and np.all(even > 0) and np.all(np.diff(odd) > 0)
                and np.all(np.diff(even) < 0))


# --------------------------------------------------------------------- l_n


def _deviation(m: CircleMap, x, q: int, p: int):
    f, c, ld = lift_iterate_split(m, x, q)
    base = np.floor(x)
    return (c - base - p).astype(np.float64) + (f - (x - base)), ld


def l_n(m: CircleMap, n: int, grid_size: int = 1024, data: Optional[ReturnData] = None,
        tol: float = 1e-8, with_derivative: bool = False):
    """``max |T^{q_n}(x) - x - p_n|`` over the circle.

    The grid has ``max(grid_size, 8 q_{n+1})`` points and is doubled until
    the maximum moves by less than ``tol``; the best grid points are then
    polished with a bounded scalar search.  With ``with_derivative=True``
    also returns ``sup |(T^{q_n})' - 1|`` and ``sup |log (T^{q_n})'|`` on the
    final grid.
    """
    if data is None or data.depth < n + 1:
        data = return_data(m, 0.0, depth=n + 2)
    if n == -1:
        return (1.0, 0.0, 0.0) if with_derivative else 1.0
    q, p = data.q(n), data.p(n)
    size = max(grid_size, 8 * data.q(min(n + 1, data.depth)))
    prev = None
    while True:
        x = np.arange(size, dtype=np.float64) / size
        dev, ld = _deviation(m, x, q, p)
        val = float(np.max(np.abs(dev)))
        if prev is not None and abs(val - prev) < tol:
            break
        prev = val
        size *= 2
        if size > 2**22:
            break
    # polish around the three best grid points
    h = 1.0 / size
    best = val
    for j in np.argsort(-np.abs(dev))[:3]:
        sgn = 1.0 if dev[j] >= 0 else -1.0
        res = optimize.minimize_scalar(
            lambda t: -sgn * float(_deviation(m, np.asarray([t]), q, p)[0][0]),
            bounds=(x[j] - h, x[j] + h), method="bounded", options={"xatol": 1e-13})
        best = max(best, -float(res.fun))
    if with_derivative:
        return best, float(np.max(np.abs(np.expm1(ld)))), float(np.max(np.abs(ld)))
    return best


# ------------------------------------------------------------------- tau_n


class _ZeroModulus:
    """Modulus of ``T''`` for rigid rotations, where ``T''`` vanishes."""

    kind = "zero"

    def __call__(self, x):
        return np.zeros(np.shape(x)) if np.ndim(x) else 0.0

    def of_log(self, u):
        return np.zeros(np.shape(u)) if np.ndim(u) else 0.0

    def to_dict(self):
        return {"kind": "zero"}


def _modulus(m: CircleMap, moc):
    if moc is not None:
        return moc
    if m.family == "rigid":
        return _ZeroModulus()
    return mocs.lipschitz() if m.smoothness == "lipschitz" else mocs.make_moc(**m.smoothness)


def tau_sequence(ls, moc) -> np.ndarray:
    """``tau_n = sum_{k=0}^{n} (l_n / l_{n-k}) w(l_{n-k-1})`` from ``l_{-1}, l_0, ...``."""
    ls = np.asarray(ls, dtype=np.float64)
    w = np.asarray(moc(ls), dtype=np.float64)
    out = np.empty(ls.size - 1)
    for n in range(ls.size - 1):
        idx = n + 1  # position of l_n
        k = np.arange(n + 1)
        out[n] = float(np.sum(ls[idx] / ls[idx - k] * w[idx - k - 1]))
    return out


def tau_bound(n: int, lam: float, moc) -> float:
    """``lam^n`` times the integral of ``w(y)/y^2`` over ``[lam^n, 1]``."""
    L = -math.log(lam)
    top = n * L
    if top == 0.0:
        return 0.0
    # y = exp(-u): the integrand becomes exp(u) w(exp(-u)); scale by exp(-top)
    f = lambda u: math.exp(u - top) * float(moc.of_log(u))
    val, _ = integrate.quad(f, 0.0, top, limit=200, epsrel=1e-10)
    return val


def tau_n(m: CircleMap, moc, n: int, grid_size: int = 1024, data: Optional[ReturnData] = None):
    """``(tau_n, bound)`` for the map, with ``l_k`` computed for k = -1..n."""
    if data is None or data.depth < n + 2:
        data = return_data(m, 0.0, depth=n + 2)
    moc = _modulus(m, moc)
    ls = [1.0] + [l_n(m, k, grid_size, data) for k in range(0, n + 1)]
    lam = denjoy_lambda(m).lam
    return float(tau_sequence(ls, moc)[-1]), tau_bound(n, lam, moc)


# --------------------------------------------------------------- identities


class _Power:
    """``T^q - p`` restricted to points near the base point, in displacement form."""

    def __init__(self, data: ReturnData, q: int, p: int):
        self.data, self.q, self.p = data, q, p

    def image(self, i: int, P: int) -> float:
        """Displacement of the image of orbit point ``i`` (offset ``P``)."""
        return self.data.offset(i + self.q, P + self.p)

    def dd(self, a, b) -> float:
        """Divided difference between orbit points ``a = (i, P)`` and ``b``."""
        if a == b:
            return math.exp(self.data.log_dq(a[0], self.q))
        da = self.data.offset(*a)
        db = self.data.offset(*b)
        return (self.image(*b) - self.image(*a)) / (db - da)


@dataclass(frozen=True)
class IdentityCheck:
    n: int
    residuals: tuple
    M: dict
    K: dict
    m_n: float
    log_dist_max: float = math.nan
    log_dist_constant: float = math.nan

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "residuals": list(self.residuals),
            "M": dict(self.M),
            "K": dict(self.K),
            "m_n": self.m_n,
            "log_dist_max": self.log_dist_max,
            "log_dist_constant": self.log_dist_constant,
        }


def mk_identity_check(m: CircleMap, x0: float, n: int, data: Optional[ReturnData] = None,
                      moc=None, samples: int = 0, l_prev: Optional[float] = None) -> IdentityCheck:
    """Residuals of the three exact relations between the M_n and K_n distortions.

    ``M_n(xi) = D(xi_0, xi, xi_{q_{n-1}}; T^{q_n})`` and
    ``K_n(xi) = D(xi_0, xi, xi_{q_n}; T^{q_{n-1}})``.  The relations checked are

    1. ``M_n(xi_0) M_n(xi_{q_{n-1}}) = K_n(xi_0) K_n(xi_{q_n})``;
    2. ``K_{n+1}(xi_{q_{n-1}}) - 1 = (|d_{n+1}|/|d_{n-1}|) (M_n(xi_{q_{n+1}}) - 1)``;
    3. ``(T^{q_n})'(xi_0)/M_n(xi_0) - 1 = (|d_n|/|d_{n-1}|) (1 - (T^{q_{n-1}})'(xi_0)/K_n(xi_0))``.

    With ``samples > 0`` the log cross-ratio distortion of ``T^{q_n}`` over
    random points of the segment between ``xi_0`` and ``xi_{q_{n-1}}`` is
    also measured and divided by ``w(l_{n-1})``.
    """
    if n < 1:
        raise ValueError("identities need n >= 1")
    if data is None or data.depth < n + 1:
        data = return_data(m, x0, depth=n + 2)
    if data.depth < n + 1:
        raise DepthUnavailable(f"identities at level {n} need q_{n + 1}")
    F = _Power(data, data.q(n), data.p(n))
    G = _Power(data, data.q(n - 1), data.p(n - 1))
    o = (0, 0)
    a = (data.q(n - 1), data.p(n - 1))
    b = (data.q(n), data.p(n))
    c = (data.q(n + 1), data.p(n + 1))
    M0 = F.dd(o, o) / F.dd(o, a)
    Ma = F.dd(o, a) / F.dd(a, a)
    Mc = F.dd(o, c) / F.dd(c, a)
    K0 = G.dd(o, o) / G.dd(o, b)
    Kb = G.dd(o, b) / G.dd(b, b)
    K1a = F.dd(o, a) / F.dd(a, c)  # K_{n+1}(xi_{q_{n-1}}) uses T^{q_n}
    d_prev, d_cur, d_next = abs(data.d(n - 1)), abs(data.d(n)), abs(data.d(n + 1))
    r1 = M0 * Ma - K0 * Kb
    r2 = (K1a - 1.0) - d_next / d_prev * (Mc - 1.0)
    r3 = (F.dd(o, o) / M0 - 1.0) - d_cur / d_prev * (1.0 - G.dd(o, o) / K0)
    ld_max = ld_c = math.nan
    if samples > 0:
        moc = _modulus(m, moc)
        if l_prev is None:
            l_prev = l_n(m, n - 1, data=data)
        ld_max = log_dist_sample(m, data, n, samples)
        w = float(moc(l_prev))
        ld_c = ld_max / w if w > 0 else (0.0 if ld_max == 0 else math.inf)
    return IdentityCheck(
        n, (abs(r1), abs(r2), abs(r3)),
        {"xi0": M0, "xi_q_prev": Ma, "xi_q_next": Mc},
        {"xi0": K0, "xi_q": Kb, "next_at_xi_q_prev": K1a},
        math.sqrt(M0 * Ma), ld_max, ld_c,
    )


def log_dist_sample(m: CircleMap, data: ReturnData, n: int, samples: int, seed: int = 0) -> float:
    """max |log Dist(xi_0, xi, xi_{q_{n-1}}, eta; T^{q_n})| over random xi, eta."""
    rng = np.random.default_rng([seed, n])
    x0 = data.x0
    d_prev = data.d(n - 1)
    q, p = data.q(n), data.p(n)
    t = rng.uniform(0.02, 0.98, size=(samples, 2))
    pts = np.concatenate(([0.0, d_prev], (t * d_prev).ravel()))
    f, c, ld = lift_iterate_split(m, x0 + pts, q)
    base = np.floor(x0 + pts)
    img = (c - p).astype(np.float64) + (f - x0)  # image displacement from x0
    values = dict(zip(pts.tolist(), img.tolist()))
    derivs = dict(zip(pts.tolist(), np.exp(ld).tolist()))
    fn = crossratio.SmoothFunction(
        lambda y: np.vectorize(values.__getitem__)(np.asarray(y)),
        lambda y: np.vectorize(derivs.__getitem__)(np.asarray(y)),
    )
    xi = pts[2::2]
    eta = pts[3::2]
    dist = crossratio.cross_distortion(np.zeros_like(xi), xi, np.full_like(xi, d_prev), eta, fn)
    return float(np.max(np.abs(np.log(dist))))


# ------------------------------------------------------------------ report


@dataclass
class DenjoyReport:
    ns: np.ndarray
    qs: np.ndarray
    deltas: np.ndarray
    ls: np.ndarray
    taus: np.ndarray
    tau_bounds: np.ndarray
    sup_dev: np.ndarray
    sup_log: np.ndarray
    ratio: np.ndarray
    residuals: np.ndarray
    m_n: np.ndarray
    lam: float
    lam_emp: float
    partition_ok: bool
    ordering_ok: bool
    extras: dict = field(default_factory=dict)

    def rows(self):
        return [
            (int(n), int(q), float(d), float(l), float(t), float(s), float(r))
            for n, q, d, l, t, s, r in zip(self.ns, self.qs, self.deltas, self.ls,
                                           self.taus, self.sup_dev, self.ratio)
        ]

    def checks(self) -> dict:
        last = self.sup_log[-6:]
        growth = float(np.polyfit(np.arange(last.size), last, 1)[0]) if last.size >= 2 else 0.0
        finite_ratio = self.ratio[np.isfinite(self.ratio) & (self.taus > 0)]
        trend = float(finite_ratio[-1] / finite_ratio[0]) if finite_ratio.size >= 2 and finite_ratio[0] > 0 else 0.0
        return {
            "l_ge_delta": bool(np.all(self.ls >= self.deltas * (1 - 1e-12))),
            "lambda_emp_le_lambda": bool(self.lam_emp <= self.lam + 0.02),
            "sup_log_max": float(np.max(self.sup_log)),
            "sup_log_growth": growth,
            "ratio_trend": trend,
            "ratio_max": float(np.max(finite_ratio)) if finite_ratio.size else 0.0,
            "max_identity_residual": float(np.nanmax(self.residuals)) if self.residuals.size else 0.0,
            "partition_ok": self.partition_ok,
            "ordering_ok": self.ordering_ok,
        }

    def to_dict(self) -> dict:
        return {
            "n": self.ns.tolist(),
            "q": self.qs.tolist(),
            "delta": self.deltas.tolist(),
            "l": self.ls.tolist(),
            "tau": self.taus.tolist(),
            "tau_bound": self.tau_bounds.tolist(),
            "sup_dev": self.sup_dev.tolist(),
            "sup_log": self.sup_log.tolist(),
            "ratio": self.ratio.tolist(),
            "identity_residuals": self.residuals.tolist(),
            "m_n": self.m_n.tolist(),
            "lambda": self.lam,
            "lambda_emp": self.lam_emp,
            "checks": self.checks(),
            **self.extras,
        }


def denjoy_inequality_report(m: CircleMap, moc=None, N: int = 14, grid_size: int = 1024,
                             x0: float = 0.0, distortion_samples: int = 0) -> DenjoyReport:
    """Levels 0..N of l_n, tau_n and the derivative deviation of ``T^{q_n}``."""
    data = return_data(m, x0, depth=N + 8)
    if data.depth < N + 2:
        raise DepthUnavailable(f"depth {N + 2} needed, only {data.depth} reached")
    moc = _modulus(m, moc)
    ns = np.arange(0, N + 1)
    ls, devs, logs = [], [], []
    for n in ns:
        l, dev, lg = l_n(m, int(n), grid_size, data, with_derivative=True)
        ls.append(l)
        devs.append(dev)
        logs.append(lg)
    ls = np.asarray(ls)
    taus = tau_sequence(np.concatenate(([1.0], ls)), moc)
    lam = denjoy_lambda(m).lam
    bounds = np.asarray([tau_bound(int(n), lam, moc) for n in ns])
    devs = np.asarray(devs)
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.where(taus > 0, devs / taus, 0.0)
    fit = ns >= 3
    lam_emp = float(np.exp(np.polyfit(ns[fit], np.log(ls[fit]), 1)[0])) if fit.sum() >= 2 else math.nan
    residuals, m_ns, lconst = [], [], []
    for n in range(1, N + 1):
        chk = mk_identity_check(m, x0, n, data, moc, samples=distortion_samples,
                                l_prev=float(ls[n - 1]))
        residuals.append(chk.residuals)
        m_ns.append(chk.m_n)
        lconst.append(chk.log_dist_constant)
    part_ok = all(build_partition(m, x0, int(n), data).check()["disjoint"] for n in ns)
    extras = {}
    if distortion_samples:
        extras["log_dist_constant"] = lconst
    return DenjoyReport(
        ns, np.asarray([data.q(int(n)) for n in ns]),
        np.asarray([data.delta(int(n)) for n in ns]), ls, taus, bounds, devs,
        np.asarray(logs), ratio, np.asarray(residuals), np.asarray(m_ns), lam, lam_emp,
        part_ok, ordering_holds(data, N), extras,
    )
