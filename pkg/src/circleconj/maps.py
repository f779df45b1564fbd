"""Degree-one circle maps, orbits, rotation numbers and parameter tuning.

Orbit points are stored as a winding count plus a fractional part, so the
position on the circle keeps full double precision however many turns the
lift has made.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterator, Optional, Sequence

import numpy as np
from scipy import integrate, optimize

from . import kernels
from .errors import (
    DepthExhausted,
    InvalidParams,
    NoConvergence,
    NotADiffeo,
    PeriodicOrbitDetected,
    QuadratureFailure,
)
from .numberth import NAMED_CONSTANTS, ContinuedFraction, cf_expand

TWO_PI = 2.0 * math.pi
EPS = float(np.finfo(np.float64).eps)
# a return closer than this many ulps per iterate counts as exact
RETURN_TOL = 1e3
GRID = 4096
SECANT_FLOOR = math.sqrt(EPS)


@dataclass(frozen=True, eq=False)
class CircleMap:
    """Lift of an orientation-preserving circle diffeomorphism.

    ``lift``, ``d1`` and ``d2`` are vectorized callables.  ``smoothness``
    names the modulus of continuity admitted by the second derivative.
    """

    family: str
    params: dict
    lift: Callable = field(repr=False)
    d1: Callable = field(repr=False)
    d2: Callable = field(repr=False)
    smoothness: str = "lipschitz"

    @property
    def is_sine(self) -> bool:
        return self.family in ("rigid", "sine")

    @property
    def omega(self) -> float:
        return float(self.params.get("omega", self.params.get("rho", 0.0)))

    @property
    def K(self) -> float:
        return float(self.params.get("K", 0.0))

    def __call__(self, x):
        y = self.lift(np.asarray(x, dtype=np.float64))
        return y - np.floor(y)

    def log_d1(self, x):
        return np.log(self.d1(np.asarray(x, dtype=np.float64)))

    def divided_difference(self, a, b):
        """Slope of the lift between ``a`` and ``b``.

        Below ``sqrt(eps)`` separation the secant is dominated by rounding in
        the lift, so the derivative at the midpoint is returned instead.
        """
        a = np.asarray(a, dtype=np.float64)
        b = np.asarray(b, dtype=np.float64)
        if self.family == "rigid":
            return np.ones(np.broadcast(a, b).shape)
        close = np.abs(b - a) <= SECANT_FLOOR * np.maximum(1.0, np.abs(a))
        with np.errstate(invalid="ignore", divide="ignore"):
            out = (self.lift(b) - self.lift(a)) / (b - a)
        return np.where(close, self.d1(0.5 * (a + b)), out)

    def to_dict(self) -> dict:
        if self.family == "custom":
            return {"family": "custom", "params": {"smoothness": self.smoothness}}
        return {"family": self.family, "params": dict(self.params)}


def _validate(lift, d1, d2, check_d2=True):
    x = np.arange(GRID, dtype=np.float64) / GRID
    if np.max(np.abs(lift(x + 1.0) - lift(x) - 1.0)) >= 1e-12:
        raise InvalidParams("lift is not of degree one")
    if np.min(d1(x)) <= 0:
        raise NotADiffeo("derivative is not positive on the whole circle")
    if check_d2:
        h = 1e-4
        fd = (d1(x + h) - d1(x - h)) / (2 * h)
        scale = max(1.0, float(np.max(np.abs(d2(x)))))
        if np.max(np.abs(fd - d2(x))) > 1e-6 * scale:
            raise InvalidParams("second derivative inconsistent with the first")


def make_map(family, **params) -> CircleMap:
    """Build a circle map.

    ``family`` is ``"rigid"`` (``rho``), ``"sine"`` (``omega``, ``K``) or
    ``"custom"`` (``lift``, ``d1``, ``d2`` and an optional ``smoothness``);
    a ``{"family": ..., "params": {...}}`` dict is also accepted.
    """
    if isinstance(family, dict):
        params = {**family.get("params", {}), **params}
        family = family["family"]
    if isinstance(params.get("rho"), str):
        params["rho"] = NAMED_CONSTANTS[params["rho"]]
    if family == "rigid":
        rho = float(params["rho"])
        return CircleMap(
            "rigid", {"rho": rho},
            lift=lambda x: np.asarray(x, dtype=np.float64) + rho,
            d1=lambda x: np.ones_like(np.asarray(x, dtype=np.float64)),
            d2=lambda x: np.zeros_like(np.asarray(x, dtype=np.float64)),
            smoothness="lipschitz",
        )
    if family == "sine":
        omega = float(params["omega"])
        K = float(params.get("K", 0.0))
        if abs(K) >= 1.0:
            raise NotADiffeo(f"sine family with K={K}: derivative 1 - K cos vanishes")
        a = K / TWO_PI
        lift = lambda x: x + omega - a * np.sin(TWO_PI * np.asarray(x, dtype=np.float64))
        d1 = lambda x: 1.0 - K * np.cos(TWO_PI * np.asarray(x, dtype=np.float64))
        d2 = lambda x: TWO_PI * K * np.sin(TWO_PI * np.asarray(x, dtype=np.float64))
        return CircleMap("sine", {"omega": omega, "K": K}, lift, d1, d2, "lipschitz")
    if family == "custom":
        lift, d1, d2 = params["lift"], params["d1"], params["d2"]
        _validate(lift, d1, d2)
        return CircleMap("custom", {}, lift, d1, d2, params.get("smoothness", "lipschitz"))
    raise InvalidParams(f"unknown map family {family!r}")


# ------------------------------------------------------------------ orbits


def _split(x):
    x = np.asarray(x, dtype=np.float64)
    base = np.floor(x)
    return x - base, base.astype(np.int64)


def lift_iterate_split(m: CircleMap, x, n: int):
    """``(fracs, counts, log_derivative)`` of the lift iterated ``n`` times."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    if m.is_sine:
        return kernels.sine_lift_batch(np.asarray(x, dtype=np.float64), n, m.omega, m.K)
    f, c = _split(x)
    f = np.array(f, dtype=np.float64)
    ld = np.zeros_like(f)
    for _ in range(n):
        ld += m.log_d1(f)
        y = m.lift(f)
        f, dc = _split(y)
        c = c + dc
    return f, c, ld


def lift_iterate(m: CircleMap, x, n: int):
    """The lift applied ``n`` times (a real number, not reduced mod 1)."""
    f, c, _ = lift_iterate_split(m, x, n)
    out = c + f
    return float(out) if np.ndim(out) == 0 else out


def iterate(m: CircleMap, x, n: int):
    """``T^n(x)`` on the circle, in ``[0, 1)``."""
    f, _, _ = lift_iterate_split(m, x, n)
    return float(f) if np.ndim(f) == 0 else f


def log_derivative(m: CircleMap, x, n: int):
    """``log (T^n)'(x)`` by summing ``log T'`` along the orbit."""
    _, _, ld = lift_iterate_split(m, x, n)
    return float(ld) if np.ndim(ld) == 0 else ld


def _orbit_arrays(m: CircleMap, frac0: float, count0: int, n: int):
    """Points 0..n of the orbit of ``count0 + frac0``."""
    if m.is_sine:
        return kernels.sine_orbit(float(frac0), int(count0), int(n), m.omega, m.K)
    fracs = np.empty(n + 1)
    counts = np.empty(n + 1, dtype=np.int64)
    f, c = float(frac0), int(count0)
    for i in range(n + 1):
        fracs[i] = f
        counts[i] = c
        y = float(m.lift(np.asarray(f)))
        fl = math.floor(y)
        f, c = y - fl, c + fl
    return fracs, counts


@dataclass(frozen=True)
class OrbitData:
    """The first ``M`` points of an orbit, with their circular order."""

    x0: float
    points: np.ndarray
    counts: np.ndarray

    @property
    def size(self) -> int:
        return self.points.size

    @property
    def order(self) -> np.ndarray:
        return np.argsort(self.points, kind="stable")

    @property
    def sorted_points(self) -> np.ndarray:
        return self.points[self.order]

    def lifted(self) -> np.ndarray:
        return self.counts + self.points

    def min_spacing(self) -> float:
        s = self.sorted_points
        gaps = np.diff(np.append(s, s[0] + 1.0))
        return float(gaps.min())

    def distinct(self, tol: float = 1e-14) -> bool:
        return self.min_spacing() > tol

    def rows(self):
        return [(i, float(v)) for i, v in enumerate(self.points)]


def orbit(m: CircleMap, x0: float, M: int) -> OrbitData:
    """Orbit points ``xi_i = T^i(xi_0)`` for ``i = 0..M-1``."""
    if M < 1:
        raise ValueError("M must be positive")
    f0, c0 = _split(x0)
    fracs, counts = _orbit_arrays(m, float(f0), int(c0), M - 1)
    return OrbitData(float(f0), fracs, counts - int(c0))


# -------------------------------------------------------- rotation numbers


class _LazyOrbit:
    """Orbit of the base point, extended in doubling chunks."""

    def __init__(self, m: CircleMap, x0: float, max_iter: int, precision: str = "standard"):
        self.m = m
        self.max_iter = max_iter
        self.precision = precision
        f0, _ = _split(x0)
        self.f0 = float(f0)
        if precision == "extended":
            self._init_mp()
        else:
            self.fracs, self.counts = _orbit_arrays(m, self.f0, 0, min(1024, max_iter))

    def _init_mp(self):
        import mpmath

        if not self.m.is_sine:
            raise InvalidParams("extended precision is available for the sine family only")
        self.mp = mpmath.mp.clone() if hasattr(mpmath.mp, "clone") else mpmath.mp
        self._mp = mpmath
        self.ctx = mpmath.MPContext()
        self.ctx.dps = 32
        ctx = self.ctx
        self.mp_omega = ctx.mpf(self.m.omega)
        self.mp_a = ctx.mpf(self.m.K) / (2 * ctx.pi)
        self.mp_2pi = 2 * ctx.pi
        self.fracs = [ctx.mpf(self.f0)]
        self.counts = [0]

    def __len__(self):
        return len(self.fracs)

    def ensure(self, n: int) -> bool:
        """Make indices up to ``n`` available; False if beyond the budget."""
        if n > self.max_iter:
            return False
        have = len(self.fracs) - 1
        if n <= have:
            return True
        target = min(self.max_iter, max(n, 2 * have))
        if self.precision == "extended":
            ctx = self.ctx
            f, c = self.fracs[-1], self.counts[-1]
            for _ in range(target - have):
                f = f + self.mp_omega - self.mp_a * ctx.sin(self.mp_2pi * f)
                fl = int(ctx.floor(f))
                f -= fl
                c += fl
                self.fracs.append(f)
                self.counts.append(c)
            return True
        fr, co = _orbit_arrays(self.m, self.fracs[-1], int(self.counts[-1]), target - have)
        self.fracs = np.concatenate([self.fracs, fr[1:]])
        self.counts = np.concatenate([self.counts, co[1:]])
        return True

    @property
    def eps(self) -> float:
        return 10.0 ** (-self.ctx.dps) if self.precision == "extended" else EPS

    def displacement(self, q: int, p: int):
        """``X_q - xi_0 - p`` with ``X_q`` the lifted orbit point."""
        if self.precision == "extended":
            return float((self.counts[q] - p) + (self.fracs[q] - self.fracs[0]))
        return float((int(self.counts[q]) - p) + (self.fracs[q] - self.f0))

    def displacements(self, qs: np.ndarray, ps: np.ndarray) -> np.ndarray:
        if self.precision == "extended":
            return np.array([self.displacement(int(q), int(p)) for q, p in zip(qs, ps)])
        return (self.counts[qs] - ps).astype(np.float64) + (self.fracs[qs] - self.f0)


def closest_returns(m: CircleMap, x0: float = 0.0, max_iter: int = 10**7,
                    precision: str = "standard") -> Iterator[tuple]:
    """Yield ``(k_{n+1}, q_{n+1}, p_{n+1}, d_{n+1})`` level by level.

    ``d`` is the signed displacement ``X_q - xi_0 - p`` of the closest return,
    which alternates in sign.  The first item describes level 0 with
    ``k = floor`` of the rotation number.  A return within the precision
    floor raises :class:`PeriodicOrbitDetected`; running past ``max_iter``
    iterates raises :class:`DepthExhausted`.
    """
    orb = _LazyOrbit(m, x0, max_iter, precision)
    ks: list[int] = []
    if not orb.ensure(1):
        raise DepthExhausted("iteration budget below one step", ks)
    d1 = orb.displacement(1, 0)
    whole = math.floor(d1)
    d_cur = d1 - whole
    if abs(d_cur) <= RETURN_TOL * orb.eps or abs(d_cur - 1.0) <= RETURN_TOL * orb.eps:
        raise PeriodicOrbitDetected(1, whole + round(d_cur), ks)
    # level -1: (q, p, d) = (0, 1, -1) relative to the integer part
    q_prev, p_prev, d_prev = 0, 1, -1.0
    q_cur, p_cur = 1, 0
    yield whole, 1, whole, d_cur
    while True:
        sign = d_prev > 0
        j_lo = 1
        k = None
        while k is None:
            # candidate j range covered by the orbit so far
            top = (len(orb) - 1 - q_prev) // q_cur
            if top < j_lo:
                need = q_prev + j_lo * q_cur
                if not orb.ensure(max(need, 2 * (len(orb) - 1))):
                    raise DepthExhausted(f"no closest return within {max_iter} iterates", ks)
                continue
            js = np.arange(j_lo, top + 1, dtype=np.int64)
            qs = q_prev + js * q_cur
            ps = p_prev + js * p_cur + whole * qs
            d = orb.displacements(qs, ps)
            tol = RETURN_TOL * orb.eps * qs
            hit = np.abs(d) <= tol
            flip = (d > 0) != sign
            bad = hit | flip
            # steps of q_cur that stop moving the point: attracted to a q_cur-cycle
            prev_d = np.concatenate(([orb.displacement(q_prev + (j_lo - 1) * q_cur,
                                                       p_prev + (j_lo - 1) * p_cur
                                                       + whole * (q_prev + (j_lo - 1) * q_cur))], d[:-1]))
            locked = np.abs(d - prev_d) <= tol
            if np.any(locked) and (not np.any(bad) or np.argmax(locked) < np.argmax(bad)):
                raise PeriodicOrbitDetected(q_cur, p_cur + whole * q_cur, ks)
            if np.any(bad):
                first = int(np.argmax(bad))
                if hit[first]:
                    raise PeriodicOrbitDetected(int(qs[first]), int(ps[first]), ks)
                k = int(js[first]) - 1
                if k < 1:
                    raise DepthExhausted("closest-return order violated; precision exhausted", ks)
            else:
                j_lo = top + 1
                if not orb.ensure(q_prev + (top + 1) * q_cur + 2 * q_cur):
                    raise DepthExhausted(f"no closest return within {max_iter} iterates", ks)
        q_new = q_prev + k * q_cur
        p_new = p_prev + k * p_cur
        d_new = orb.displacement(q_new, p_new + whole * q_new)
        ks.append(k)
        yield k, q_new, p_new, d_new
        q_prev, p_prev, d_prev = q_cur, p_cur, d_cur
        q_cur, p_cur, d_cur = q_new, p_new, d_new


@dataclass(frozen=True)
class RotationResult:
    rho_est: float
    ks: tuple
    q_returns: tuple
    p_returns: tuple
    displacements: tuple
    whole: int
    rho_birkhoff: Optional[float] = None

    @property
    def fraction(self) -> Fraction:
        return self.whole + Fraction(self.p_returns[-1], self.q_returns[-1])

    def to_dict(self) -> dict:
        return {
            "rho_est": self.rho_est,
            "ks": list(self.ks),
            "q_returns": list(self.q_returns),
            "p_returns": list(self.p_returns),
            "displacements": list(self.displacements),
            "rho_birkhoff": self.rho_birkhoff,
        }


def rotation_number(m: CircleMap, x0: float = 0.0, depth: int = 10, max_iter: int = 10**7,
                    birkhoff: bool = False, precision: str = "standard") -> RotationResult:
    """Partial quotients of the rotation number from closest returns.

    Returns ``k_1..k_depth``, the return times ``q_1..q_depth`` and
    ``rho_est = p_depth / q_depth`` (plus the integer part).  With
    ``birkhoff=True`` the orbit average ``(X_n - x_0)/n`` over the iterates
    used is reported alongside as a cross-check.
    """
    if depth < 1:
        raise ValueError("depth must be at least 1")
    gen = closest_returns(m, x0, max_iter, precision)
    whole, _, _, _ = next(gen)
    ks, qs, ps, ds = [], [], [], []
    for k, q, p, d in gen:
        ks.append(k)
        qs.append(q)
        ps.append(p)
        ds.append(d)
        if len(ks) == depth:
            break
    rho = whole + ps[-1] / qs[-1]
    rb = None
    if birkhoff:
        n = max(qs[-1], 1)
        rb = (lift_iterate(m, x0, n) - x0) / n
    return RotationResult(rho, tuple(ks), tuple(qs), tuple(ps), tuple(ds), whole, rb)


# ----------------------------------------------------------------- tuning


def _target_quotients(target, length: int = 200) -> tuple[Fraction, list]:
    if isinstance(target, str):
        target = NAMED_CONSTANTS[target]
    if isinstance(target, ContinuedFraction):
        rho, ks = target.rho, list(target.ks)
    elif isinstance(target, (list, tuple)):
        ks = [int(k) for k in target]
        from .numberth import from_quotients

        rho = from_quotients(ks).rho
    else:
        rho = float(target)
        ks = list(cf_expand(rho, 60, strict=False).ks)
    exact = Fraction(rho)
    full = cf_expand(exact, length, strict=False).ks
    return exact, ks + list(full[len(ks):])


def _compare(m: CircleMap, rho_target: Fraction, tks: Sequence[int], x0: float,
             max_depth: int, max_iter: int) -> tuple[int, int]:
    """Sign of rho(m) - rho_target and the number of matched quotients."""
    try:
        gen = closest_returns(m, x0, max_iter)
        whole, _, _, _ = next(gen)
        if whole != 0:
            return (1 if whole > 0 else -1), 0
        matched = 0
        for i, (k, q, p, d) in enumerate(gen, start=1):
            if i > len(tks) or i > max_depth:
                return 0, matched
            t = tks[i - 1]
            if k != t:
                # a larger quotient at odd index means a smaller number
                larger = k > t
                return (-1 if larger == (i % 2 == 1) else 1), matched
            matched = i
    except PeriodicOrbitDetected as exc:
        rho = exc.rho
        if rho == rho_target:
            return 0, len(exc.ks)
        return (1 if rho > rho_target else -1), len(exc.ks)
    except DepthExhausted as exc:
        return 0, len(exc.ks)
    return 0, matched


@dataclass(frozen=True)
class TuneResult:
    omega: float
    K: float
    matched: int
    depth: int
    rho_est: float
    error: float

    def map(self) -> CircleMap:
        return make_map("sine", omega=self.omega, K=self.K)


def tune_parameter(K: float, target, tol: float = 1e-10, n_match: Optional[int] = None,
                   x0: float = 0.0, max_bisect: int = 200, max_iter: int = 1_000_000) -> TuneResult:
    """Find ``omega`` so that ``sine(omega, K)`` has the target rotation number.

    Bisection on ``[rho* - K, rho* + K]`` uses the monotonicity of the
    rotation number in ``omega``.  Each midpoint is compared with the target
    quotient by quotient, which steps over mode-locked plateaus, until the
    bracket reaches float resolution.  Success requires the first
    ``n_match`` quotients (default: the whole target prefix) to agree and
    ``|p_D/q_D - rho*| < tol`` at the deepest closest return reached.
    """
    if not abs(K) < 1:
        raise NotADiffeo("K must satisfy |K| < 1")
    rho_t, tks = _target_quotients(target)
    if n_match is None:
        n_match = len(target.ks) if isinstance(target, ContinuedFraction) else (
            len(target) if isinstance(target, (list, tuple)) else 10)
    rho_f = float(rho_t)
    if K == 0.0:
        return TuneResult(rho_f, 0.0, n_match, n_match, rho_f, 0.0)
    lo, hi = rho_f - abs(K), rho_f + abs(K)
    best = None
    for _ in range(max_bisect):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        sgn, matched = _compare(make_map("sine", omega=mid, K=K), rho_t, tks, x0,
                                len(tks), max_iter)
        if best is None or matched >= best[1]:
            best = (mid, matched)
        if sgn < 0:
            lo = mid
        elif sgn > 0:
            hi = mid
        else:
            break
    omega = best[0]
    m = make_map("sine", omega=omega, K=K)
    ks, qs, ps = [], [], []
    try:
        for k, q, p, _ in _take(closest_returns(m, x0, max_iter), 1, len(tks)):
            ks.append(k)
            qs.append(q)
            ps.append(p)
    except (PeriodicOrbitDetected, DepthExhausted):
        pass
    matched = 0
    for a, b in zip(ks, tks):
        if a != b:
            break
        matched += 1
    if matched < n_match or not qs:
        raise NoConvergence(f"only {matched} of {n_match} target quotients reproduced")
    rho_est = ps[-1] / qs[-1]
    err = abs(Fraction(ps[-1], qs[-1]) - rho_t)
    if err >= tol:
        raise NoConvergence(f"|p_D/q_D - rho*| = {float(err):.3e} at depth {len(qs)}")
    return TuneResult(omega, K, matched, len(qs), rho_est, float(err))


def _take(gen, skip, n):
    for i, item in enumerate(gen):
        if i < skip:
            continue
        if i >= skip + n:
            return
        yield item


# --------------------------------------------------------- Denjoy constant


@dataclass(frozen=True)
class LambdaResult:
    C: float
    lam: float

    def to_dict(self) -> dict:
        return {"C": self.C, "lambda": self.lam}


def _sign_change_points(f, n: int = 4096):
    x = (np.arange(n + 1, dtype=np.float64)) / n
    v = f(x)
    pts = [0.0, 1.0]
    for i in np.nonzero(np.sign(v[:-1]) * np.sign(v[1:]) < 0)[0]:
        pts.append(optimize.brentq(lambda t: float(f(np.asarray(t))), x[i], x[i + 1]))
    pts.extend(x[np.nonzero(v == 0)[0]].tolist())
    return sorted(set(pts))


def denjoy_lambda(m: CircleMap, tol: float = 1e-8) -> LambdaResult:
    """``C`` = total variation of ``log T'`` over a period, ``lam = 1/sqrt(1 + e^-C)``."""
    if m.family == "rigid":
        return LambdaResult(0.0, 1.0 / math.sqrt(2.0))
    integrand = lambda x: abs(float(m.d2(np.asarray(x))) / float(m.d1(np.asarray(x))))
    pts = _sign_change_points(m.d2)
    total = 0.0
    for a, b in zip(pts[:-1], pts[1:]):
        if b - a <= 0:
            continue
        val, err = integrate.quad(integrand, a, b, epsabs=1e-13, epsrel=1e-12, limit=200)
        if err > tol:
            raise QuadratureFailure(f"quadrature error {err:.2e} on [{a}, {b}]")
        total += val
    return LambdaResult(total, 1.0 / math.sqrt(1.0 + math.exp(-total)))
