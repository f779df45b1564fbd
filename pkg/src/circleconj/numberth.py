"""Continued fractions, gap sequences and partial-quotient generators.

Indexing follows the recurrence convention used throughout the package:
sequences of convergents and gaps start at index -1, with
``p_{-1} = 1, q_{-1} = 0, p_0 = 0, q_0 = 1`` and ``Delta_{-1} = 1``.  Python
lists are therefore offset by one: ``qs[n + 1]`` holds ``q_n``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import BadDistribution, IntegerOverflow, OutOfRange, PrecisionExhausted

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
SILVER = math.sqrt(2.0) - 1.0
TANH1 = math.tanh(1.0)

NAMED_CONSTANTS = {
    "golden": GOLDEN,
    "silver": SILVER,
    "sqrt2m1": SILVER,
    "tanh1": TANH1,
}

# trust threshold for quotients, in units of eps * q_m
TRUST_FACTOR = 1e3
INT64_MAX = 2**63 - 1


@dataclass(frozen=True)
class ContinuedFraction:
    """Partial quotients of ``rho`` with convergents and gaps.

    ``ks`` holds k_1..k_N.  ``ps``, ``qs`` and ``deltas`` hold indices
    -1..N, so they are one longer than ``ks`` plus one.
    """

    rho: float
    ks: tuple
    ps: tuple
    qs: tuple
    deltas: tuple

    @property
    def depth(self) -> int:
        return len(self.ks)

    def k(self, n: int) -> int:
        """Partial quotient k_n for 1 <= n <= N."""
        if not 1 <= n <= self.depth:
            raise OutOfRange(f"k_{n} not available (depth {self.depth})")
        return self.ks[n - 1]

    def p(self, n: int) -> int:
        return self.ps[self._idx(n)]

    def q(self, n: int) -> int:
        return self.qs[self._idx(n)]

    def delta(self, n: int) -> float:
        return self.deltas[self._idx(n)]

    def _idx(self, n: int) -> int:
        if not -1 <= n <= self.depth:
            raise OutOfRange(f"index {n} outside -1..{self.depth}")
        return n + 1

    def rows(self) -> list:
        """Rows ``(n, k_n, p_n, q_n, Delta_n)`` for n = -1..N; k is blank for n < 1."""
        out = []
        for n in range(-1, self.depth + 1):
            k = self.ks[n - 1] if n >= 1 else ""
            out.append((n, k, self.p(n), self.q(n), self.delta(n)))
        return out

    def to_dict(self) -> dict:
        return {
            "rho": self.rho,
            "ks": list(self.ks),
            "ps": [int(v) for v in self.ps],
            "qs": [int(v) for v in self.qs],
            "deltas": list(self.deltas),
        }


def _as_fraction(x):
    """Exact rational value of ``x`` and the relative precision it carries."""
    if isinstance(x, Fraction):
        return x, 0.0
    if isinstance(x, (float, np.floating)):
        return Fraction(float(x)), float(np.finfo(np.float64).eps)
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x)), 0.0
    try:
        import mpmath
    except ImportError:  # pragma: no cover - mpmath is a declared dependency
        mpmath = None
    if mpmath is not None and isinstance(x, mpmath.mpf):
        man, exp = x.man_exp
        value = Fraction(int(man)) * (Fraction(2) ** int(exp))
        return value, 2.0 ** (1 - mpmath.mp.prec)
    raise TypeError(f"unsupported number type {type(x).__name__}")


def cf_expand(x, n_terms: int, strict: bool = True) -> ContinuedFraction:
    """Expand ``x`` in (0, 1) into at most ``n_terms`` partial quotients.

    The Gauss map is run in exact rational arithmetic on the value actually
    stored in ``x``; a quotient k_{m+1} is emitted only while the gap
    ``|q_m x - p_m|`` stays above ``1e3 * eps * q_m``, beyond which it would
    be decided by representation error rather than by ``x``.

    With ``strict=True`` a shortfall raises :class:`PrecisionExhausted`
    carrying the trustworthy prefix; otherwise the prefix is returned.  An
    exact rational input whose expansion terminates is returned as is.
    """
    if n_terms < 1:
        raise ValueError("n_terms must be positive")
    value, eps = _as_fraction(x)
    if not 0 < value < 1:
        raise OutOfRange("x must lie in (0, 1)")
    ks: list[int] = []
    p_prev, q_prev = 1, 0
    p_cur, q_cur = 0, 1
    resid = value  # Gauss-map iterate
    while len(ks) < n_terms:
        gap = abs(q_cur * value - p_cur)
        if gap == 0 or (eps > 0 and gap < TRUST_FACTOR * eps * q_cur):
            break
        k = int(1 / resid)
        resid = 1 / resid - k
        ks.append(k)
        p_prev, p_cur = p_cur, k * p_cur + p_prev
        q_prev, q_cur = q_cur, k * q_cur + q_prev
        if resid == 0:
            break
    if len(ks) < n_terms and strict and resid != 0:
        raise PrecisionExhausted(len(ks), ks)
    if not ks:
        raise PrecisionExhausted(0, ks)
    ps, qs = convergents(ks, width=None)
    deltas = [float(abs(q * value - p)) for p, q in zip(ps, qs)]
    return ContinuedFraction(float(value), tuple(ks), tuple(ps), tuple(qs), tuple(deltas))


def convergents(ks: Sequence[int], width: int | None = 64):
    """Numerators and denominators for indices -1..N from quotients k_1..k_N.

    ``width`` bounds the integers (two's-complement bits); ``None`` lifts the
    bound.  Overflow raises :class:`IntegerOverflow` with the valid prefix.
    """
    limit = None if width is None else 2 ** (width - 1) - 1
    ps = [1, 0]
    qs = [0, 1]
    for n, k in enumerate(ks, start=1):
        k = int(k)
        if k < 1:
            raise ValueError(f"partial quotient k_{n} = {k} is not positive")
        p = k * ps[-1] + ps[-2]
        q = k * qs[-1] + qs[-2]
        if limit is not None and (q > limit or p > limit):
            raise IntegerOverflow(n, ps, qs)
        ps.append(p)
        qs.append(q)
    return ps, qs


def from_quotients(ks: Sequence[int], tail: str = "golden") -> ContinuedFraction:
    """Build a continued fraction from a finite quotient list.

    The irrational is completed with an all-ones tail (``tail="golden"``) so
    that every gap is well defined.  Gaps are products of Gauss-map iterates,
    which keeps them accurate far below machine epsilon.
    """
    if tail != "golden":
        raise ValueError("only the golden tail is supported")
    ks = [int(k) for k in ks]
    if not ks or min(ks) < 1:
        raise ValueError("need at least one positive quotient")
    n = len(ks)
    iterates = np.empty(n + 1)
    iterates[n] = GOLDEN
    for j in range(n - 1, -1, -1):
        iterates[j] = 1.0 / (ks[j] + iterates[j + 1])
    ps, qs = convergents(ks, width=None)
    logs = np.concatenate(([0.0], np.cumsum(np.log(iterates))))
    deltas = tuple(float(v) for v in np.exp(logs))
    return ContinuedFraction(float(iterates[0]), tuple(ks), tuple(ps), tuple(qs), deltas)


def delta_seq(cf: ContinuedFraction) -> np.ndarray:
    """Gaps Delta_{-1}..Delta_N as an array (index offset by one)."""
    return np.asarray(cf.deltas, dtype=np.float64)


def delta_tilde(cf: ContinuedFraction) -> np.ndarray:
    """Lower gap bound prod_{j=-1}^{n+1} (k_{j+2} + 1)^{-1} for n = -1..N-3."""
    ks = np.asarray(cf.ks, dtype=np.float64)
    if ks.size < 2:
        return np.empty(0)
    logs = -np.cumsum(np.log1p(ks))
    return np.exp(logs[1:])


def delta_inverse(cf: ContinuedFraction, x, kind: str = "delta"):
    """Inverse of the gap function, log-linear between grid points.

    Maps ``Delta_n`` to ``n`` exactly and interpolates ``log Delta`` linearly
    in ``n`` in between.  ``kind="tilde"`` uses :func:`delta_tilde` instead.
    """
    if kind == "delta":
        grid = delta_seq(cf)
    elif kind == "tilde":
        grid = np.concatenate(([1.0], delta_tilde(cf)))
    else:
        raise ValueError(f"unknown kind {kind!r}")
    idx = np.arange(-1, grid.size - 1, dtype=np.float64)
    xa = np.asarray(x, dtype=np.float64)
    lo = grid[-1]
    if np.any(xa < lo) or np.any(xa > 1.0) or np.any(~np.isfinite(xa)):
        raise OutOfRange(f"x must lie in [{lo:.3e}, 1]; deepen the expansion")
    t = np.interp(np.log(xa), np.log(grid[::-1]), idx[::-1])
    return float(t) if np.ndim(t) == 0 else t


@dataclass(frozen=True)
class PhiType:
    """Nondecreasing growth gauge ``phi`` for partial quotients.

    ``kind`` is one of ``constant``, ``power``, ``exponential`` or ``table``.
    """

    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        kind, prm = self.kind, self.params
        if kind == "constant":
            if prm.get("c", 1.0) <= 0:
                raise ValueError("constant gauge must be positive")
        elif kind == "power":
            if prm.get("nu", 1.0) <= 0 or prm.get("c", 1.0) <= 0:
                raise ValueError("power gauge needs nu > 0 and c > 0")
        elif kind == "exponential":
            if prm.get("a", 2.0) <= 1 or prm.get("c", 1.0) <= 0:
                raise ValueError("exponential gauge needs a > 1 and c > 0")
        elif kind == "table":
            vals = np.asarray(prm.get("values", ()), dtype=np.float64)
            if vals.size == 0 or np.any(np.diff(vals) < 0) or np.any(vals <= 0):
                raise ValueError("table gauge must be positive and nondecreasing")
        else:
            raise ValueError(f"unknown gauge kind {kind!r}")

    def __call__(self, s):
        s = np.asarray(s, dtype=np.float64)
        prm = self.params
        if self.kind == "constant":
            out = np.full_like(s, float(prm.get("c", 1.0)))
        elif self.kind == "power":
            out = float(prm.get("c", 1.0)) * np.power(np.maximum(s, 0.0), float(prm["nu"]))
        elif self.kind == "exponential":
            out = float(prm.get("c", 1.0)) * np.power(float(prm["a"]), s)
        else:
            vals = np.asarray(prm["values"], dtype=np.float64)
            out = np.interp(s, np.arange(vals.size, dtype=np.float64), vals)
        return float(out) if out.ndim == 0 else out

    def log_growth_rate(self) -> float:
        """Asymptotic d(log phi)/ds; zero unless exponential."""
        if self.kind == "exponential":
            return math.log(float(self.params["a"]))
        return 0.0

    def to_dict(self) -> dict:
        return {"kind": self.kind, "params": dict(self.params)}


def phi_constant(c: float = 1.0) -> PhiType:
    return PhiType("constant", {"c": float(c)})


def phi_power(nu: float, c: float = 1.0) -> PhiType:
    return PhiType("power", {"nu": float(nu), "c": float(c)})


def phi_exponential(a: float, c: float = 1.0) -> PhiType:
    return PhiType("exponential", {"a": float(a), "c": float(c)})


def phi_table(values: Iterable[float]) -> PhiType:
    return PhiType("table", {"values": [float(v) for v in values]})


@dataclass(frozen=True)
class QuotientDistribution:
    """Finite distribution over partial-quotient values."""

    values: tuple
    probs: tuple

    def __post_init__(self):
        vals = np.asarray(self.values)
        probs = np.asarray(self.probs, dtype=np.float64)
        if vals.size == 0 or vals.size != probs.size:
            raise BadDistribution("values and probabilities must have equal nonzero length")
        if np.any(vals < 1) or np.any(vals != np.round(vals)) or len(set(vals.tolist())) != vals.size:
            raise BadDistribution("values must be distinct positive integers")
        if np.any(probs < 0) or not np.isfinite(probs).all() or abs(probs.sum() - 1.0) > 1e-12:
            raise BadDistribution("probabilities must be nonnegative and sum to 1")

    def theta(self) -> float:
        """Geometric-mean gap rate prod K_j^{-p_j}."""
        return float(np.exp(-np.dot(self.probs, np.log(self.values))))

    def theta_tilde(self) -> float:
        """Same with K_j + 1, the rate of the lower gap bound."""
        return float(np.exp(-np.dot(self.probs, np.log1p(np.asarray(self.values, float)))))


def gen_partial_quotients(spec, n: int, seed, mode: str = "uniform") -> np.ndarray:
    """Draw k_1..k_n from a gauge or a finite distribution.

    With a :class:`PhiType`, k_{m+1} is uniform on ``1..max(1, ceil phi(m))``
    (``mode="uniform"``) or equal to that bound (``mode="max"``).  With a
    :class:`QuotientDistribution` (or a ``(values, probs)`` pair) draws are
    i.i.d.  Output is a deterministic function of ``seed``.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    rng = np.random.default_rng(seed)
    if isinstance(spec, PhiType):
        bounds = np.ceil(np.asarray(spec(np.arange(n, dtype=np.float64)), dtype=np.float64))
        bounds = np.maximum(bounds, 1.0)
        if np.any(bounds > 2.0**62):
            first = int(np.argmax(bounds > 2.0**62)) + 1
            raise IntegerOverflow(first)
        ib = bounds.astype(np.int64)
        if mode == "max":
            return ib
        if mode != "uniform":
            raise ValueError(f"unknown mode {mode!r}")
        return rng.integers(1, ib + 1, dtype=np.int64)
    if not isinstance(spec, QuotientDistribution):
        values, probs = spec
        spec = QuotientDistribution(tuple(values), tuple(probs))
    vals = np.asarray(spec.values, dtype=np.int64)
    return rng.choice(vals, size=n, p=np.asarray(spec.probs, dtype=np.float64))


def gauss_kuzmin_pmf(k):
    """P(k) = log2(1 + 1/(k(k+2)))."""
    k = np.asarray(k, dtype=np.float64)
    return np.log1p(1.0 / (k * (k + 2.0))) / math.log(2.0)


def gauss_kuzmin_sample(n: int, seed) -> np.ndarray:
    """I.i.d. Gauss-Kuzmin draws by inverting F(k) = 1 - log2(1 + 1/(k+1))."""
    if n < 1:
        raise ValueError("n must be positive")
    rng = np.random.default_rng(seed)
    u = rng.random(n)
    k = np.ceil(1.0 / np.expm1((1.0 - u) * math.log(2.0)) - 1.0)
    return np.maximum(k, 1.0).astype(np.int64)


@dataclass(frozen=True)
class KnSeriesResult:
    partial_sums: np.ndarray
    converged: bool
    tail_estimate: float


def check_kn_series(ks, Ks, tail_tol: float = 0.01) -> KnSeriesResult:
    """Partial sums of sum k_n K_n with a last-quarter tail test.

    ``tail_estimate`` is the contribution of the last quarter of the terms;
    the series is reported converged when it is at most ``tail_tol``.
    """
    ks = np.asarray(ks, dtype=np.float64)
    Ks = np.asarray(Ks, dtype=np.float64)
    if ks.shape != Ks.shape or ks.ndim != 1 or ks.size == 0:
        raise ValueError("ks and Ks must be equal-length 1-d sequences")
    if np.any(Ks < 0):
        raise ValueError("weights K_n must be nonnegative")
    terms = ks * Ks
    sums = np.cumsum(terms)
    start = (3 * ks.size) // 4
    tail = float(terms[start:].sum())
    return KnSeriesResult(sums, tail <= tail_tol, tail)


def weights_summable(n_terms: int) -> np.ndarray:
    """K_n = n^-2, for which sum K_n log n is finite."""
    n = np.arange(1, n_terms + 1, dtype=np.float64)
    return 1.0 / (n * n)


def weights_borderline(n_terms: int) -> np.ndarray:
    """K_n = 1 / ((n+2) log(n+2)), for which sum K_n log n diverges."""
    n = np.arange(1, n_terms + 1, dtype=np.float64)
    return 1.0 / ((n + 2.0) * np.log(n + 2.0))


def dyadic_checkpoints(n_terms: int, count: int = 3) -> list:
    """The last ``count`` dyadic term counts n_terms/2^j, ascending."""
    return [n_terms >> j for j in range(count - 1, -1, -1)]


@dataclass(frozen=True)
class AppendixReport:
    n_seeds: int
    n_terms: int
    tail_tol: float
    converged_fraction: float
    tail_estimates: np.ndarray
    checkpoints: list
    median_partial_sums: list
    strictly_increasing: bool


def appendix_monte_carlo(
    n_seeds: int = 10_000,
    n_terms: int = 16_384,
    seed: int = 0,
    tail_tol: float = 0.01,
    summable: Callable[[int], np.ndarray] = weights_summable,
    borderline: Callable[[int], np.ndarray] = weights_borderline,
    chunk: int = 256,
) -> AppendixReport:
    """Monte Carlo check of sum k_n K_n over Gauss-Kuzmin quotient sequences.

    Each seed gets an independent stream spawned from ``seed``.  The
    summable weights feed the tail test; the borderline weights feed the
    median partial sums at the last three dyadic checkpoints.
    """
    children = np.random.SeedSequence(seed).spawn(n_seeds)
    w_sum = summable(n_terms)
    w_div = borderline(n_terms)
    start = (3 * n_terms) // 4
    checkpoints = dyadic_checkpoints(n_terms)
    tails = np.empty(n_seeds)
    at_checks = np.empty((n_seeds, len(checkpoints)))
    for lo in range(0, n_seeds, chunk):
        hi = min(lo + chunk, n_seeds)
        block = np.empty((hi - lo, n_terms))
        for r, child in enumerate(children[lo:hi]):
            block[r] = gauss_kuzmin_sample(n_terms, child)
        tails[lo:hi] = (block[:, start:] * w_sum[start:]).sum(axis=1)
        sums = np.cumsum(block * w_div, axis=1)
        at_checks[lo:hi] = sums[:, [c - 1 for c in checkpoints]]
    medians = [float(v) for v in np.median(at_checks, axis=0)]
    increasing = all(b > a for a, b in zip(medians, medians[1:]))
    return AppendixReport(
        n_seeds=n_seeds,
        n_terms=n_terms,
        tail_tol=tail_tol,
        converged_fraction=float(np.mean(tails <= tail_tol)),
        tail_estimates=tails,
        checkpoints=checkpoints,
        median_partial_sums=medians,
        strictly_increasing=increasing,
    )
