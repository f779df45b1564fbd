"""Finite/divergent verdicts for improper integrals and series.

Both are reduced to a sequence of block contributions over dyadically
growing ranges ``[a + 2^(j-1), a + 2^j]`` (integrals) or ``[2^j, 2^(j+1))``
(series, by term index).  The block sequence is then classified:

* a partial sum beyond ``1e6`` times the first nonzero block is divergent;
* block sums that never decrease over the last eight blocks are divergent;
* otherwise the tail is modelled either as geometric in the block index
  (integrand decaying like a power of ``u``) or as a power of the block
  index (integrand decaying like a power of ``log u``), whichever fits the
  last blocks better, and the verdict follows from the fitted rate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate

from .errors import Inconclusive, QuadratureFailure

DIVERGENCE_FACTOR = 1e6
NEGLIGIBLE = 1e-16
DIRECT_SERIES_LIMIT = 1 << 15


@dataclass
class BlockVerdict:
    finite: bool
    value: float
    blocks: list = field(default_factory=list)
    reason: str = ""

    @property
    def verdict(self) -> str:
        return "finite" if self.finite else "divergent"

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "value": self.value if self.finite else None,
            "n_blocks": len(self.blocks),
            "reason": self.reason,
        }


def _fit(x, y):
    coef = np.polyfit(x, y, 1)
    resid = y - np.polyval(coef, x)
    return coef[0], float(np.sqrt(np.mean(resid**2)))


def classify_blocks(block_fn: Callable[[int], float], max_blocks: int = 256,
                    min_blocks: int = 10) -> BlockVerdict:
    """Run ``block_fn(0), block_fn(1), ...`` and decide finiteness of the sum."""
    blocks: list[float] = []
    total = 0.0
    first = 0.0
    for j in range(max_blocks):
        b = float(block_fn(j))
        if not math.isfinite(b) or b < 0:
            raise QuadratureFailure(f"block {j} evaluated to {b}")
        blocks.append(b)
        total += b
        if first == 0.0:
            first = b
        if first > 0 and total > DIVERGENCE_FACTOR * first:
            return BlockVerdict(False, math.inf, blocks, "partial sum exceeds 1e6 x first block")
        if j + 1 >= min_blocks:
            if b <= NEGLIGIBLE * total:
                return BlockVerdict(True, total, blocks, "blocks negligible")
            if j >= 8:
                tail = np.asarray(blocks[-9:])
                if np.all(tail > 0):
                    ratios = tail[1:] / tail[:-1]
                    r = float(ratios.max())
                    if r < 0.9 and b * r / (1 - r) <= 1e-13 * total:
                        return BlockVerdict(True, total + b * r / (1 - r), blocks, "geometric blocks")
    if total == 0.0:
        return BlockVerdict(True, 0.0, blocks, "identically zero")
    tail = np.asarray(blocks[-8:])
    if np.all(tail[1:] >= tail[:-1] * (1 - 1e-9)):
        return BlockVerdict(False, math.inf, blocks, "block sums do not decrease")
    window = np.asarray(blocks[-16:])
    idx = np.arange(len(blocks) - window.size, len(blocks), dtype=np.float64) + 1.0
    if np.any(window <= 0):
        raise Inconclusive("zero blocks interleaved with nonzero ones", blocks)
    logb = np.log(window)
    slope_geo, res_geo = _fit(idx, logb)
    slope_pow, res_pow = _fit(np.log(idx), logb)
    last = blocks[-1]
    J = idx[-1]
    if res_geo <= res_pow:
        r = math.exp(slope_geo)
        if r < 1.0 - 1e-6:
            return BlockVerdict(True, total + last * r / (1 - r), blocks, f"geometric tail, ratio {r:.4f}")
        return BlockVerdict(False, math.inf, blocks, f"block ratio {r:.4f} >= 1")
    p = -slope_pow
    if p > 1.1:
        return BlockVerdict(True, total + last * J / (p - 1), blocks, f"power tail, exponent {p:.3f}")
    if p < 1.02:
        return BlockVerdict(False, math.inf, blocks, f"power tail, exponent {p:.3f} <= 1")
    raise Inconclusive(f"block decay exponent {p:.3f} too close to 1", blocks)


def block_integral(f: Callable, a: float, b: float, rel: float = 1e-12) -> float:
    """Adaptive integral of a scalar function on a finite interval."""
    val, err = integrate.quad(f, a, b, epsabs=0.0, epsrel=rel, limit=200)
    if not math.isfinite(val):
        raise QuadratureFailure(f"non-finite integral on [{a}, {b}]")
    return val


def integral_to_infinity(f: Callable, a: float = 0.0, max_blocks: int = 256,
                         min_blocks: int = 10) -> BlockVerdict:
    """Verdict and value for the integral of a nonnegative ``f`` over ``[a, inf)``."""

    def block(j):
        lo = a if j == 0 else a + 2.0 ** (j - 1)
        hi = a + 2.0**j
        return block_integral(f, lo, hi)

    return classify_blocks(block, max_blocks, min_blocks)


def series_to_infinity(g: Callable, start: int = 1, max_blocks: int = 256,
                       min_blocks: int = 10) -> BlockVerdict:
    """Verdict and value for ``sum_{n >= start} g(n)`` with ``g`` vectorized.

    Blocks of up to ``2^15`` terms are summed exactly; longer blocks use the
    trapezoidal form of Euler-Maclaurin, accurate for slowly varying terms.
    """

    def block(j):
        lo = start + (1 << j) - 1
        hi = start + (1 << (j + 1)) - 1  # exclusive
        if hi - lo <= DIRECT_SERIES_LIMIT:
            return float(np.sum(g(np.arange(lo, hi, dtype=np.float64))))
        gs = lambda t: float(g(np.asarray([t], dtype=np.float64))[0])
        return block_integral(gs, float(lo), float(hi)) + 0.5 * (gs(lo) - gs(hi))

    return classify_blocks(block, max_blocks, min_blocks)


def finite_series_verdict(terms) -> dict:
    """Trend verdict for a finite list of nonnegative series terms.

    The log of the tail terms is fitted both against the index (geometric
    decay) and against its log (power law); the better fit wins.  A clearly
    negative geometric slope means converging.  For a power law the exponent
    decides: above 1.1 converging, below 1.02 diverging.
    """
    t = np.asarray(terms, dtype=np.float64)
    pos = t > 0
    if t.size < 8 or pos.sum() < 8:
        return {"verdict": "inconclusive", "rate": math.nan, "kind": "too few terms"}
    n = np.arange(1, t.size + 1, dtype=np.float64)[pos]
    logt = np.log(t[pos])
    half = n >= n[-1] / 2
    if half.sum() < 4:
        half = np.ones_like(n, dtype=bool)
    g, g_err = _fit(n[half], logt[half])
    slope, p_err = _fit(np.log(n[half]), logt[half])
    p = -slope
    if g < -0.01 and g_err <= p_err:
        return {"verdict": "converging", "rate": math.exp(g), "kind": "geometric"}
    if p > 1.1:
        verdict = "converging"
    elif p < 1.02:
        verdict = "diverging"
    else:
        verdict = "inconclusive"
    return {"verdict": verdict, "rate": p, "kind": "power"}
