"""Pure numpy implementations of the hot loops.

These mirror ``_ckernels.pyx`` exactly in signature and semantics.  They are
used when the compiled module is missing or ``CIRCLECONJ_PURE=1`` is set.
"""

from __future__ import annotations

import math

import numpy as np

TWO_PI = 2.0 * math.pi


def sine_orbit(x0, c0, n, omega, K):
    """Orbit of the sine-family lift, split into winding count and fraction.

    Returns ``(fracs, counts)`` of length ``n + 1`` with
    ``lift^i(c0 + x0) = counts[i] + fracs[i]`` and ``0 <= fracs[i] < 1``.
    """
    fracs = np.empty(n + 1, dtype=np.float64)
    counts = np.empty(n + 1, dtype=np.int64)
    a = K / TWO_PI
    f = float(x0)
    c = int(c0)
    fl = math.floor(f)
    f -= fl
    c += int(fl)
    sin = math.sin
    floor = math.floor
    for i in range(n + 1):
        fracs[i] = f
        counts[i] = c
        f = f + omega - a * sin(TWO_PI * f)
        fl = floor(f)
        f -= fl
        c += int(fl)
    return fracs, counts


def sine_lift_batch(x, n, omega, K):
    """Iterate every point of ``x`` ``n`` times, tracking log T'.

    Returns ``(fracs, counts, logderiv)`` where ``counts + fracs`` is the lift
    of ``x`` after ``n`` steps (``counts`` counts whole turns including the
    integer part of ``x``) and ``logderiv`` is the sum of ``log T'`` along
    the orbit, i.e. ``log (T^n)'(x)``.
    """
    f = np.array(x, dtype=np.float64, copy=True)
    base = np.floor(f)
    f -= base
    c = base.astype(np.int64)
    ld = np.zeros_like(f)
    a = K / TWO_PI
    for _ in range(n):
        s = TWO_PI * f
        if K != 0.0:
            ld += np.log1p(-K * np.cos(s))
        f = f + omega - a * np.sin(s)
        fl = np.floor(f)
        f -= fl
        c += fl.astype(np.int64)
    return f, c, ld


def _sparse_tables(y):
    n = y.size
    mx = [y]
    mn = [y]
    k = 1
    while (1 << k) <= n:
        half = 1 << (k - 1)
        prev_mx, prev_mn = mx[-1], mn[-1]
        mx.append(np.maximum(prev_mx[:-half], prev_mx[half:]))
        mn.append(np.minimum(prev_mn[:-half], prev_mn[half:]))
        k += 1
    return mx, mn


def window_oscillation(xs, ys, hs):
    """Largest oscillation of ``ys`` over windows ``[x_i, x_i + h]``.

    ``xs`` must be sorted ascending.  For each ``h`` in ``hs`` returns
    ``max_i (max - min of ys over x in [x_i, x_i + h])``.
    """
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    hs = np.asarray(hs, dtype=np.float64)
    mx, mn = _sparse_tables(ys)
    idx = np.arange(xs.size)
    out = np.empty(hs.size)
    for m, h in enumerate(hs):
        j = np.searchsorted(xs, xs + h, side="right") - 1
        length = j - idx + 1
        k = np.floor(np.log2(length)).astype(np.int64)
        best = 0.0
        for kk in np.unique(k):
            sel = k == kk
            i0 = idx[sel]
            i1 = j[sel] - (1 << kk) + 1
            hi = np.maximum(mx[kk][i0], mx[kk][i1])
            lo = np.minimum(mn[kk][i0], mn[kk][i1])
            best = max(best, float(np.max(hi - lo)))
        out[m] = best
    return out
