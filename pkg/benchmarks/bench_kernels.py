"""Compiled vs pure-Python kernel timings.

    python3 benchmarks/bench_kernels.py [--repeat 3] [--orbit 1000000]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from circleconj.kernels import _pykernels

try:
    from circleconj.kernels import _ckernels
except ImportError:
    _ckernels = None

OMEGA, K = 0.6145263876672207, 0.5


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def cases(n_orbit):
    rng = np.random.default_rng(0)
    x = rng.random(4096)
    xs = np.sort(rng.random(200_000))
    ys = np.cumsum(rng.normal(size=xs.size))
    hs = np.geomspace(1e-5, 0.5, 32)
    return {
        f"sine_orbit n={n_orbit}": lambda mod: mod.sine_orbit(0.0, 0, n_orbit, OMEGA, K),
        "sine_lift_batch 4096 x 500": lambda mod: mod.sine_lift_batch(x, 500, OMEGA, K),
        "window_oscillation 2e5 x 32": lambda mod: mod.window_oscillation(xs, ys, hs),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--orbit", type=int, default=1_000_000)
    args = ap.parse_args(argv)
    if _ckernels is None:
        print("compiled kernels not built; only the pure-Python timings are shown")
    print(f"{'kernel':32s} {'python [s]':>11s} {'cython [s]':>11s} {'speedup':>8s}")
    for name, call in cases(args.orbit).items():
        tp = best_of(lambda: call(_pykernels), args.repeat)
        if _ckernels is None:
            print(f"{name:32s} {tp:11.4f} {'-':>11s} {'-':>8s}")
            continue
        tc = best_of(lambda: call(_ckernels), args.repeat)
        print(f"{name:32s} {tp:11.4f} {tc:11.4f} {tp / tc:7.1f}x")


if __name__ == "__main__":
    main()
