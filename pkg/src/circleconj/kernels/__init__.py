"""Hot loops with a compiled backend and a numpy fallback.

The compiled module is used when it imports cleanly.  Setting the
environment variable ``CIRCLECONJ_PURE=1`` forces the fallback, which is
how the test suite cross-checks the two.
"""

from __future__ import annotations

import os

from . import _pykernels

BACKEND = "python"

if os.environ.get("CIRCLECONJ_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels
else:
    _impl = _pykernels

sine_orbit = _impl.sine_orbit
sine_lift_batch = _impl.sine_lift_batch
window_oscillation = _impl.window_oscillation

__all__ = [
    "BACKEND",
    "sine_orbit",
    "sine_lift_batch",
    "window_oscillation",
]
