"""Kernel acceleration switch.

Hot numeric kernels are written once, in numpy-compatible form, and wrapped
with numba's njit when acceleration is on.  Set the environment variable
CURVESWARM_NUMBA=0 (or "off"/"false") before import to force the pure-numpy
fallback path; any other value, or an unset variable, enables numba when it
is importable.  The selection is made once at import time.
"""

import os

_flag = os.environ.get("CURVESWARM_NUMBA", "1").strip().lower()
_want_numba = _flag not in ("0", "false", "off", "no")

NUMBA_ENABLED = False
_numba_setting = {"cache": True, "nogil": True}

if _want_numba:
    try:
        import numba as _nb

        NUMBA_ENABLED = True
    except ImportError:
        NUMBA_ENABLED = False


def jit(func):
    """Apply njit when acceleration is enabled, otherwise return func as is."""
    if NUMBA_ENABLED:
        return _nb.njit(**_numba_setting)(func)
    return func
