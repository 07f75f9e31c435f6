"""Numba switch.

Hot loops are written once as plain Python over numpy arrays. When numba is
importable and ``ARWPLAN_DISABLE_NUMBA`` is not set to a truthy value they are
compiled with ``numba.njit``; otherwise the same functions run interpreted (or a
vectorized numpy variant is used where one exists).
"""

import os

_FLAG = os.environ.get("ARWPLAN_DISABLE_NUMBA", "").strip().lower()
DISABLED = _FLAG not in ("", "0", "false", "no")

try:
    import numba
except ImportError:  # pragma: no cover - numba is a hard dependency in CI
    numba = None

USE_NUMBA = numba is not None and not DISABLED


def njit(*args, **kwargs):
    """``numba.njit`` when enabled, otherwise an identity decorator.

    Nested kernels resolve each other through module globals, so the flag has
    to be decided at import time; the benchmark runs the fallback in a child
    process for that reason.
    """
    kwargs.setdefault("cache", True)

    def wrap(fn):
        if not USE_NUMBA:
            fn.py_func = fn
            return fn
        return numba.njit(**kwargs)(fn)

    if args and callable(args[0]):
        return wrap(args[0])
    return wrap


def backend_name():
    return "numba" if USE_NUMBA else "numpy"
