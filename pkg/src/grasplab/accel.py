"""Kernel acceleration switch.

Hot numeric kernels (ray casting, convolution passes) ship in two
implementations: a numba ``@njit`` version and a vectorized pure-numpy
version.  Which one runs is decided once at import time:

* ``GRASPLAB_NO_NUMBA=1`` in the environment forces the numpy path;
* otherwise numba is used when it imports cleanly, numpy when it does not.

``benchmarks/kernel_bench.py`` times the two paths against each other.
"""

import os

_FLAG = os.environ.get("GRASPLAB_NO_NUMBA", "").strip().lower()
_DISABLED = _FLAG in ("1", "true", "yes", "on")

if not _DISABLED:
    try:
        from numba import njit  # noqa: F401

        NUMBA_ENABLED = True
    except ImportError:
        NUMBA_ENABLED = False
else:
    NUMBA_ENABLED = False

if not NUMBA_ENABLED:

    def njit(*args, **kwargs):
        """Stand-in decorator so kernel sources compile unchanged without numba."""
        if args and callable(args[0]):
            return args[0]

        def wrap(fn):
            return fn

        return wrap


def backend_name():
    return "numba" if NUMBA_ENABLED else "numpy"
