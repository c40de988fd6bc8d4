"""Numba switch.

Set ``LIGHTCONE_NUMBA=0`` in the environment to run the pure-numpy kernels
even when numba is importable.
"""

import os

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None

USE_NUMBA = numba is not None and os.environ.get("LIGHTCONE_NUMBA", "1").lower() not in ("0", "false", "no", "off")


def njit(*args, **kwargs):
    """``numba.njit`` when enabled, otherwise the identity decorator."""
    if numba is None:
        if args and callable(args[0]):
            return args[0]
        return lambda fn: fn
    return numba.njit(*args, **kwargs)
