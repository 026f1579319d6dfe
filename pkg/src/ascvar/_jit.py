"""Numba switch.

Set ``ASCVAR_DISABLE_NUMBA=1`` before import to force the pure-numpy kernels.
"""

import os

_FALSEY = {"", "0", "false", "no", "off"}

try:
    import numba  # noqa: F401

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and os.environ.get("ASCVAR_DISABLE_NUMBA", "0").strip().lower() in _FALSEY


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"
