"""Backend selection for the hot kernels.

Numba is used when importable unless ``FROGSIM_DISABLE_NUMBA`` is set to a
truthy value, in which case the vectorized numpy implementations are used.
"""

import os

_FLAG = os.environ.get("FROGSIM_DISABLE_NUMBA", "").strip().lower()

try:
    import numba  # noqa: F401

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    NUMBA_AVAILABLE = False

USE_NUMBA = NUMBA_AVAILABLE and _FLAG not in ("1", "true", "yes", "on")

BACKEND = "numba" if USE_NUMBA else "numpy"
