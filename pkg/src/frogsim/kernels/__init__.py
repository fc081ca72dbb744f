"""Hot kernels, dispatched to numba or numpy per ``frogsim._backend``.

Both implementations are importable by name (``numba_impl`` / ``numpy_impl``)
so the test suite and the benchmark can run them side by side.
"""

from .._backend import BACKEND, USE_NUMBA
from . import _np as numpy_impl

if USE_NUMBA:
    from . import _nb as numba_impl

    _impl = numba_impl
else:  # pragma: no cover - exercised in the fallback subprocess test
    numba_impl = None
    _impl = numpy_impl

DONE = numpy_impl.DONE
TARGETS_REACHED = numpy_impl.TARGETS_REACHED
NEED_CAPACITY = numpy_impl.NEED_CAPACITY
BOX_OVERFLOW = numpy_impl.BOX_OVERFLOW

advance_coupled = _impl.advance_coupled
aggregated_step = _impl.aggregated_step
ct_solve = _impl.ct_solve
walk_endpoints = _impl.walk_endpoints
walk_hitting_times = _impl.walk_hitting_times
walk_sup_sq = _impl.walk_sup_sq
walk_ranges = _impl.walk_ranges

__all__ = [
    "BACKEND",
    "numba_impl",
    "numpy_impl",
    "advance_coupled",
    "aggregated_step",
    "ct_solve",
    "walk_endpoints",
    "walk_hitting_times",
    "walk_sup_sq",
    "walk_ranges",
]
