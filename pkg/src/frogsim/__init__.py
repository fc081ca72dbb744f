"""Frog-model simulation and analysis on the integer lattice Z^d."""

__version__ = "0.1.0"

from ._backend import BACKEND  # noqa: E402

__all__ = ["BACKEND", "__version__"]
