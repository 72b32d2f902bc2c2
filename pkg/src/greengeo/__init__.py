"""Numerical toolkit for Green's-function level-set geometry on model manifolds."""

from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "__version__"]
