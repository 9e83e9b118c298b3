"""Orthonormal polynomials for nonstandard weights, spectral expansions and
condition-number-optimized cubature."""
from .kernels import BACKEND

__version__ = "0.1.0"
__all__ = ["BACKEND", "__version__"]
