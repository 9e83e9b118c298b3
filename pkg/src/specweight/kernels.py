"""Kernel backend selection.

The compiled extension is preferred; set ``SPECWEIGHT_PURE=1`` to force the
NumPy fallback.  ``BACKEND`` names the implementation actually in use.
"""
import os

from . import _kernels_py

if os.environ.get("SPECWEIGHT_PURE", "") not in ("", "0"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

HUGE = _kernels_py.HUGE
power_table = _impl.power_table
legendre_table = _impl.legendre_table
product_matrix = _impl.product_matrix
point_basis = _impl.point_basis
seq_objective = _impl.seq_objective
