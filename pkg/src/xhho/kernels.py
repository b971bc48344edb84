"""Kernel backend selection.

The compiled extension ``xhho._kernels`` is used when it imports; otherwise,
or when ``XHHO_PURE_PYTHON`` is set, the pure Python twins are used.
"""
import os

from . import _kernels_py

if os.environ.get("XHHO_PURE_PYTHON"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

eval_monomials = _impl.eval_monomials
volume_recursion = _impl.volume_recursion
radial_edge_recursion = _impl.radial_edge_recursion
restrict_monomials = _impl.restrict_monomials
mgs = _impl.mgs

__all__ = [
    "BACKEND",
    "eval_monomials",
    "volume_recursion",
    "radial_edge_recursion",
    "restrict_monomials",
    "mgs",
]
