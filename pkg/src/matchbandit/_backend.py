"""Kernel backend selection.

The compiled extension is used when importable; setting
``MATCHBANDIT_PURE_PYTHON=1`` forces the numpy fallback.
"""
import os

if os.environ.get("MATCHBANDIT_PURE_PYTHON"):
    from . import _pykernels as kernels
    BACKEND = "python"
else:
    try:
        from . import _ckernels as kernels
        BACKEND = "cython"
    except ImportError:  # extension not built
        from . import _pykernels as kernels
        BACKEND = "python"

__all__ = ["kernels", "BACKEND"]
