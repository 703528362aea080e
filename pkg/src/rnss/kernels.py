"""Import-time selection of the interpolation kernels.

The compiled Cython extension is used when it was built; otherwise the numpy
fallback is loaded. Set ``RNSS_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _kernels_py

if os.environ.get("RNSS_PURE_PYTHON") == "1":
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

bary_weights = _impl.bary_weights
interp_eval = _impl.interp_eval
basis_matrix = _impl.basis_matrix
share_eval = _impl.share_eval

__all__ = ["BACKEND", "bary_weights", "interp_eval", "basis_matrix", "share_eval"]
