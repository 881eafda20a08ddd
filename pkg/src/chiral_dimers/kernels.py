"""Kernel selection: compiled extension if importable, numpy otherwise.

Set CHIRAL_DIMERS_PURE_PYTHON=1 to force the numpy versions.
"""
import os

from . import _kernels_py

BACKEND = "python"
if os.environ.get("CHIRAL_DIMERS_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl
        BACKEND = "compiled"
    except ImportError:
        _impl = _kernels_py
else:
    _impl = _kernels_py

advance = _impl.advance
collective_lower = _impl.collective_lower
pair_marginals = _impl.pair_marginals
