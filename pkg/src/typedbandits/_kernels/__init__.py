"""Backend selection for the numeric hot kernels.

The compiled Cython extension is preferred; the pure-numpy fallback is used
when the extension is missing or when the environment variable
``TYPEDBANDITS_PURE_PYTHON`` is set to a non-empty value.  Call sites access
kernels as module attributes (``_kernels.kmeans_fit(...)``) so tests and
benchmarks can swap implementations.
"""

import os

from . import _fallback

if os.environ.get("TYPEDBANDITS_PURE_PYTHON"):
    _impl = _fallback
else:
    try:
        from . import _speedups as _impl
    except ImportError:
        _impl = _fallback

BACKEND = _impl.BACKEND_NAME

match_type = _impl.match_type
ucb_argmax = _impl.ucb_argmax
kmeans_fit = _impl.kmeans_fit
pool_ucb_select = _impl.pool_ucb_select

__all__ = ["BACKEND", "match_type", "ucb_argmax", "kmeans_fit", "pool_ucb_select"]
