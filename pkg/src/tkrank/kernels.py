"""Backend selection for the hot loops.

The compiled extension is used when importable; set ``TKRANK_PURE_PYTHON=1``
to force the numpy fallback.
"""

import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if not os.environ.get("TKRANK_PURE_PYTHON"):
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        _compiled = None
    if _compiled is not None:
        _impl = _compiled
        BACKEND = "cython"

rbf_transform = _impl.rbf_transform
rbf_window_pool = _impl.rbf_window_pool
rbf_window_pool_grad = _impl.rbf_window_pool_grad
bm25_accumulate = _impl.bm25_accumulate


def available_backends():
    """Map backend name to module for every backend importable in this process."""
    out = {"python": _kernels_py}
    try:
        from . import _kernels
        out["cython"] = _kernels
    except ImportError:
        pass
    return out
