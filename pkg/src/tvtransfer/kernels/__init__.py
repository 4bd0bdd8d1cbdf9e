"""Hot numerical kernels with a compiled fast path.

The compiled Cython extension is preferred when it imported cleanly; the
numpy implementation is the reference and the fallback.  Selection can be
forced with ``TVTRANSFER_KERNELS=numpy`` or ``=cython``.
"""

import os

from . import _reference

_requested = os.environ.get("TVTRANSFER_KERNELS", "auto")
if _requested not in ("auto", "numpy", "cython"):
    raise ValueError(
        f"TVTRANSFER_KERNELS must be 'numpy' or 'cython', got {_requested!r}")

_impl = _reference
backend = "numpy"
if _requested in ("auto", "cython"):
    try:
        from . import _fast as _impl_fast
        _impl = _impl_fast
        backend = "cython"
    except ImportError:
        if _requested == "cython":
            raise

rbf_features = _impl.rbf_features
td_loss_grad_multi = _impl.td_loss_grad_multi
adam_update = _impl.adam_update

reference_rbf_features = _reference.rbf_features
reference_td_loss_grad_multi = _reference.td_loss_grad_multi
reference_adam_update = _reference.adam_update

__all__ = [
    "backend",
    "rbf_features",
    "td_loss_grad_multi",
    "adam_update",
    "reference_rbf_features",
    "reference_td_loss_grad_multi",
    "reference_adam_update",
]
