"""Kernel backend selection.

The compiled extension (``osvi.kernels._native``) provides the hot inner
loops; if it is missing the NumPy implementations are used instead.
Override with ``OSVI_KERNELS=native`` or ``OSVI_KERNELS=numpy``.
"""
import os

from . import numpy_backend

_choice = os.environ.get("OSVI_KERNELS", "auto").lower()

if _choice == "numpy":
    _impl = numpy_backend
elif _choice in ("auto", "native", "cy"):
    try:
        from . import _native as _impl  # type: ignore[no-redef]
    except ImportError:
        if _choice != "auto":
            raise
        _impl = numpy_backend
else:
    raise ValueError(f"OSVI_KERNELS must be 'auto', 'native' or 'numpy', got {_choice!r}")

BACKEND = "native" if _impl is not numpy_backend else "numpy"

im2col = _impl.im2col
col2im = _impl.col2im
abt = _impl.abt
masked_softmax = _impl.masked_softmax
softmax_grad = _impl.softmax_grad

# 3D patch helpers are NumPy-only (the discriminator is small)
im2col3 = numpy_backend.im2col3
col2im3 = numpy_backend.col2im3
