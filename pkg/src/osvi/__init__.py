"""One-shot video inpainting: memory-based mask propagation plus a masked
spatio-temporal transformer for completion, trained end-to-end."""

__version__ = "0.1.0"

from .kernels import BACKEND as KERNEL_BACKEND  # noqa: F401
from .tensor import Tape, Tensor, backward, no_grad  # noqa: F401
