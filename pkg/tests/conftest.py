import numpy as np
import pytest

from osvi.tensor import Tensor


@pytest.fixture
def rng():
    return np.random.default_rng(0)


def t64(arr, requires_grad=False):
    """Shorthand: float64 tensor from array-like."""
    return Tensor(np.asarray(arr, dtype=np.float64), requires_grad=requires_grad)


def randproj(rng, shape):
    """Fixed random projection tensor, used to build scalar targets that
    are sensitive to every output coordinate."""
    return Tensor(rng.standard_normal(shape), dtype=np.float64)
