"""Finite-difference verification of analytic gradients.

All checks run in float64; h=1e-5 central differences give truncation
error around 1e-10, far below the 1e-4 acceptance bar.
"""
import numpy as np

from .errors import ContractError, EvaluationError
from .tensor import Tape, Tensor, backward, no_grad


def _eval_scalar(f, x):
    with no_grad():
        y = f(x)
    if y.data.size != 1:
        raise ContractError(f"grad_check target must be scalar, got shape {y.data.shape}")
    val = float(y.data.reshape(-1)[0])
    if not np.isfinite(val):
        raise EvaluationError("grad_check: non-finite function value")
    return val


def grad_check(f, x, h=1e-5):
    """Max over coordinates of |analytic - central difference| / max(1, |analytic|)."""
    if x.dtype != np.float64:
        raise ContractError("grad_check requires float64 inputs")
    x = Tensor(x.data.copy(), requires_grad=True)
    with Tape():
        y = f(x)
        if y.data.size != 1:
            raise ContractError(f"grad_check target must be scalar, got shape {y.data.shape}")
        if not np.isfinite(y.data).all():
            raise EvaluationError("grad_check: non-finite function value")
        backward(y)
    analytic = (x.grad if x.grad is not None else np.zeros_like(x.data)).reshape(-1)

    flat = x.data.reshape(-1)
    worst = 0.0
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        fp = _eval_scalar(f, x)
        flat[i] = orig - h
        fm = _eval_scalar(f, x)
        flat[i] = orig
        fd = (fp - fm) / (2.0 * h)
        err = abs(analytic[i] - fd) / max(1.0, abs(analytic[i]))
        if err > worst:
            worst = err
    return worst


def grad_check_params(f, params, h=1e-5):
    """grad_check over several named parameters of a closure.

    ``f()`` must return a scalar Tensor built from ``params`` (a list of
    (name, Tensor) in float64). Returns the worst (name, error) pair.
    """
    for name, p in params:
        if p.dtype != np.float64:
            raise ContractError(f"grad_check_params: {name} is not float64")
    with Tape():
        y = f()
        if y.data.size != 1:
            raise ContractError("grad_check_params target must be scalar")
        backward(y)
    analytic = {name: (p.grad.copy() if p.grad is not None else np.zeros_like(p.data))
                for name, p in params}
    for _, p in params:
        p.zero_grad()

    worst_name, worst = None, -1.0
    for name, p in params:
        flat = p.data.reshape(-1)
        an = analytic[name].reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            fp = _eval_scalar(lambda _: f(), None)
            flat[i] = orig - h
            fm = _eval_scalar(lambda _: f(), None)
            flat[i] = orig
            fd = (fp - fm) / (2.0 * h)
            err = abs(an[i] - fd) / max(1.0, abs(an[i]))
            if err > worst:
                worst_name, worst = name, err
    return worst_name, worst
