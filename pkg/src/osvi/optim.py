"""Adam with standard bias correction."""
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError


@dataclass
class AdamState:
    """Per-parameter moments and step counter."""
    m: np.ndarray
    v: np.ndarray
    t: int = 0


def adam_step(param, grad, state, lr=1e-4, beta1=0.9, beta2=0.999, eps=1e-8):
    """One bias-corrected Adam update, in place on ``param``."""
    if grad.shape != param.shape:
        raise DimensionError(f"adam_step: param {param.shape} vs grad {grad.shape}")
    dt = param.dtype.type
    lr, b1, b2, eps = dt(lr), dt(beta1), dt(beta2), dt(eps)
    state.t += 1
    state.m = b1 * state.m + (1 - b1) * grad
    state.v = b2 * state.v + (1 - b2) * grad * grad
    mhat = state.m / (1 - b1 ** state.t)
    vhat = state.v / (1 - b2 ** state.t)
    param -= lr * mhat / (np.sqrt(vhat) + eps)
    return param


@dataclass
class Adam:
    """Optimizer over an ordered list of (name, Tensor) parameters."""
    params: list
    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    states: dict = field(default_factory=dict)

    def _state(self, name, p):
        st = self.states.get(name)
        if st is None:
            st = AdamState(np.zeros_like(p.data), np.zeros_like(p.data))
            self.states[name] = st
        return st

    def step(self):
        for name, p in self.params:
            st = self._state(name, p)
            grad = p.grad if p.grad is not None else np.zeros_like(p.data)
            adam_step(p.data, grad, st, self.lr, self.beta1, self.beta2, self.eps)

    def zero_grad(self):
        for _, p in self.params:
            p.zero_grad()
