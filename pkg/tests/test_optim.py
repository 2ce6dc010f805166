"""Adam contracts."""
import numpy as np
import pytest

from osvi.errors import DimensionError
from osvi.optim import Adam, AdamState, adam_step
from osvi.tensor import Tensor


def test_first_step_is_lr_times_sign(rng):
    p = rng.standard_normal(5)
    g = rng.standard_normal(5) * 3
    st = AdamState(np.zeros(5), np.zeros(5))
    p0 = p.copy()
    adam_step(p, g, st, lr=1e-2, eps=1e-8)
    # at t=1 bias correction makes mhat=g, vhat=g^2, so step = lr*sign(g)
    np.testing.assert_allclose(p0 - p, 1e-2 * np.sign(g), rtol=1e-6)


def test_zero_grad_keeps_params_and_decays_moments():
    p = np.array([1.0, -2.0])
    st = AdamState(np.zeros(2), np.zeros(2))
    adam_step(p, np.zeros(2), st, lr=1e-3)
    np.testing.assert_array_equal(p, [1.0, -2.0])
    np.testing.assert_array_equal(st.m, 0.0)
    assert st.t == 1


def test_constant_grad_step_bound():
    # closed-form: with constant g, |step| = lr * mhat / (sqrt(vhat)+eps)
    lr, b1, b2, eps = 1e-3, 0.9, 0.999, 1e-8
    g = np.array([0.37])
    p = np.array([0.0])
    st = AdamState(np.zeros(1), np.zeros(1))
    m = v = 0.0
    for t in range(1, 3):
        prev = p.copy()
        adam_step(p, g, st, lr=lr, beta1=b1, beta2=b2, eps=eps)
        m = b1 * m + (1 - b1) * g[0]
        v = b2 * v + (1 - b2) * g[0] ** 2
        mhat, vhat = m / (1 - b1 ** t), v / (1 - b2 ** t)
        expect = lr * mhat / (np.sqrt(vhat) + eps)
        np.testing.assert_allclose(abs(prev - p)[0], expect, rtol=1e-10)
        assert abs(prev - p)[0] <= lr * (1 + 1e-6)


def test_shape_mismatch():
    with pytest.raises(DimensionError):
        adam_step(np.zeros(3), np.zeros(4), AdamState(np.zeros(3), np.zeros(3)))


def test_optimizer_over_named_params(rng):
    a = Tensor(rng.standard_normal(3).astype(np.float32), requires_grad=True)
    b = Tensor(rng.standard_normal(2).astype(np.float32), requires_grad=True)
    a.grad = np.ones(3, dtype=np.float32)
    opt = Adam([("a", a), ("b", b)], lr=1e-2)
    a0 = a.data.copy()
    b0 = b.data.copy()
    opt.step()
    assert not np.array_equal(a.data, a0)     # stepped
    np.testing.assert_array_equal(b.data, b0)  # no grad: moments zero, no move
    opt.zero_grad()
    assert a.grad is None
