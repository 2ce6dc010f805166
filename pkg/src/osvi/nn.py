"""Parameterized layers on top of the tensor ops.

Modules only hold parameters and wire ops together; parameter iteration
follows attribute insertion order, which keeps checkpoint layout and
initialization deterministic.
"""
import numpy as np

from .tensor import (Tensor, concat, conv2d, conv3d, gelu, layer_norm,
                     matmul, max_, mean, relu, reshape, sigmoid)


class Module:
    def named_params(self, prefix=""):
        for name, val in vars(self).items():
            if isinstance(val, Tensor):
                if val.requires_grad:
                    yield prefix + name, val
            elif isinstance(val, Module):
                yield from val.named_params(f"{prefix}{name}.")
            elif isinstance(val, (list, tuple)):
                for i, item in enumerate(val):
                    if isinstance(item, Module):
                        yield from item.named_params(f"{prefix}{name}.{i}.")

    def params(self):
        return [p for _, p in self.named_params()]

    def zero_grad(self):
        for p in self.params():
            p.zero_grad()

    def num_params(self):
        return sum(p.size for p in self.params())


def _param(rng, shape, std, dtype):
    if std == 0.0:
        data = np.zeros(shape, dtype=dtype)
    else:
        data = (rng.standard_normal(shape) * std).astype(dtype)
    return Tensor(data, requires_grad=True, dtype=dtype)


class Conv2d(Module):
    def __init__(self, cin, cout, k, rng, stride=1, pad=None, bias=True,
                 w_std=None, dtype=np.float32):
        std = w_std if w_std is not None else float(np.sqrt(2.0 / (cin * k * k)))
        self.w = _param(rng, (cout, cin, k, k), std, dtype)
        self.b = _param(rng, (cout,), 0.0, dtype) if bias else None
        self.stride = stride
        self.pad = k // 2 if pad is None else pad

    def __call__(self, x):
        return conv2d(x, self.w, self.b, stride=self.stride, pad=self.pad)


class Conv3d(Module):
    def __init__(self, cin, cout, k, rng, strides=(1, 1, 1), bias=True,
                 w_std=None, dtype=np.float32):
        std = w_std if w_std is not None else float(np.sqrt(2.0 / (cin * k ** 3)))
        self.w = _param(rng, (cout, cin, k, k, k), std, dtype)
        self.b = _param(rng, (cout,), 0.0, dtype) if bias else None
        self.strides = strides

    def __call__(self, x):
        return conv3d(x, self.w, self.b, strides=self.strides)


class Linear(Module):
    def __init__(self, cin, cout, rng, bias=True, w_std=None, dtype=np.float32):
        std = w_std if w_std is not None else float(np.sqrt(1.0 / cin))
        self.w = _param(rng, (cin, cout), std, dtype)
        self.b = _param(rng, (cout,), 0.0, dtype) if bias else None

    def __call__(self, x):
        out = matmul(x, self.w)
        return out + self.b if self.b is not None else out


class LayerNorm(Module):
    def __init__(self, c, dtype=np.float32, eps=1e-5):
        self.gamma = Tensor(np.ones(c, dtype=dtype), requires_grad=True)
        self.beta = Tensor(np.zeros(c, dtype=dtype), requires_grad=True)
        self.eps = eps

    def __call__(self, x):
        return layer_norm(x, self.gamma, self.beta, eps=self.eps)


class Cbam(Module):
    """Channel attention (shared MLP over global avg/max vectors) followed
    by spatial attention (7x7 conv over channelwise avg/max maps)."""

    def __init__(self, c, rng, reduction=4, k=7, dtype=np.float32):
        hidden = max(c // reduction, 1)
        self.fc1 = Linear(c, hidden, rng, bias=False, dtype=dtype)
        self.fc2 = Linear(hidden, c, rng, bias=False, dtype=dtype)
        self.spatial = Conv2d(2, 1, k, rng, bias=False, dtype=dtype)

    def __call__(self, x):
        n, c = x.shape[0], x.shape[1]
        avg = mean(x, axis=(2, 3))
        mx = max_(x, axis=(2, 3))
        gate = sigmoid(self.fc2(relu(self.fc1(avg))) + self.fc2(relu(self.fc1(mx))))
        x = x * reshape(gate, (n, c, 1, 1))
        savg = mean(x, axis=1, keepdims=True)
        smax = max_(x, axis=1, keepdims=True)
        sgate = sigmoid(self.spatial(concat([savg, smax], axis=1)))
        return x * sgate


class Mlp(Module):
    def __init__(self, c, hidden, rng, dtype=np.float32):
        self.fc1 = Linear(c, hidden, rng, dtype=dtype)
        self.fc2 = Linear(hidden, c, rng, w_std=float(np.sqrt(0.5 / hidden)), dtype=dtype)

    def __call__(self, x):
        return self.fc2(gelu(self.fc1(x)))


class MultiHeadAttention(Module):
    """Shared projection block for both attention flavors; masking is the
    caller's business (banned keys / per-pair bans / none)."""

    def __init__(self, c, heads, rng, dtype=np.float32):
        if c % heads:
            raise ValueError(f"channels {c} not divisible by heads {heads}")
        self.wq = Linear(c, c, rng, dtype=dtype)
        self.wk = Linear(c, c, rng, dtype=dtype)
        self.wv = Linear(c, c, rng, dtype=dtype)
        self.wo = Linear(c, c, rng, w_std=float(np.sqrt(0.5 / c)), dtype=dtype)
        self.heads = heads
        self.head_dim = c // heads
        self.scale = 1.0 / float(np.sqrt(self.head_dim))

    def split_heads(self, x):
        n, c = x.shape
        return reshape(x, (n, self.heads, self.head_dim)).transpose(1, 0, 2)

    def merge_heads(self, x3):
        h, n, d = x3.shape
        return reshape(x3.transpose(1, 0, 2), (n, h * d))

    def project(self, x):
        return (self.split_heads(self.wq(x)),
                self.split_heads(self.wk(x)),
                self.split_heads(self.wv(x)))
