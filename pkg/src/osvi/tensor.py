"""Dense tensors with reverse-mode automatic differentiation.

Tensors wrap contiguous NumPy arrays (float32 for training, float64 for
gradient checks). Operations execute eagerly and, while a Tape is active,
record themselves in execution order; since inputs always exist before an
op runs, that order is topological and ``backward`` is a single reverse
sweep with additive gradient accumulation.

Tensors are treated as immutable after creation (only optimizer steps
mutate parameter data, outside any tape).
"""
import numpy as np

from . import kernels
from .errors import ContractError, DimensionError, GeometryError, ModeError

_DEFAULT_DTYPE = np.float32
_FLOAT_DTYPES = (np.float32, np.float64)


def set_default_dtype(dtype):
    global _DEFAULT_DTYPE
    dtype = np.dtype(dtype).type
    if dtype not in _FLOAT_DTYPES:
        raise ContractError(f"default dtype must be float32 or float64, got {dtype}")
    _DEFAULT_DTYPE = dtype


def default_dtype():
    return _DEFAULT_DTYPE


class Tape:
    """Ordered record of executed ops. Usable as a context manager; a tape
    may be re-entered to append further ops (the GAN step does this)."""

    def __init__(self):
        self.ops = []

    def __enter__(self):
        _TAPE_STACK.append(self)
        return self

    def __exit__(self, *exc):
        popped = _TAPE_STACK.pop()
        assert popped is self

    def __len__(self):
        return len(self.ops)


_TAPE_STACK = []


def _active_tape():
    return _TAPE_STACK[-1] if _TAPE_STACK else None


class no_grad:
    """Disable recording (inference / constant computation)."""

    def __enter__(self):
        _TAPE_STACK.append(None)
        return self

    def __exit__(self, *exc):
        _TAPE_STACK.pop()


class _OpRecord:
    __slots__ = ("out", "inputs", "backward")

    def __init__(self, out, inputs, backward):
        self.out = out
        self.inputs = inputs
        self.backward = backward


class Tensor:
    __slots__ = ("data", "requires_grad", "grad", "tape")

    def __init__(self, data, requires_grad=False, dtype=None):
        if isinstance(data, Tensor):
            raise ContractError("wrap raw array data, not another Tensor")
        arr = np.asarray(data)
        if dtype is not None:
            arr = arr.astype(dtype, copy=False)
        elif arr.dtype.type not in _FLOAT_DTYPES:
            arr = arr.astype(_DEFAULT_DTYPE)
        self.data = np.ascontiguousarray(arr)
        self.requires_grad = bool(requires_grad)
        self.grad = None
        self.tape = None

    # -- introspection ----------------------------------------------------
    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    @property
    def is_leaf(self):
        return self.tape is None

    def item(self):
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else self._size_err()

    def _size_err(self):
        raise ContractError(f"item() needs a single element, shape is {self.data.shape}")

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, dtype={self.data.dtype.name}, requires_grad={self.requires_grad})"

    # -- gradient plumbing -------------------------------------------------
    def _ensure_grad(self):
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        return self.grad

    def zero_grad(self):
        self.grad = None

    def detach(self):
        out = Tensor.__new__(Tensor)
        out.data = self.data
        out.requires_grad = False
        out.grad = None
        out.tape = None
        return out

    def backward(self):
        backward(self)

    # -- operator sugar -----------------------------------------------------
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(_coerce(other, self.dtype), self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(_coerce(other, self.dtype), self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, p):
        return pow_(self, p)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, idx):
        return getitem(self, idx)

    def reshape(self, *shape):
        return reshape(self, shape[0] if len(shape) == 1 and isinstance(shape[0], (tuple, list)) else shape)

    def transpose(self, *axes):
        return transpose(self, axes if axes else None)

    def sum(self, axis=None, keepdims=False):
        return sum_(self, axis, keepdims)

    def mean(self, axis=None, keepdims=False):
        return mean(self, axis, keepdims)


def _coerce(x, ref_dtype):
    if isinstance(x, Tensor):
        return x
    return Tensor(np.asarray(x, dtype=ref_dtype))


def _apply(out_data, inputs, backward_fn):
    """Create the result tensor and record the op if a tape is active."""
    out = Tensor.__new__(Tensor)
    out.data = out_data
    out.grad = None
    tape = _active_tape()
    if tape is not None and any(t.requires_grad for t in inputs):
        out.requires_grad = True
        out.tape = tape
        tape.ops.append(_OpRecord(out, tuple(inputs), backward_fn))
    else:
        out.requires_grad = False
        out.tape = None
    return out


def backward(root):
    """Reverse sweep from a scalar root. Every requires_grad leaf recorded
    on the tape ends up with a grad array; leaves not reached from the root
    hold zeros."""
    if not isinstance(root, Tensor):
        raise ContractError("backward expects a Tensor")
    if root.data.size != 1:
        raise ContractError(f"backward root must be scalar, shape is {root.data.shape}")
    tape = root.tape
    if tape is None:
        raise ContractError("root has no recorded tape (nothing requires grad?)")
    grads = {id(root): np.ones_like(root.data)}
    for rec in reversed(tape.ops):
        gout = grads.pop(id(rec.out), None)
        if gout is None:
            for t in rec.inputs:
                if t.requires_grad and t.tape is None:
                    t._ensure_grad()
            continue
        gins = rec.backward(gout)
        for t, gi in zip(rec.inputs, gins):
            if gi is None or not t.requires_grad:
                continue
            if t.tape is None:
                t._ensure_grad()
                t.grad += gi
            else:
                acc = grads.get(id(t))
                grads[id(t)] = gi if acc is None else acc + gi


def _unbroadcast(g, shape):
    """Sum a broadcasted gradient back to the original shape."""
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, (gs, s) in enumerate(zip(g.shape, shape)) if s == 1 and gs != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return np.ascontiguousarray(g.reshape(shape))


def _check_dtypes(a, b, opname):
    if a.dtype != b.dtype:
        raise ContractError(f"{opname}: mixed dtypes {a.dtype} vs {b.dtype}")


# -- elementwise ------------------------------------------------------------

def add(a, b):
    b = _coerce(b, a.dtype)
    _check_dtypes(a, b, "add")
    try:
        out = a.data + b.data
    except ValueError:
        raise DimensionError(f"add: shapes {a.shape} and {b.shape} do not broadcast")
    return _apply(out, (a, b), lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)))


def sub(a, b):
    b = _coerce(b, a.dtype)
    _check_dtypes(a, b, "sub")
    try:
        out = a.data - b.data
    except ValueError:
        raise DimensionError(f"sub: shapes {a.shape} and {b.shape} do not broadcast")
    return _apply(out, (a, b), lambda g: (_unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)))


def mul(a, b):
    b = _coerce(b, a.dtype)
    _check_dtypes(a, b, "mul")
    try:
        out = a.data * b.data
    except ValueError:
        raise DimensionError(f"mul: shapes {a.shape} and {b.shape} do not broadcast")
    ad, bd = a.data, b.data
    return _apply(out, (a, b), lambda g: (_unbroadcast(g * bd, a.shape), _unbroadcast(g * ad, b.shape)))


def div(a, b):
    b = _coerce(b, a.dtype)
    _check_dtypes(a, b, "div")
    try:
        out = a.data / b.data
    except ValueError:
        raise DimensionError(f"div: shapes {a.shape} and {b.shape} do not broadcast")
    ad, bd = a.data, b.data

    def bwd(g):
        return (_unbroadcast(g / bd, a.shape), _unbroadcast(-g * ad / (bd * bd), b.shape))

    return _apply(out, (a, b), bwd)


def neg(a):
    return _apply(-a.data, (a,), lambda g: (-g,))


def pow_(a, p):
    p = float(p)
    out = a.data ** a.dtype.type(p)
    ad = a.data
    return _apply(out, (a,), lambda g: (g * a.dtype.type(p) * ad ** a.dtype.type(p - 1),))


def exp(a):
    out = np.exp(a.data)
    return _apply(out, (a,), lambda g: (g * out,))


def log(a):
    ad = a.data
    return _apply(np.log(ad), (a,), lambda g: (g / ad,))


def abs_(a):
    ad = a.data
    return _apply(np.abs(ad), (a,), lambda g: (g * np.sign(ad),))


def clamp(a, lo, hi):
    ad = a.data
    out = np.clip(ad, lo, hi)
    inside = ((ad > lo) & (ad < hi)).astype(ad.dtype)
    return _apply(out, (a,), lambda g: (g * inside,))


def relu(a):
    ad = a.data
    out = np.maximum(ad, 0)
    return _apply(out, (a,), lambda g: (g * (ad > 0),))


def sigmoid(a):
    ad = a.data
    out = np.empty_like(ad)
    pos = ad >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-ad[pos]))
    ez = np.exp(ad[~pos])
    out[~pos] = ez / (1.0 + ez)
    return _apply(out, (a,), lambda g: (g * out * (1 - out),))


_GELU_C = 0.7978845608028654  # sqrt(2/pi)
_GELU_A = 0.044715


def gelu(a):
    """tanh-form GELU: 0.5*x*(1+tanh(c*(x+a*x^3)))."""
    x = a.data
    dt = x.dtype.type
    c, al = dt(_GELU_C), dt(_GELU_A)
    u = c * (x + al * x * x * x)
    t = np.tanh(u)
    out = dt(0.5) * x * (1 + t)

    def bwd(g):
        du = c * (1 + 3 * al * x * x)
        return (g * (dt(0.5) * (1 + t) + dt(0.5) * x * (1 - t * t) * du),)

    return _apply(out, (a,), bwd)


# -- reductions --------------------------------------------------------------

def sum_(a, axis=None, keepdims=False):
    out = np.add.reduce(a.data, axis=axis, keepdims=keepdims) if axis is not None else a.data.sum()
    if axis is None:
        out = np.asarray(out, dtype=a.dtype)

    def bwd(g):
        if axis is None:
            return (np.broadcast_to(g, a.shape).copy(),)
        gg = g if keepdims else np.expand_dims(g, axis)
        return (np.broadcast_to(gg, a.shape).copy(),)

    return _apply(np.asarray(out), (a,), bwd)


def mean(a, axis=None, keepdims=False):
    if axis is None:
        count = a.data.size
    else:
        ax = axis if isinstance(axis, tuple) else (axis,)
        count = 1
        for i in ax:
            count *= a.shape[i]
    s = sum_(a, axis, keepdims)
    return mul(s, 1.0 / count)


def max_(a, axis=None, keepdims=False):
    out = np.max(a.data, axis=axis, keepdims=keepdims) if axis is not None else np.asarray(a.data.max())
    ad = a.data

    def bwd(g):
        if axis is None:
            ob, gb = out, g
        else:
            ob = out if keepdims else np.expand_dims(out, axis)
            gb = g if keepdims else np.expand_dims(g, axis)
        hit = (ad == ob)
        counts = hit.sum(axis=axis, keepdims=True) if axis is not None else hit.sum()
        return ((hit / counts) * gb,)

    return _apply(np.asarray(out), (a,), bwd)


# -- shape ops ----------------------------------------------------------------

def reshape(a, shape):
    shape = tuple(shape)
    out = a.data.reshape(shape)
    orig = a.shape
    return _apply(np.ascontiguousarray(out), (a,), lambda g: (np.ascontiguousarray(g.reshape(orig)),))


def transpose(a, axes=None):
    axes = tuple(axes) if axes is not None else tuple(reversed(range(a.ndim)))
    inv = np.argsort(axes)
    out = np.ascontiguousarray(a.data.transpose(axes))
    return _apply(out, (a,), lambda g: (np.ascontiguousarray(g.transpose(inv)),))


def getitem(a, idx):
    out = np.ascontiguousarray(a.data[idx])
    shape = a.shape

    def bwd(g):
        z = np.zeros(shape, dtype=g.dtype)
        z[idx] = g
        return (z,)

    return _apply(out, (a,), bwd)


def concat(tensors, axis=0):
    if not tensors:
        raise ContractError("concat of empty list")
    for t in tensors[1:]:
        _check_dtypes(tensors[0], t, "concat")
    try:
        out = np.concatenate([t.data for t in tensors], axis=axis)
    except ValueError:
        raise DimensionError(f"concat: incompatible shapes {[t.shape for t in tensors]}")
    sizes = [t.shape[axis] for t in tensors]
    offs = np.cumsum([0] + sizes)

    def bwd(g):
        pieces = []
        sl = [slice(None)] * g.ndim
        for i in range(len(sizes)):
            sl[axis] = slice(offs[i], offs[i + 1])
            pieces.append(np.ascontiguousarray(g[tuple(sl)]))
        return tuple(pieces)

    return _apply(out, tuple(tensors), bwd)


# -- linear algebra -------------------------------------------------------------

def matmul(a, b):
    _check_dtypes(a, b, "matmul")
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise DimensionError(f"matmul: shapes {a.shape} x {b.shape}")
    ad, bd = a.data, b.data
    out = ad @ bd

    def bwd(g):
        return (np.ascontiguousarray(g @ bd.T), np.ascontiguousarray(ad.T @ g))

    return _apply(out, (a, b), bwd)


_SMALL_INNER = 16


def bmm(a, b):
    """Batched matmul (B,n,k) @ (B,k,m)."""
    _check_dtypes(a, b, "bmm")
    if a.ndim != 3 or b.ndim != 3 or a.shape[0] != b.shape[0] or a.shape[2] != b.shape[1]:
        raise DimensionError(f"bmm: shapes {a.shape} x {b.shape}")
    ad, bd = a.data, b.data
    out = np.matmul(ad, bd)

    def bwd(g):
        # da = g @ b^T = abt(g, b): use the skinny kernel when the free dim
        # of b is small (the attention A@V backward)
        if bd.shape[2] <= _SMALL_INNER:
            da = kernels.abt(np.ascontiguousarray(g), bd)
        else:
            da = np.matmul(g, bd.transpose(0, 2, 1))
        db = np.matmul(ad.transpose(0, 2, 1), g)
        return (np.ascontiguousarray(da), np.ascontiguousarray(db))

    return _apply(out, (a, b), bwd)


def abt(a, b):
    """Batched a @ b^T for (B,n,d) x (B,m,d) -> (B,n,m); the attention
    score product (d is small, routed to the compiled kernel)."""
    _check_dtypes(a, b, "abt")
    if a.ndim != 3 or b.ndim != 3 or a.shape[0] != b.shape[0] or a.shape[2] != b.shape[2]:
        raise DimensionError(f"abt: shapes {a.shape} x {b.shape}")
    ad, bd = a.data, b.data
    if ad.shape[2] <= _SMALL_INNER:
        out = kernels.abt(ad, bd)
    else:
        out = np.matmul(ad, bd.transpose(0, 2, 1))

    def bwd(g):
        da = np.matmul(g, bd)
        db = np.matmul(g.transpose(0, 2, 1), ad)
        return (np.ascontiguousarray(da), np.ascontiguousarray(db))

    return _apply(out, (a, b), bwd)


# -- softmax family ---------------------------------------------------------------

def softmax(a, axis):
    """Max-subtracted softmax along ``axis``; slices sum to 1."""
    if not -a.ndim <= axis < a.ndim:
        raise ContractError(f"softmax: axis {axis} out of range for shape {a.shape}")
    axis = axis % a.ndim
    last = a.ndim - 1
    moved = np.ascontiguousarray(np.moveaxis(a.data, axis, last))
    m = moved.shape[-1]
    folded = moved.reshape(1, -1, m)
    p = kernels.masked_softmax(folded, 1.0, None, None)
    pm = p.reshape(moved.shape)
    out = np.ascontiguousarray(np.moveaxis(pm, last, axis))

    def bwd(g):
        gm = np.ascontiguousarray(np.moveaxis(g, axis, last)).reshape(1, -1, m)
        ds = kernels.softmax_grad(p, gm, 1.0)
        return (np.ascontiguousarray(np.moveaxis(ds.reshape(moved.shape), last, axis)),)

    return _apply(out, (a,), bwd)


def attn_softmax(s, scale, ban_cols=None, ban_full=None):
    """Fused scale + score masking + softmax over the last axis of (B,n,m).

    Equivalent to softmax(masked_fill(s*scale, ban, -1e9), axis=-1) for rows
    with at least one surviving key, with banned weights exactly 0.0; rows
    whose keys are all banned come out exactly zero (all-masked fallback).
    """
    if s.ndim != 3:
        raise DimensionError(f"attn_softmax: expected (B,n,m), got {s.shape}")
    if ban_cols is not None and ban_full is not None:
        raise ContractError("attn_softmax: pass at most one ban specification")
    if ban_cols is not None:
        ban_cols = np.ascontiguousarray(ban_cols, dtype=bool)
        if ban_cols.shape != (s.shape[2],):
            raise DimensionError(f"attn_softmax: ban_cols {ban_cols.shape} vs scores {s.shape}")
    if ban_full is not None:
        ban_full = np.ascontiguousarray(ban_full, dtype=bool)
        if ban_full.shape != s.shape[1:]:
            raise DimensionError(f"attn_softmax: ban_full {ban_full.shape} vs scores {s.shape}")
    p = kernels.masked_softmax(s.data, float(scale), ban_cols, ban_full)

    def bwd(g):
        return (kernels.softmax_grad(p, g, float(scale)),)

    return _apply(p, (s,), bwd)


def masked_fill(s, mask, value=-1e9):
    """Write ``value`` where mask holds; gradient is blocked there."""
    mask = np.asarray(mask.data if isinstance(mask, Tensor) else mask).astype(bool)
    if mask.shape != s.shape:
        raise DimensionError(f"masked_fill: mask {mask.shape} vs data {s.shape}")
    out = np.where(mask, s.dtype.type(value), s.data)
    keep = ~mask
    return _apply(out, (s,), lambda g: (g * keep,))


# -- normalization -----------------------------------------------------------------

def layer_norm(x, gamma, beta, eps=1e-5):
    """Normalize over the last (channel) axis with population variance."""
    c = x.shape[-1]
    if gamma.shape != (c,) or beta.shape != (c,):
        raise DimensionError(f"layer_norm: gamma {gamma.shape} / beta {beta.shape} vs channels {c}")
    xd = x.data
    dt = xd.dtype.type
    mu = xd.mean(axis=-1, keepdims=True)
    xc = xd - mu
    var = np.mean(xc * xc, axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + dt(eps))
    xhat = xc * inv
    out = xhat * gamma.data + beta.data

    def bwd(g):
        dims = tuple(range(g.ndim - 1))
        dgamma = (g * xhat).sum(axis=dims)
        dbeta = g.sum(axis=dims)
        dxhat = g * gamma.data
        m1 = dxhat.mean(axis=-1, keepdims=True)
        m2 = (dxhat * xhat).mean(axis=-1, keepdims=True)
        dx = inv * (dxhat - m1 - xhat * m2)
        return (np.ascontiguousarray(dx), dgamma, dbeta)

    return _apply(out, (x, gamma, beta), bwd)


# -- convolution -------------------------------------------------------------------

def conv2d(x, w, b=None, stride=1, pad=None):
    """Cross-correlation. x: (C,H,W) or (N,C,H,W); w: (Co,Ci,k,k)."""
    single = x.ndim == 3
    xd = x.data[None] if single else x.data
    if xd.ndim != 4 or w.ndim != 4 or w.shape[2] != w.shape[3]:
        raise DimensionError(f"conv2d: input {x.shape}, weight {w.shape}")
    n, c, h, wd_ = xd.shape
    co, ci, k, _ = w.shape
    if ci != c:
        raise DimensionError(f"conv2d: input channels {c} vs weight channels {ci}")
    if pad is None:
        pad = k // 2
    # floor output size (framework convention): trailing rows/cols that
    # cannot seat a full window are dropped
    if h + 2 * pad < k or wd_ + 2 * pad < k:
        raise DimensionError(
            f"conv2d: kernel {k} exceeds padded input ({h}x{wd_}, pad={pad})")
    ho = (h + 2 * pad - k) // stride + 1
    wo = (wd_ + 2 * pad - k) // stride + 1
    cols = kernels.im2col(np.ascontiguousarray(xd), k, stride, pad)
    w2 = w.data.reshape(co, ci * k * k)
    out2 = w2 @ cols
    if b is not None:
        out2 = out2 + b.data[:, None]
    out = np.ascontiguousarray(out2.reshape(co, n, ho, wo).transpose(1, 0, 2, 3))
    if single:
        out = out[0]
    inputs = (x, w) if b is None else (x, w, b)

    def bwd(g):
        g4 = g[None] if single else g
        gm = np.ascontiguousarray(g4.transpose(1, 0, 2, 3)).reshape(co, n * ho * wo)
        dw = (gm @ cols.T).reshape(w.shape)
        dcols = w2.T @ gm
        dx = kernels.col2im(np.ascontiguousarray(dcols), n, c, h, wd_, k, stride, pad)
        if single:
            dx = dx[0]
        if b is None:
            return (dx, dw)
        return (dx, dw, gm.sum(axis=1))

    return _apply(out, inputs, bwd)


def conv3d(x, w, b=None, strides=(1, 1, 1), pads=None):
    """Spatio-temporal cross-correlation. x: (C,T,H,W); w: (Co,Ci,kt,kh,kw)."""
    if x.ndim != 4 or w.ndim != 5:
        raise DimensionError(f"conv3d: input {x.shape}, weight {w.shape}")
    c, t, h, wd_ = x.shape
    co, ci, kt, kh, kw = w.shape
    if ci != c:
        raise DimensionError(f"conv3d: input channels {c} vs weight channels {ci}")
    if pads is None:
        pads = (kt // 2, kh // 2, kw // 2)
    st, sh, sw = strides
    pt, ph, pw = pads
    if t + 2 * pt < kt or h + 2 * ph < kh or wd_ + 2 * pw < kw:
        raise DimensionError(f"conv3d: kernel {w.shape[2:]} exceeds padded input {x.shape}")
    to = (t + 2 * pt - kt) // st + 1
    ho = (h + 2 * ph - kh) // sh + 1
    wo = (wd_ + 2 * pw - kw) // sw + 1
    cols = kernels.im2col3(x.data, (kt, kh, kw), strides, pads)
    w2 = w.data.reshape(co, -1)
    out2 = w2 @ cols
    if b is not None:
        out2 = out2 + b.data[:, None]
    out = out2.reshape(co, to, ho, wo)
    inputs = (x, w) if b is None else (x, w, b)

    def bwd(g):
        gm = g.reshape(co, -1)
        dw = (gm @ cols.T).reshape(w.shape)
        dcols = w2.T @ gm
        dx = kernels.col2im3(dcols, (c, t, h, wd_), (kt, kh, kw), strides, pads)
        if b is None:
            return (dx, dw)
        return (dx, dw, gm.sum(axis=1))

    return _apply(out, inputs, bwd)


# -- resampling -------------------------------------------------------------------

_RESAMPLE_MATS = {}

POOL_MODES = ("adaptive-avg-pool", "max-pool")
UP_MODES = ("bilinear-up", "nearest-up")


def _cell_bounds(n_in, n_out):
    return [(i * n_in) // n_out for i in range(n_out + 1)]


def _resample_matrix(n_in, n_out, mode, dtype):
    key = (n_in, n_out, mode, np.dtype(dtype).name)
    m = _RESAMPLE_MATS.get(key)
    if m is not None:
        return m
    m = np.zeros((n_out, n_in), dtype=dtype)
    if mode == "adaptive-avg-pool":
        bounds = _cell_bounds(n_in, n_out)
        for i in range(n_out):
            lo, hi = bounds[i], bounds[i + 1]
            m[i, lo:hi] = 1.0 / (hi - lo)
    elif mode == "nearest-up":
        for i in range(n_out):
            m[i, (i * n_in) // n_out] = 1.0
    elif mode == "bilinear-up":
        scale = n_in / n_out
        for i in range(n_out):
            src = (i + 0.5) * scale - 0.5
            src = min(max(src, 0.0), n_in - 1.0)
            lo = int(np.floor(src))
            hi = min(lo + 1, n_in - 1)
            frac = src - lo
            m[i, lo] += 1.0 - frac
            m[i, hi] += frac
    else:
        raise ModeError(f"unknown resample mode {mode!r}")
    _RESAMPLE_MATS[key] = m
    return m


def resample(x, target, mode):
    """Spatial resize of (C,H,W) or (N,C,H,W) maps to target (H2,W2)."""
    h2, w2 = target
    if h2 <= 0 or w2 <= 0:
        raise GeometryError(f"resample: target {target} must be positive")
    single = x.ndim == 3
    xd = x.data[None] if single else x.data
    if xd.ndim != 4:
        raise DimensionError(f"resample: expected (C,H,W) or (N,C,H,W), got {x.shape}")
    n, c, h, w = xd.shape
    if mode in POOL_MODES:
        if h2 > h or w2 > w:
            raise ModeError(f"{mode} cannot upscale {h}x{w} -> {h2}x{w2}")
    elif mode in UP_MODES:
        if h2 < h or w2 < w:
            raise ModeError(f"{mode} cannot downscale {h}x{w} -> {h2}x{w2}")
    else:
        raise ModeError(f"unknown resample mode {mode!r}")

    if mode == "max-pool":
        return _max_pool(x, xd, target, single)

    my = _resample_matrix(h, h2, mode, xd.dtype)
    mx = _resample_matrix(w, w2, mode, xd.dtype)
    out = np.matmul(np.matmul(my, xd), mx.T)
    if single:
        out = out[0]

    def bwd(g):
        g4 = g[None] if single else g
        dx = np.matmul(np.matmul(my.T, g4), mx)
        return (np.ascontiguousarray(dx[0] if single else dx),)

    return _apply(np.ascontiguousarray(out), (x,), bwd)


def _max_pool(x, xd, target, single):
    n, c, h, w = xd.shape
    h2, w2 = target
    if h % h2 == 0 and w % w2 == 0:
        fh, fw = h // h2, w // w2
        r = xd.reshape(n, c, h2, fh, w2, fw)
        out = r.max(axis=(3, 5))

        def bwd(g):
            g4 = (g[None] if single else g)
            ob = out.reshape(n, c, h2, 1, w2, 1)
            hit = (r == ob)
            counts = hit.sum(axis=(3, 5), keepdims=True)
            dx = (hit / counts) * g4.reshape(n, c, h2, 1, w2, 1)
            dx = dx.reshape(n, c, h, w)
            return (np.ascontiguousarray(dx[0] if single else dx),)
    else:
        rb = _cell_bounds(h, h2)
        cb = _cell_bounds(w, w2)
        out = np.empty((n, c, h2, w2), dtype=xd.dtype)
        for i in range(h2):
            for j in range(w2):
                out[:, :, i, j] = xd[:, :, rb[i]:rb[i + 1], cb[j]:cb[j + 1]].max(axis=(2, 3))

        def bwd(g):
            g4 = (g[None] if single else g)
            dx = np.zeros_like(xd)
            for i in range(h2):
                for j in range(w2):
                    cell = xd[:, :, rb[i]:rb[i + 1], cb[j]:cb[j + 1]]
                    hit = cell == out[:, :, i:i + 1, j:j + 1]
                    counts = hit.sum(axis=(2, 3), keepdims=True)
                    dx[:, :, rb[i]:rb[i + 1], cb[j]:cb[j + 1]] += \
                        (hit / counts) * g4[:, :, i:i + 1, j:j + 1]
            return (dx[0] if single else dx,)

    res = out[0] if single else out
    return _apply(np.ascontiguousarray(res), (x,), bwd)
