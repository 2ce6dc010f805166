"""NumPy implementations of the hot kernels.

This is the fallback backend: semantics are identical to the compiled
backend in ``_native.pyx`` (banned attention entries are exactly zero,
all-banned rows are all-zero), only slower.
"""
import numpy as np
from numpy.lib.stride_tricks import as_strided

NAME = "numpy"


def im2col(x, k, stride, pad):
    """(N,C,H,W) -> (C*k*k, N*Ho*Wo) patch matrix, cross-correlation layout."""
    n, c, h, w = x.shape
    ho = (h + 2 * pad - k) // stride + 1
    wo = (w + 2 * pad - k) // stride + 1
    if pad:
        x = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    sn, sc, sh, sw = x.strides
    view = as_strided(
        x,
        shape=(n, c, k, k, ho, wo),
        strides=(sn, sc, sh, sw, sh * stride, sw * stride),
    )
    return np.ascontiguousarray(view.transpose(1, 2, 3, 0, 4, 5).reshape(c * k * k, n * ho * wo))


def col2im(cols, n, c, h, w, k, stride, pad):
    """Adjoint of im2col: scatter-add columns back to (N,C,H,W)."""
    ho = (h + 2 * pad - k) // stride + 1
    wo = (w + 2 * pad - k) // stride + 1
    xp = np.zeros((n, c, h + 2 * pad, w + 2 * pad), dtype=cols.dtype)
    cols6 = cols.reshape(c, k, k, n, ho, wo)
    for ki in range(k):
        hi = ki + stride * ho
        for kj in range(k):
            wj = kj + stride * wo
            xp[:, :, ki:hi:stride, kj:wj:stride] += cols6[:, ki, kj].transpose(1, 0, 2, 3)
    if pad:
        return np.ascontiguousarray(xp[:, :, pad:pad + h, pad:pad + w])
    return xp


def abt(a, b):
    """Batched a @ b^T for (B,n,d) x (B,m,d) -> (B,n,m)."""
    return np.matmul(a, b.transpose(0, 2, 1))


def masked_softmax(s, scale, ban_cols=None, ban_full=None):
    """Row softmax of ``s * scale`` over the last axis with banned entries.

    s: (B, n, m). ban_cols: (m,) bool, bans a key for every query/batch.
    ban_full: (n, m) bool, per (query, key) bans shared across batch.
    Banned entries come out exactly 0.0; rows with every key banned come
    out all-zero (the all-masked fallback).
    """
    dt = s.dtype.type
    z = s * dt(scale)
    if ban_cols is not None:
        banned = np.broadcast_to(ban_cols, z.shape)
    elif ban_full is not None:
        banned = np.broadcast_to(ban_full, z.shape)
    else:
        banned = None
    if banned is not None:
        z = np.where(banned, dt(-np.inf), z)
    mx = np.max(z, axis=-1, keepdims=True)
    mx = np.where(np.isfinite(mx), mx, dt(0))
    e = np.exp(z - mx)
    if banned is not None:
        e = np.where(banned, dt(0), e)
    tot = np.sum(e, axis=-1, keepdims=True)
    return e / np.where(tot == 0, dt(1), tot)


def softmax_grad(p, dp, scale):
    """Backward of masked_softmax: ds = scale * p * (dp - sum(p*dp))."""
    inner = np.sum(p * dp, axis=-1, keepdims=True)
    return (p * (dp - inner)) * p.dtype.type(scale)


# --- 3D convolution helpers (not compiled; the discriminator is small) ---

def im2col3(x, k3, strides, pads):
    """(C,T,H,W) -> (C*kt*kh*kw, To*Ho*Wo)."""
    c, t, h, w = x.shape
    kt, kh, kw = k3
    st, sh, sw = strides
    pt, ph, pw = pads
    to = (t + 2 * pt - kt) // st + 1
    ho = (h + 2 * ph - kh) // sh + 1
    wo = (w + 2 * pw - kw) // sw + 1
    xp = np.pad(x, ((0, 0), (pt, pt), (ph, ph), (pw, pw)))
    cols = np.empty((c, kt, kh, kw, to, ho, wo), dtype=x.dtype)
    for a in range(kt):
        for b in range(kh):
            for d in range(kw):
                cols[:, a, b, d] = xp[:, a:a + st * to:st, b:b + sh * ho:sh, d:d + sw * wo:sw]
    return cols.reshape(c * kt * kh * kw, to * ho * wo)


def col2im3(cols, shape, k3, strides, pads):
    """Adjoint of im2col3."""
    c, t, h, w = shape
    kt, kh, kw = k3
    st, sh, sw = strides
    pt, ph, pw = pads
    to = (t + 2 * pt - kt) // st + 1
    ho = (h + 2 * ph - kh) // sh + 1
    wo = (w + 2 * pw - kw) // sw + 1
    xp = np.zeros((c, t + 2 * pt, h + 2 * ph, w + 2 * pw), dtype=cols.dtype)
    cols7 = cols.reshape(c, kt, kh, kw, to, ho, wo)
    for a in range(kt):
        for b in range(kh):
            for d in range(kw):
                xp[:, a:a + st * to:st, b:b + sh * ho:sh, d:d + sw * wo:sw] += cols7[:, a, b, d]
    return np.ascontiguousarray(xp[:, pt:pt + t, ph:ph + h, pw:pw + w])
