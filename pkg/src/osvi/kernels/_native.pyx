# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled hot kernels: patch extraction for convolution, the skinny
attention score product, and fused masked softmax forward/backward.

Semantics must match ``numpy_backend`` exactly: banned softmax entries are
written as literal 0.0 (never evaluated), and rows where every key is
banned come out all-zero.
"""
import numpy as np

cimport cython
from cython.parallel cimport prange
from libc.math cimport exp, expf

ctypedef fused real:
    float
    double


def im2col(x, Py_ssize_t k, Py_ssize_t stride, Py_ssize_t pad):
    cdef Py_ssize_t n = x.shape[0], c = x.shape[1], h = x.shape[2], w = x.shape[3]
    cdef Py_ssize_t ho = (h + 2 * pad - k) // stride + 1
    cdef Py_ssize_t wo = (w + 2 * pad - k) // stride + 1
    out = np.empty((c * k * k, n * ho * wo), dtype=x.dtype)
    if x.dtype == np.float32:
        _im2col[float](x, out, n, c, h, w, k, stride, pad, ho, wo)
    else:
        _im2col[double](x, out, n, c, h, w, k, stride, pad, ho, wo)
    return out


cdef void _im2col(real[:, :, :, ::1] x, real[:, ::1] out,
                  Py_ssize_t n, Py_ssize_t c, Py_ssize_t h, Py_ssize_t w,
                  Py_ssize_t k, Py_ssize_t stride, Py_ssize_t pad,
                  Py_ssize_t ho, Py_ssize_t wo) noexcept nogil:
    cdef Py_ssize_t row, ci, ki, kj, b, i, j, src_i, src_j, col
    for row in prange(c * k * k, schedule='static'):
        ci = row // (k * k)
        ki = (row // k) % k
        kj = row % k
        col = 0
        for b in range(n):
            for i in range(ho):
                src_i = i * stride + ki - pad
                if src_i < 0 or src_i >= h:
                    for j in range(wo):
                        out[row, col + j] = 0
                else:
                    for j in range(wo):
                        src_j = j * stride + kj - pad
                        if src_j < 0 or src_j >= w:
                            out[row, col + j] = 0
                        else:
                            out[row, col + j] = x[b, ci, src_i, src_j]
                col = col + wo


def col2im(cols, Py_ssize_t n, Py_ssize_t c, Py_ssize_t h, Py_ssize_t w,
           Py_ssize_t k, Py_ssize_t stride, Py_ssize_t pad):
    out = np.zeros((n, c, h, w), dtype=cols.dtype)
    if cols.dtype == np.float32:
        _col2im[float](cols, out, n, c, h, w, k, stride, pad)
    else:
        _col2im[double](cols, out, n, c, h, w, k, stride, pad)
    return out


cdef void _col2im(real[:, ::1] cols, real[:, :, :, ::1] out,
                  Py_ssize_t n, Py_ssize_t c, Py_ssize_t h, Py_ssize_t w,
                  Py_ssize_t k, Py_ssize_t stride, Py_ssize_t pad) noexcept nogil:
    cdef Py_ssize_t ho = (h + 2 * pad - k) // stride + 1
    cdef Py_ssize_t wo = (w + 2 * pad - k) // stride + 1
    cdef Py_ssize_t ci, ki, kj, b, i, j, src_i, src_j, row, col
    # parallel over channels: each channel owns a disjoint output slice,
    # so the scatter-add stays deterministic
    for ci in prange(c, schedule='static'):
        for ki in range(k):
            for kj in range(k):
                row = ci * k * k + ki * k + kj
                col = 0
                for b in range(n):
                    for i in range(ho):
                        src_i = i * stride + ki - pad
                        if src_i < 0 or src_i >= h:
                            col = col + wo
                            continue
                        for j in range(wo):
                            src_j = j * stride + kj - pad
                            if 0 <= src_j < w:
                                out[b, ci, src_i, src_j] += cols[row, col + j]
                        col = col + wo


def abt(a, b):
    """Batched a @ b^T for (B,n,d) x (B,m,d); fast for small d."""
    cdef Py_ssize_t bs = a.shape[0], n = a.shape[1], d = a.shape[2], m = b.shape[1]
    out = np.empty((bs, n, m), dtype=a.dtype)
    bt = np.ascontiguousarray(b.transpose(0, 2, 1))
    if a.dtype == np.float32:
        _abt[float](a, bt, out, bs, n, d, m)
    else:
        _abt[double](a, bt, out, bs, n, d, m)
    return out


cdef void _abt(real[:, :, ::1] a, real[:, :, ::1] bt, real[:, :, ::1] out,
               Py_ssize_t bs, Py_ssize_t n, Py_ssize_t d, Py_ssize_t m) noexcept nogil:
    cdef Py_ssize_t r, h, i, j, k
    for r in prange(bs * n, schedule='static'):
        h = r // n
        i = r % n
        for j in range(m):
            out[h, i, j] = a[h, i, 0] * bt[h, 0, j]
        for k in range(1, d):
            for j in range(m):
                out[h, i, j] = out[h, i, j] + a[h, i, k] * bt[h, k, j]


def masked_softmax(s, scale, ban_cols=None, ban_full=None):
    cdef Py_ssize_t bs = s.shape[0], n = s.shape[1], m = s.shape[2]
    out = np.empty_like(s)
    s2 = s.reshape(bs * n, m)
    out2 = out.reshape(bs * n, m)
    cdef unsigned char[::1] bc
    cdef unsigned char[:, ::1] bf
    if ban_cols is not None:
        bc = np.ascontiguousarray(ban_cols, dtype=np.uint8)
        if s.dtype == np.float32:
            _softmax_cols[float](s2, out2, <float> scale, bc)
        else:
            _softmax_cols[double](s2, out2, <double> scale, bc)
    elif ban_full is not None:
        bf = np.ascontiguousarray(ban_full, dtype=np.uint8)
        if s.dtype == np.float32:
            _softmax_full[float](s2, out2, <float> scale, bf, n)
        else:
            _softmax_full[double](s2, out2, <double> scale, bf, n)
    else:
        if s.dtype == np.float32:
            _softmax_plain[float](s2, out2, <float> scale)
        else:
            _softmax_plain[double](s2, out2, <double> scale)
    return out


cdef void _softmax_plain(real[:, ::1] s, real[:, ::1] out, real scale) noexcept nogil:
    cdef Py_ssize_t r, j, rows = s.shape[0], m = s.shape[1]
    cdef real mx, tot, v
    for r in prange(rows, schedule='static'):
        mx = s[r, 0]
        for j in range(1, m):
            if s[r, j] > mx:
                mx = s[r, j]
        mx = mx * scale
        tot = 0
        if real is float:
            for j in range(m):
                v = expf(s[r, j] * scale - mx)
                out[r, j] = v
                tot = tot + v
        else:
            for j in range(m):
                v = exp(s[r, j] * scale - mx)
                out[r, j] = v
                tot = tot + v
        for j in range(m):
            out[r, j] = out[r, j] / tot


cdef void _softmax_cols(real[:, ::1] s, real[:, ::1] out, real scale,
                        unsigned char[::1] ban) noexcept nogil:
    cdef Py_ssize_t r, j, rows = s.shape[0], m = s.shape[1]
    cdef real mx, tot, v
    cdef bint found
    for r in prange(rows, schedule='static'):
        found = False
        mx = 0
        for j in range(m):
            if not ban[j] and (not found or s[r, j] > mx):
                mx = s[r, j]
                found = True
        if not found:
            for j in range(m):
                out[r, j] = 0
            continue
        mx = mx * scale
        tot = 0
        for j in range(m):
            if ban[j]:
                out[r, j] = 0
            else:
                if real is float:
                    v = expf(s[r, j] * scale - mx)
                else:
                    v = exp(s[r, j] * scale - mx)
                out[r, j] = v
                tot = tot + v
        for j in range(m):
            if not ban[j]:
                out[r, j] = out[r, j] / tot


cdef void _softmax_full(real[:, ::1] s, real[:, ::1] out, real scale,
                        unsigned char[:, ::1] ban, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t r, j, q, rows = s.shape[0], m = s.shape[1]
    cdef real mx, tot, v
    cdef bint found
    for r in prange(rows, schedule='static'):
        q = r % n
        found = False
        mx = 0
        for j in range(m):
            if not ban[q, j] and (not found or s[r, j] > mx):
                mx = s[r, j]
                found = True
        if not found:
            for j in range(m):
                out[r, j] = 0
            continue
        mx = mx * scale
        tot = 0
        for j in range(m):
            if ban[q, j]:
                out[r, j] = 0
            else:
                if real is float:
                    v = expf(s[r, j] * scale - mx)
                else:
                    v = exp(s[r, j] * scale - mx)
                out[r, j] = v
                tot = tot + v
        for j in range(m):
            if not ban[q, j]:
                out[r, j] = out[r, j] / tot


def softmax_grad(p, dp, scale):
    out = np.empty_like(p)
    cdef Py_ssize_t bs = p.shape[0], n = p.shape[1], m = p.shape[2]
    p2 = p.reshape(bs * n, m)
    dp2 = dp.reshape(bs * n, m) if dp.flags.c_contiguous else np.ascontiguousarray(dp).reshape(bs * n, m)
    out2 = out.reshape(bs * n, m)
    if p.dtype == np.float32:
        _softmax_grad[float](p2, dp2, out2, <float> scale)
    else:
        _softmax_grad[double](p2, dp2, out2, <double> scale)
    return out


cdef void _softmax_grad(real[:, ::1] p, real[:, ::1] dp, real[:, ::1] out,
                        real scale) noexcept nogil:
    cdef Py_ssize_t r, j, rows = p.shape[0], m = p.shape[1]
    cdef real inner
    for r in prange(rows, schedule='static'):
        inner = 0
        for j in range(m):
            inner = inner + p[r, j] * dp[r, j]
        for j in range(m):
            out[r, j] = scale * p[r, j] * (dp[r, j] - inner)
