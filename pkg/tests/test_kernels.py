"""The compiled backend must agree with the NumPy fallback."""
import numpy as np
import pytest

from osvi import kernels
from osvi.kernels import numpy_backend

native = pytest.importorskip("osvi.kernels._native")


@pytest.mark.parametrize("dtype", [np.float32, np.float64])
def test_im2col_col2im_match(rng, dtype):
    x = rng.standard_normal((2, 3, 9, 7)).astype(dtype)
    for k, stride, pad in [(3, 1, 1), (3, 2, 1), (1, 1, 0), (5, 1, 2)]:
        if (9 + 2 * pad - k) % stride or (7 + 2 * pad - k) % stride:
            continue
        a = native.im2col(x, k, stride, pad)
        b = numpy_backend.im2col(x, k, stride, pad)
        np.testing.assert_array_equal(a, b)
        cols = rng.standard_normal(a.shape).astype(dtype)
        da = native.col2im(cols, 2, 3, 9, 7, k, stride, pad)
        db = numpy_backend.col2im(cols, 2, 3, 9, 7, k, stride, pad)
        rtol = 1e-6 if dtype == np.float32 else 1e-12
        np.testing.assert_allclose(da, db, rtol=rtol, atol=1e-6 if dtype == np.float32 else 1e-12)


@pytest.mark.parametrize("dtype", [np.float32, np.float64])
def test_abt_matches(rng, dtype):
    a = rng.standard_normal((3, 17, 8)).astype(dtype)
    b = rng.standard_normal((3, 23, 8)).astype(dtype)
    x = native.abt(a, b)
    y = numpy_backend.abt(a, b)
    np.testing.assert_allclose(x, y, rtol=1e-5 if dtype == np.float32 else 1e-12,
                               atol=1e-6 if dtype == np.float32 else 1e-12)


@pytest.mark.parametrize("dtype", [np.float32, np.float64])
@pytest.mark.parametrize("ban_kind", [None, "cols", "full"])
def test_masked_softmax_matches(rng, dtype, ban_kind):
    s = (rng.standard_normal((2, 6, 9)) * 3).astype(dtype)
    ban_cols = ban_full = None
    if ban_kind == "cols":
        ban_cols = rng.random(9) < 0.3
    elif ban_kind == "full":
        ban_full = rng.random((6, 9)) < 0.3
        ban_full[2, :] = True  # one all-banned row
    pn = native.masked_softmax(s, 0.41, ban_cols, ban_full)
    pp = numpy_backend.masked_softmax(s, 0.41, ban_cols, ban_full)
    tol = 5e-6 if dtype == np.float32 else 1e-14
    np.testing.assert_allclose(pn, pp, atol=tol)
    # banned entries are exactly zero in both backends
    if ban_cols is not None:
        assert (pn[:, :, ban_cols] == 0).all() and (pp[:, :, ban_cols] == 0).all()
    if ban_full is not None:
        assert (pn[:, ban_full] == 0).all() and (pp[:, ban_full] == 0).all()
        assert (pn[:, 2, :] == 0).all()

    dp = rng.standard_normal(s.shape).astype(dtype)
    gn = native.softmax_grad(pn, dp, 0.41)
    gp = numpy_backend.softmax_grad(pp, dp, 0.41)
    np.testing.assert_allclose(gn, gp, atol=5e-6 if dtype == np.float32 else 1e-14)


def test_backend_is_native_by_default():
    assert kernels.BACKEND == "native"


def test_all_banned_rows_are_zero_everywhere(rng):
    s = rng.standard_normal((1, 4, 5))
    ban = np.ones(5, dtype=bool)
    for impl in (native, numpy_backend):
        p = impl.masked_softmax(s, 1.0, ban, None)
        assert (p == 0).all()
