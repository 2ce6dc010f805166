"""OSVT container and netpbm image round-trips."""
import io

import numpy as np
import pytest

from osvi.errors import DataError
from osvi.imgio import quantize_u8, read_pgm, read_ppm, u8_to_unit, write_pgm, write_ppm
from osvi.tensorio import load_tensor, read_tensor, save_tensor, write_tensor


@pytest.mark.parametrize("dtype", [np.float32, np.float64])
@pytest.mark.parametrize("shape", [(3,), (2, 3), (4, 1, 5), ()])
def test_osvt_roundtrip(rng, dtype, shape, tmp_path):
    arr = rng.standard_normal(shape).astype(dtype)
    path = tmp_path / "t.osvt"
    save_tensor(path, arr)
    back = load_tensor(path)
    assert back.dtype == dtype
    np.testing.assert_array_equal(back, arr)


def test_osvt_header_layout(rng):
    arr = np.arange(6, dtype=np.float32).reshape(2, 3)
    buf = io.BytesIO()
    write_tensor(buf, arr)
    raw = buf.getvalue()
    assert raw[:4] == b"OSVT"
    assert raw[4] == 1          # version
    assert raw[5] == 0          # dtype code f32
    assert raw[6] == 2          # rank
    assert int.from_bytes(raw[7:15], "little") == 2
    assert int.from_bytes(raw[15:23], "little") == 3
    assert len(raw) == 23 + 6 * 4


def test_osvt_bad_magic():
    with pytest.raises(DataError):
        read_tensor(io.BytesIO(b"NOPE" + b"\x00" * 30))


def test_osvt_multiple_in_stream(rng):
    a = rng.standard_normal((2, 2)).astype(np.float32)
    b = rng.standard_normal(5).astype(np.float64)
    buf = io.BytesIO()
    write_tensor(buf, a)
    write_tensor(buf, b)
    buf.seek(0)
    np.testing.assert_array_equal(read_tensor(buf), a)
    np.testing.assert_array_equal(read_tensor(buf), b)


def test_ppm_roundtrip_exact(rng, tmp_path):
    frame = u8_to_unit(rng.integers(0, 256, size=(3, 6, 8), dtype=np.uint8))
    p = tmp_path / "f.ppm"
    write_ppm(p, frame)
    back = read_ppm(p)
    np.testing.assert_array_equal(back, frame)


def test_ppm_header_bytes(tmp_path):
    p = tmp_path / "f.ppm"
    write_ppm(p, np.zeros((3, 2, 4), dtype=np.uint8))
    raw = p.read_bytes()
    assert raw.startswith(b"P6\n4 2\n255\n")
    assert len(raw) == len(b"P6\n4 2\n255\n") + 24


def test_pgm_roundtrip_binary(rng, tmp_path):
    mask = (rng.random((5, 7)) < 0.5).astype(np.float32)
    p = tmp_path / "m.pgm"
    write_pgm(p, mask)
    back = read_pgm(p)
    np.testing.assert_array_equal(back, mask)
    raw = p.read_bytes()
    assert raw.startswith(b"P5\n7 5\n255\n")
    assert set(raw[len(b"P5\n7 5\n255\n"):]) <= {0, 255}


def test_pgm_threshold():
    import tempfile, os
    soft = np.array([[0.2, 0.5], [0.7, 0.49]], dtype=np.float32)
    with tempfile.TemporaryDirectory() as d:
        p = os.path.join(d, "m.pgm")
        write_pgm(p, soft)
        back = read_pgm(p)
    np.testing.assert_array_equal(back, [[0, 1], [1, 0]])


def test_quantize_inverse_on_image(rng):
    u = rng.integers(0, 256, size=100, dtype=np.uint8)
    np.testing.assert_array_equal(quantize_u8(u8_to_unit(u)), u)
