"""Binary PPM (P6) frames and PGM (P5) masks, 8-bit.

Quantization is centralized here: frames are quantized to 8 bits before
both writing and in-memory use, so files round-trip bit-exactly.
"""
import numpy as np

from .errors import DataError


def quantize_u8(x):
    """[0,1] float -> uint8 with round-half-even, the single quantizer."""
    return np.rint(np.clip(x, 0.0, 1.0) * 255.0).astype(np.uint8)


def u8_to_unit(u):
    """uint8 -> float32 in [0,1]; inverse of quantize_u8 on its image."""
    return u.astype(np.float32) / np.float32(255.0)


def write_ppm(path, frame):
    """frame: (3,H,W) float in [0,1] or uint8."""
    if frame.ndim != 3 or frame.shape[0] != 3:
        raise DataError(f"PPM frames are (3,H,W), got {frame.shape}")
    u = frame if frame.dtype == np.uint8 else quantize_u8(frame)
    _, h, w = u.shape
    with open(path, "wb") as fh:
        fh.write(b"P6\n%d %d\n255\n" % (w, h))
        fh.write(np.ascontiguousarray(u.transpose(1, 2, 0)).tobytes())


def write_pgm(path, mask, threshold=0.5):
    """mask: (H,W); values >= threshold are written as 255 (object)."""
    if mask.ndim != 2:
        raise DataError(f"PGM masks are (H,W), got {mask.shape}")
    if mask.dtype == np.uint8:
        u = mask
    else:
        u = np.where(mask >= threshold, 255, 0).astype(np.uint8)
    h, w = u.shape
    with open(path, "wb") as fh:
        fh.write(b"P5\n%d %d\n255\n" % (w, h))
        fh.write(np.ascontiguousarray(u).tobytes())


def _read_header(fh, magic):
    if fh.read(2) != magic:
        raise DataError(f"expected {magic.decode()} file")
    fields = []
    while len(fields) < 3:
        tok = b""
        ch = fh.read(1)
        while ch.isspace():
            ch = fh.read(1)
        if ch == b"#":
            while ch not in (b"\n", b""):
                ch = fh.read(1)
            continue
        while ch and not ch.isspace():
            tok += ch
            ch = fh.read(1)
        if not tok:
            raise DataError("truncated netpbm header")
        fields.append(int(tok))
    w, h, maxval = fields
    if maxval != 255:
        raise DataError(f"only 8-bit netpbm supported, maxval={maxval}")
    return w, h


def read_ppm(path):
    """-> (3,H,W) float32 in [0,1]."""
    with open(path, "rb") as fh:
        w, h = _read_header(fh, b"P6")
        raw = fh.read(3 * w * h)
    if len(raw) != 3 * w * h:
        raise DataError(f"truncated PPM payload in {path}")
    u = np.frombuffer(raw, dtype=np.uint8).reshape(h, w, 3).transpose(2, 0, 1)
    return u8_to_unit(u)


def read_pgm(path):
    """-> (H,W) float32 binary mask {0,1}."""
    with open(path, "rb") as fh:
        w, h = _read_header(fh, b"P5")
        raw = fh.read(w * h)
    if len(raw) != w * h:
        raise DataError(f"truncated PGM payload in {path}")
    u = np.frombuffer(raw, dtype=np.uint8).reshape(h, w)
    return (u >= 128).astype(np.float32)
