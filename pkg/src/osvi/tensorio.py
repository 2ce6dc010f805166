"""OSVT tensor container: magic "OSVT", u8 version=1, u8 dtype code
(0=float32, 1=float64), u8 rank, little-endian u64 dims, row-major
little-endian payload. Used by checkpoints and frame dumps."""
import struct

import numpy as np

from .errors import DataError

MAGIC = b"OSVT"
VERSION = 1
_DTYPE_CODES = {np.dtype(np.float32): 0, np.dtype(np.float64): 1}
_CODE_DTYPES = {0: np.dtype("<f4"), 1: np.dtype("<f8")}


def write_tensor(fh, arr):
    """Write one array to a binary file object."""
    arr = np.ascontiguousarray(arr)
    code = _DTYPE_CODES.get(arr.dtype)
    if code is None:
        raise DataError(f"OSVT stores float32/float64 only, got {arr.dtype}")
    fh.write(MAGIC)
    fh.write(struct.pack("<BBB", VERSION, code, arr.ndim))
    for d in arr.shape:
        fh.write(struct.pack("<Q", d))
    fh.write(arr.astype(_CODE_DTYPES[code], copy=False).tobytes())


def read_tensor(fh):
    """Read one array from a binary file object."""
    magic = fh.read(4)
    if magic != MAGIC:
        raise DataError(f"bad OSVT magic {magic!r}")
    version, code, rank = struct.unpack("<BBB", fh.read(3))
    if version != VERSION:
        raise DataError(f"unsupported OSVT version {version}")
    if code not in _CODE_DTYPES:
        raise DataError(f"unknown OSVT dtype code {code}")
    dims = [struct.unpack("<Q", fh.read(8))[0] for _ in range(rank)]
    count = 1
    for d in dims:
        count *= d
    dt = _CODE_DTYPES[code]
    raw = fh.read(count * dt.itemsize)
    if len(raw) != count * dt.itemsize:
        raise DataError("truncated OSVT payload")
    arr = np.frombuffer(raw, dtype=dt).reshape(dims)
    return np.ascontiguousarray(arr.astype(dt.newbyteorder("=")))


def save_tensor(path, arr):
    with open(path, "wb") as fh:
        write_tensor(fh, arr)


def load_tensor(path):
    with open(path, "rb") as fh:
        return read_tensor(fh)
