"""Dense tensors, log-space helpers and the on-disk ``MALN`` tensor format.

Tensors are plain row-major numpy arrays. The file layout is little-endian::

    b"MALN" | version (u8 = 1) | dtype (u8: 1 = f32, 2 = f64) | rank (u8)
    | rank x u64 dims | row-major payload

so the header is ``7 + 8 * rank`` bytes.
"""
from __future__ import annotations

import os
import struct
from typing import BinaryIO, Iterable, Union

import numpy as np

MAGIC = b"MALN"
VERSION = 1
DTYPE_F32 = 1
DTYPE_F64 = 2

_CODES = {DTYPE_F32: np.dtype("<f4"), DTYPE_F64: np.dtype("<f8")}

LOG_ZERO = -np.inf

PathLike = Union[str, os.PathLike]


class FormatError(ValueError):
    """Malformed tensor file. ``offset`` is the byte position of the problem."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


class ShapeError(ValueError):
    pass


def check_tensor(t: np.ndarray) -> None:
    """Raise ValueError unless every value is finite or the log-zero sentinel."""
    bad = np.isnan(t) | (t == np.inf)
    if bad.any():
        raise ValueError("tensor holds NaN or +inf values")


def as_tensor(values, dtype=np.float64) -> np.ndarray:
    t = np.ascontiguousarray(values, dtype=dtype)
    if any(n < 1 for n in t.shape):
        raise ShapeError(f"dims must be positive, got {t.shape}")
    check_tensor(t)
    return t


def logsumexp(values: Iterable[float]) -> float:
    """log(sum(exp(v))) with max-subtraction; all -inf inputs give exactly -inf."""
    v = np.asarray(list(values) if not isinstance(values, np.ndarray) else values,
                   dtype=np.float64).ravel()
    if v.size == 0:
        raise ValueError("empty reduction")
    if np.isnan(v).any():
        raise ValueError("NaN in logsumexp input")
    top = v.max()
    if top == -np.inf:
        return -np.inf
    if top == np.inf:
        return np.inf
    return float(top + np.log(np.sum(np.exp(v - top))))


def logaddexp(a: float, b: float) -> float:
    if a == -np.inf:
        return b
    if b == -np.inf:
        return a
    top = a if a > b else b
    return top + np.log1p(np.exp(-abs(a - b)))


def encode_tensor(t: np.ndarray) -> bytes:
    t = np.asarray(t)
    if t.dtype == np.float32:
        code = DTYPE_F32
    elif t.dtype == np.float64:
        code = DTYPE_F64
    else:
        raise ValueError(f"unsupported dtype {t.dtype}")
    if t.ndim > 255:
        raise ShapeError("rank must fit in one byte")
    check_tensor(t)
    header = MAGIC + struct.pack("<BBB", VERSION, code, t.ndim)
    header += struct.pack(f"<{t.ndim}Q", *t.shape)
    return header + np.ascontiguousarray(t, dtype=_CODES[code]).tobytes()


def decode_tensor(buf: bytes, widen: bool = True) -> np.ndarray:
    if len(buf) < 4:
        raise FormatError("truncated magic", len(buf))
    if buf[:4] != MAGIC:
        raise FormatError(f"bad magic {buf[:4]!r}", 0)
    if len(buf) < 7:
        raise FormatError("truncated header", len(buf))
    version, code, rank = struct.unpack_from("<BBB", buf, 4)
    if version != VERSION:
        raise FormatError(f"unsupported version {version}", 4)
    if code not in _CODES:
        raise FormatError(f"bad dtype tag {code}", 5)
    end = 7 + 8 * rank
    if len(buf) < end:
        raise FormatError("truncated dims", len(buf))
    dims = struct.unpack_from(f"<{rank}Q", buf, 7)
    if any(n == 0 for n in dims):
        raise FormatError("zero-sized dim", 7 + 8 * dims.index(0))
    dtype = _CODES[code]
    expected = int(np.prod(dims, dtype=np.int64)) * dtype.itemsize
    if len(buf) - end < expected:
        raise FormatError(f"truncated payload: expected {expected} bytes", len(buf))
    if len(buf) - end > expected:
        raise FormatError("trailing bytes after payload", end + expected)
    t = np.frombuffer(buf, dtype=dtype, count=expected // dtype.itemsize, offset=end)
    t = t.reshape(dims).astype(dtype.newbyteorder("="))
    bad = np.flatnonzero(np.isnan(t.ravel()) | (t.ravel() == np.inf))
    if bad.size:
        raise FormatError("NaN or +inf in payload", end + int(bad[0]) * dtype.itemsize)
    if widen:
        t = t.astype(np.float64)
    return t


def write_tensor(t: np.ndarray, destination: Union[PathLike, BinaryIO]) -> int:
    """Write ``t`` to a path or binary stream; returns the byte count."""
    data = encode_tensor(t)
    if isinstance(destination, (str, os.PathLike)):
        with open(destination, "wb") as fh:
            fh.write(data)
    else:
        destination.write(data)
    return len(data)


def read_tensor(source: Union[PathLike, BinaryIO, bytes], widen: bool = True) -> np.ndarray:
    """Read a tensor; f32 payloads are widened to f64 unless ``widen`` is False."""
    if isinstance(source, (bytes, bytearray)):
        buf = bytes(source)
    elif isinstance(source, (str, os.PathLike)):
        with open(source, "rb") as fh:
            buf = fh.read()
    else:
        buf = source.read()
    return decode_tensor(buf, widen=widen)
