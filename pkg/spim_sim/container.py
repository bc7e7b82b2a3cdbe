"""Flat binary container for frames and images, plus portable-graymap text export.

Container layout (little-endian):

    offset  size  field
    0       4     magic b"SPIM"
    4       4     width   (uint32)
    8       4     height  (uint32)
    12      1     dtype code (see DTYPE_CODES)
    13      3     reserved, zero
    16      ...   height x width samples, row-major
"""

import struct
from pathlib import Path
from typing import Union

import numpy as np

from spim_sim.errors import DimensionError, InvalidArgument
from spim_sim.optics import FieldImage, IntensityImage, SlmFrame, TargetIntensity

MAGIC = b"SPIM"
HEADER = struct.Struct("<4sIIB3x")

DTYPE_CODES = {
    1: np.dtype("<f8"),
    2: np.dtype("<c16"),
    3: np.dtype("<u2"),
    4: np.dtype("<i2"),
    5: np.dtype("u1"),
}
_CODE_FOR = {dt: code for code, dt in DTYPE_CODES.items()}

Storable = Union[np.ndarray, SlmFrame, FieldImage, IntensityImage, TargetIntensity]


def _as_array(obj: Storable) -> np.ndarray:
    if isinstance(obj, SlmFrame):
        return obj.levels if obj.levels is not None else obj.phase
    return np.asarray(getattr(obj, "data", obj))


def _storage_dtype(arr: np.ndarray) -> np.dtype:
    if np.iscomplexobj(arr):
        return DTYPE_CODES[2]
    if arr.dtype.kind == "f":
        return DTYPE_CODES[1]
    if arr.dtype.kind == "b":
        return DTYPE_CODES[5]
    if arr.dtype.kind not in "ui":
        raise InvalidArgument(f"cannot store dtype {arr.dtype}")
    lo, hi = (int(arr.min()), int(arr.max())) if arr.size else (0, 0)
    if lo >= 0 and hi <= 255:
        return DTYPE_CODES[5]
    if lo >= 0 and hi <= 65535:
        return DTYPE_CODES[3]
    if lo >= -32768 and hi <= 32767:
        return DTYPE_CODES[4]
    return DTYPE_CODES[1]


def to_bytes(obj: Storable) -> bytes:
    arr = _as_array(obj)
    if arr.ndim != 2:
        raise DimensionError(f"container holds 2-D arrays, got shape {arr.shape}")
    dtype = _storage_dtype(arr)
    height, width = arr.shape
    return HEADER.pack(MAGIC, width, height, _CODE_FOR[dtype]) + np.ascontiguousarray(arr, dtype=dtype).tobytes()


def from_bytes(blob: bytes) -> np.ndarray:
    if len(blob) < HEADER.size:
        raise InvalidArgument("truncated container header")
    magic, width, height, code = HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise InvalidArgument(f"bad magic {magic!r}")
    if code not in DTYPE_CODES:
        raise InvalidArgument(f"unknown dtype code {code}")
    dtype = DTYPE_CODES[code]
    expected = width * height * dtype.itemsize
    payload = blob[HEADER.size :]
    if len(payload) != expected:
        raise InvalidArgument(f"payload has {len(payload)} bytes, header implies {expected}")
    return np.frombuffer(payload, dtype=dtype).reshape(height, width).copy()


def write_container(path: Path, obj: Storable) -> None:
    Path(path).write_bytes(to_bytes(obj))


def read_container(path: Path) -> np.ndarray:
    return from_bytes(Path(path).read_bytes())


def write_pgm(path: Path, obj: Storable, maxval: int = 255) -> None:
    """ASCII (P2) graymap, linearly scaled so the image maximum maps to maxval."""
    arr = _as_array(obj)
    if np.iscomplexobj(arr):
        arr = np.abs(arr)
    arr = np.asarray(arr, dtype=np.float64)
    top = float(arr.max()) if arr.size else 0.0
    scaled = np.zeros(arr.shape, dtype=np.int64) if top <= 0 else np.rint(np.clip(arr, 0, None) / top * maxval).astype(np.int64)
    height, width = scaled.shape
    lines = ["P2", f"{width} {height}", str(maxval)]
    lines.extend(" ".join(str(v) for v in row) for row in scaled)
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")
