"""On-disk formats: LTNS tensors, binary PGM images and JSON documents.

LTNS layout (all little-endian, no padding)::

    b"LTNS" | u32 version=1 | u32 ndim | ndim x u32 dims | float32 data
"""

from __future__ import annotations

import json
import re
import struct
from pathlib import Path

import numpy as np

from .core import as_tensor
from .errors import FormatError, ValidationError

LTNS_MAGIC = b"LTNS"
LTNS_VERSION = 1
_PGM_HEADER = re.compile(rb"P5\s+(\d+)\s+(\d+)\s+255\s")


def ltns_bytes(tensor) -> bytes:
    arr = as_tensor(tensor)
    header = LTNS_MAGIC + struct.pack(f"<II{arr.ndim}I", LTNS_VERSION, arr.ndim, *arr.shape)
    return header + arr.astype("<f4").tobytes(order="C")


def parse_ltns(buf: bytes) -> np.ndarray:
    if len(buf) < 12 or buf[:4] != LTNS_MAGIC:
        raise FormatError("not an LTNS file (bad magic)")
    version, ndim = struct.unpack_from("<II", buf, 4)
    if version != LTNS_VERSION:
        raise FormatError(f"unsupported LTNS version {version}")
    if ndim < 1:
        raise FormatError("LTNS tensor must have at least one dim")
    offset = 12 + 4 * ndim
    if len(buf) < offset:
        raise FormatError("truncated LTNS header")
    dims = struct.unpack_from(f"<{ndim}I", buf, 12)
    if any(d == 0 for d in dims):
        raise FormatError(f"LTNS dims must be positive, got {dims}")
    count = int(np.prod(dims, dtype=np.int64))
    if len(buf) - offset != 4 * count:
        raise FormatError(
            f"LTNS payload is {len(buf) - offset} bytes, expected {4 * count}"
        )
    data = np.frombuffer(buf, dtype="<f4", count=count, offset=offset)
    arr = data.astype(np.float32).reshape(dims)
    if not np.all(np.isfinite(arr)):
        raise FormatError("LTNS payload contains non-finite values")
    return arr


def write_ltns(path, tensor) -> None:
    Path(path).write_bytes(ltns_bytes(tensor))


def read_ltns(path) -> np.ndarray:
    return parse_ltns(Path(path).read_bytes())


def pgm_bytes(image) -> bytes:
    """Binary (P5) PGM for an 8-bit image of shape [rows, cols]."""
    img = np.asarray(image)
    if img.ndim != 2 or img.dtype != np.uint8:
        raise ValidationError("PGM image must be a 2-D uint8 array")
    rows, cols = img.shape
    return f"P5\n{cols} {rows}\n255\n".encode("ascii") + img.tobytes(order="C")


def write_pgm(path, image) -> None:
    Path(path).write_bytes(pgm_bytes(image))


def read_pgm(path) -> np.ndarray:
    buf = Path(path).read_bytes()
    m = _PGM_HEADER.match(buf)
    if m is None:
        raise FormatError("not an 8-bit binary PGM")
    cols, rows = int(m.group(1)), int(m.group(2))
    pixels = np.frombuffer(buf, dtype=np.uint8, offset=m.end())
    if pixels.size != rows * cols:
        raise FormatError("PGM payload size mismatch")
    return pixels.reshape(rows, cols)


def dump_json(path, obj) -> None:
    # sorted keys + trailing newline keep reruns byte-identical
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def load_json(path):
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc})") from exc
