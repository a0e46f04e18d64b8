"""Binary quarter-grid checkpoints and atomic file writes.

Layout, all little-endian::

    8 bytes  magic b"CAPSSC01"
    u32      format version
    u32      nodes per side (n + 1)
    f64      time
    f64      grid spacing
    f64      values, row-major, (n + 1)^2 of them
    u32      CRC32 of everything above

Parity is not stored; the reader is told what kind of field it loads.
"""

from __future__ import annotations

import os
import struct
import tempfile
import zlib
from pathlib import Path

import numpy as np

from .fields import ODD, QuarterField, VorticityField

MAGIC = b"CAPSSC01"
VERSION = 1
_HEADER = struct.Struct("<8sIIdd")


class CheckpointFormatError(ValueError):
    pass


def atomic_write(path, data: bytes | str) -> None:
    """Write to a temporary file in the same directory, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(data, str):
        data = data.encode()
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def encode(field: QuarterField, time: float | None = None) -> bytes:
    values = np.ascontiguousarray(field.values, dtype="<f8")
    t = getattr(field, "time", 0.0) if time is None else time
    head = _HEADER.pack(MAGIC, VERSION, values.shape[0], float(t), field.spacing)
    body = head + values.tobytes(order="C")
    return body + struct.pack("<I", zlib.crc32(body))


def decode(blob: bytes, parity=(ODD, ODD)) -> QuarterField:
    if len(blob) < _HEADER.size + 4:
        raise CheckpointFormatError("file shorter than header and trailer")
    magic, version, side, t, spacing = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise CheckpointFormatError(f"bad magic {magic!r}")
    if version != VERSION:
        raise CheckpointFormatError(f"checkpoint version {version} is not readable by version {VERSION}")
    expected = _HEADER.size + 8 * side * side + 4
    if len(blob) != expected:
        raise CheckpointFormatError(f"expected {expected} bytes for side {side}, found {len(blob)}")
    (crc,) = struct.unpack_from("<I", blob, expected - 4)
    if zlib.crc32(blob[:expected - 4]) != crc:
        raise CheckpointFormatError("CRC mismatch")
    values = np.frombuffer(blob, dtype="<f8", count=side * side, offset=_HEADER.size).reshape(side, side)
    extent = round(spacing * (side - 1), 12)
    if tuple(parity) == (ODD, ODD) and not values[0].any() and not values[:, 0].any():
        return VorticityField(values.astype(float), extent=extent, time=t)
    return QuarterField(values.astype(float), extent=extent, parity=tuple(parity))


def checkpoint_write(field: QuarterField, path, time: float | None = None) -> None:
    atomic_write(path, encode(field, time))


def checkpoint_read(path, parity=(ODD, ODD)) -> QuarterField:
    return decode(Path(path).read_bytes(), parity)


def checkpoint_time(path) -> float:
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
    if len(head) < _HEADER.size or head[:8] != MAGIC:
        raise CheckpointFormatError(f"{path} is not a checkpoint")
    return _HEADER.unpack(head)[3]
