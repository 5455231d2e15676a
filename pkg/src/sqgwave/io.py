"""Binary field files, CSV export and PGM heatmaps."""

from __future__ import annotations

import math
import re
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .grid import GridSpec

MAGIC = b"SQGF"
VERSION = 1
_HEADER = struct.Struct("<4sIIIdd")
MAX_CELLS = 1 << 28


class FieldFileError(ValueError):
    code = "FieldFileError"


class BadMagic(FieldFileError):
    code = "BadMagic"


class UnsupportedVersion(FieldFileError):
    code = "UnsupportedVersion"


class DimensionOverflow(FieldFileError):
    code = "DimensionOverflow"


class TruncatedPayload(FieldFileError):
    code = "TruncatedPayload"


@dataclass
class FieldFile:
    grid: GridSpec
    values: np.ndarray
    time: float | None = None


def export_field(values: np.ndarray, grid: GridSpec, path, time: float | None = None) -> None:
    """Write the binary field format: header, little-endian f8 payload (r-major), optional time tag."""
    values = np.asarray(values, dtype=float)
    if values.shape != grid.shape:
        raise ValueError(f"field shape {values.shape} does not match grid {grid.shape}")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, grid.nr, grid.nz, grid.Lr, grid.Lz))
        fh.write(np.ascontiguousarray(values, dtype="<f8").tobytes())
        if time is not None:
            fh.write(struct.pack("<d", time))


def import_field(path) -> FieldFile:
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise TruncatedPayload(f"{path}: file shorter than the header")
    magic, version, nr, nz, Lr, Lz = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise BadMagic(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise UnsupportedVersion(f"{path}: unsupported format version {version}")
    if nr == 0 or nz == 0 or nr * nz > MAX_CELLS:
        raise DimensionOverflow(f"{path}: dimensions {nr} x {nz} out of range")
    n = nr * nz * 8
    body = len(data) - _HEADER.size
    if body < n or body not in (n, n + 8):
        raise TruncatedPayload(f"{path}: payload of {body} bytes does not match {nr} x {nz} doubles")
    values = np.frombuffer(data, dtype="<f8", count=nr * nz, offset=_HEADER.size).reshape(nr, nz)
    time = struct.unpack_from("<d", data, _HEADER.size + n)[0] if body == n + 8 else None
    return FieldFile(GridSpec(int(nr), int(nz), float(Lr), float(Lz)), values.astype(float), time)


def export_csv(values: np.ndarray, path) -> None:
    """Rows are r nodes, columns z nodes; 17 significant digits."""
    np.savetxt(path, np.asarray(values), fmt="%.17g", delimiter=",")


def import_csv(path) -> np.ndarray:
    return np.loadtxt(path, delimiter=",", ndmin=2)


def heatmap_bytes(values: np.ndarray) -> np.ndarray:
    """Symmetric linear map [-max|v|, max|v|] -> [0, 255]; z increases upwards, r to the right."""
    v = np.asarray(values, dtype=float)
    m = float(np.max(np.abs(v))) if v.size else 0.0
    if m == 0 or not math.isfinite(m):
        img = np.full(v.shape, 128, dtype=np.uint8)
    else:
        img = np.clip(np.floor((v / m + 1.0) * 128.0), 0, 255).astype(np.uint8)
    return np.ascontiguousarray(img.T[::-1])


def render_heatmap(values: np.ndarray, path) -> None:
    """8-bit binary portable graymap (P5)."""
    img = heatmap_bytes(values)
    h, w = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(img.tobytes())


def read_pgm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    m = re.match(rb"P5\s+(\d+)\s+(\d+)\s+255\s", data)
    if m is None:
        raise ValueError(f"{path}: not an 8-bit binary PGM file")
    w, h = int(m.group(1)), int(m.group(2))
    return np.frombuffer(data, dtype=np.uint8, count=w * h, offset=m.end()).reshape(h, w)
