"""Bit-exact binary formats for volumes (LRV1) and masks (LRM1).

LRV1 layout, all integers little-endian:

    bytes 0..3    magic "LRV1"
    byte  4       version (1)
    byte  5       scalar code: 0 = complex float64, 1 = complex float32
    byte  6       axis count A
    bytes 7..7+A  axis label codes (t=0, f=1, rx=2, ry=3, sx=4, sy=5)
    next 8*A      u64 extents
    payload       interleaved (re, im) scalars, row-major in axis order

LRM1 is the same header without the scalar-code byte; its payload is one
byte per grid point (1 = observed, 0 = missing).
"""

from __future__ import annotations

import os

import numpy as np

from .sampling import SamplingMask
from .volume import AXIS_CODES, AXIS_LABELS, ComplexVolume

VOLUME_MAGIC = b"LRV1"
MASK_MAGIC = b"LRM1"
FORMAT_VERSION = 1

# Refuse absurd headers before allocating anything.
MAX_ELEMENTS = 1 << 40


class FileFormatError(ValueError):
    """Base class for malformed LRV1/LRM1 files."""


class BadMagicError(FileFormatError):
    pass


class VersionError(FileFormatError):
    pass


class TruncatedFileError(FileFormatError):
    pass


class DimsOverflowError(FileFormatError):
    pass


def _take(buf: bytes, pos: int, count: int, what: str) -> tuple[bytes, int]:
    if pos + count > len(buf):
        raise TruncatedFileError(f"file ends inside {what}")
    return buf[pos : pos + count], pos + count


def _read_header(buf: bytes, magic: bytes, with_scalar: bool):
    got, pos = _take(buf, 0, 4, "magic")
    if got != magic:
        raise BadMagicError(f"expected magic {magic!r}, found {got!r}")
    ver, pos = _take(buf, pos, 1, "version")
    if ver[0] != FORMAT_VERSION:
        raise VersionError(f"unsupported version {ver[0]}")
    scalar_code = 0
    if with_scalar:
        sc, pos = _take(buf, pos, 1, "scalar code")
        scalar_code = sc[0]
        if scalar_code not in (0, 1):
            raise FileFormatError(f"unknown scalar code {scalar_code}")
    ac, pos = _take(buf, pos, 1, "axis count")
    naxes = ac[0]
    if not 1 <= naxes <= len(AXIS_LABELS):
        raise FileFormatError(f"axis count {naxes} out of range")
    codes, pos = _take(buf, pos, naxes, "axis labels")
    axes = []
    for code in codes:
        if code >= len(AXIS_LABELS):
            raise FileFormatError(f"unknown axis code {code}")
        axes.append(AXIS_LABELS[code])
    raw, pos = _take(buf, pos, 8 * naxes, "extents")
    extents = tuple(int(e) for e in np.frombuffer(raw, dtype="<u8"))
    count = 1
    for e in extents:
        count *= e
        if count > MAX_ELEMENTS:
            raise DimsOverflowError(f"declared extents {extents} overflow")
    return tuple(axes), extents, count, scalar_code, pos


def _check_payload(buf: bytes, pos: int, nbytes: int, what: str):
    if len(buf) - pos < nbytes:
        raise TruncatedFileError(
            f"{what}: expected {nbytes} payload bytes, found {len(buf) - pos}"
        )
    if len(buf) - pos > nbytes:
        raise FileFormatError(f"{what}: {len(buf) - pos - nbytes} trailing bytes")


def write_volume(vol: ComplexVolume, path: str | os.PathLike, single_precision: bool = False):
    """Serialize a volume as LRV1."""
    scalar_code = 1 if single_precision else 0
    header = bytearray(VOLUME_MAGIC)
    header.append(FORMAT_VERSION)
    header.append(scalar_code)
    header.append(len(vol.axes))
    header.extend(AXIS_CODES[a] for a in vol.axes)
    header.extend(np.asarray(vol.dims, dtype="<u8").tobytes())
    payload = np.ascontiguousarray(vol.data, dtype="<c8" if single_precision else "<c16")
    with open(path, "wb") as fh:
        fh.write(bytes(header))
        fh.write(payload.tobytes())


def read_volume(path: str | os.PathLike) -> ComplexVolume:
    """Read an LRV1 file back into a volume."""
    with open(path, "rb") as fh:
        buf = fh.read()
    axes, extents, count, scalar_code, pos = _read_header(buf, VOLUME_MAGIC, with_scalar=True)
    itemsize = 16 if scalar_code == 0 else 8
    _check_payload(buf, pos, count * itemsize, "volume payload")
    dtype = "<c16" if scalar_code == 0 else "<c8"
    data = np.frombuffer(buf, dtype=dtype, count=count, offset=pos).reshape(extents)
    return ComplexVolume(axes, data)


def write_mask(mask: SamplingMask, path: str | os.PathLike):
    """Serialize a mask as LRM1 (metadata is not stored)."""
    header = bytearray(MASK_MAGIC)
    header.append(FORMAT_VERSION)
    header.append(mask.grid.ndim)
    header.extend(AXIS_CODES[a] for a in mask.axes)
    header.extend(np.asarray(mask.grid.shape, dtype="<u8").tobytes())
    with open(path, "wb") as fh:
        fh.write(bytes(header))
        fh.write(mask.grid.astype(np.uint8).tobytes())


def read_mask(path: str | os.PathLike) -> SamplingMask:
    with open(path, "rb") as fh:
        buf = fh.read()
    axes, extents, count, _, pos = _read_header(buf, MASK_MAGIC, with_scalar=False)
    _check_payload(buf, pos, count, "mask payload")
    raw = np.frombuffer(buf, dtype=np.uint8, count=count, offset=pos)
    bad = np.setdiff1d(raw, [0, 1])
    if bad.size:
        raise FileFormatError(f"mask bytes must be 0 or 1, found {bad[:4]}")
    grid = raw.astype(bool).reshape(extents)
    kept = float(grid.mean())
    return SamplingMask(grid, axes=axes, scheme="unknown", keep_fraction=kept)
