"""Binary PGM (P5, 8-bit) reading and writing.

Only maxval 255 is supported. Header comments (# to end of line) are
accepted anywhere whitespace is. Parse failures raise PgmError naming the
byte offset of the offending data.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

_WS = b" \t\r\n"


class PgmError(ValueError):
    pass


def _skip_separators(buf: bytes, i: int) -> int:
    while i < len(buf):
        if buf[i] in _WS:
            i += 1
        elif buf[i] == ord("#"):
            while i < len(buf) and buf[i] not in b"\r\n":
                i += 1
        else:
            break
    return i


def _read_int(buf: bytes, i: int, what: str) -> tuple[int, int, int]:
    """Next header integer; returns (value, token start offset, next offset)."""
    i = _skip_separators(buf, i)
    if i >= len(buf):
        raise PgmError(f"missing {what}: unexpected end of file at byte offset {i}")
    j = i
    while j < len(buf) and buf[j] not in _WS and buf[j] != ord("#"):
        j += 1
    tok = buf[i:j]
    if not tok.isdigit():
        raise PgmError(f"invalid {what} at byte offset {i}: {tok[:16]!r}")
    return int(tok), i, j


def read_pgm(path) -> np.ndarray:
    """Read a binary PGM file into a float64 array of values in [0, 255]."""
    buf = Path(path).read_bytes()
    if buf[:2] != b"P5":
        raise PgmError("expected binary PGM magic 'P5' at byte offset 0")
    if len(buf) < 3 or (buf[2] not in _WS and buf[2] != ord("#")):
        raise PgmError("expected whitespace after magic at byte offset 2")
    width, off_w, i = _read_int(buf, 2, "width")
    height, off_h, i = _read_int(buf, i, "height")
    maxval, off_m, i = _read_int(buf, i, "maxval")
    if width < 1:
        raise PgmError(f"width must be positive at byte offset {off_w}")
    if height < 1:
        raise PgmError(f"height must be positive at byte offset {off_h}")
    if maxval != 255:
        raise PgmError(f"unsupported maxval {maxval} at byte offset {off_m}: need 255")
    if i >= len(buf) or buf[i] not in _WS:
        raise PgmError(f"expected single whitespace before raster at byte offset {i}")
    i += 1
    need = width * height
    if len(buf) - i < need:
        raise PgmError(
            f"raster truncated at byte offset {len(buf)}: "
            f"expected {need} bytes from offset {i}"
        )
    pixels = np.frombuffer(buf, dtype=np.uint8, count=need, offset=i)
    return pixels.reshape(height, width).astype(np.float64)


def write_pgm(path, img) -> None:
    """Write a 2-D array as binary PGM; values are rounded and clamped to [0, 255]."""
    arr = np.asarray(img, dtype=float)
    if arr.ndim != 2 or arr.size < 1:
        raise ValueError("image must be a nonempty 2-D array")
    if not np.all(np.isfinite(arr)):
        raise ValueError("image contains non-finite values")
    raster = np.rint(np.clip(arr, 0, 255)).astype(np.uint8)
    h, w = raster.shape
    header = f"P5\n{w} {h}\n255\n".encode("ascii")
    Path(path).write_bytes(header + raster.tobytes())
