"""Binary PGM (P5, maxval 255) image I/O.

Pixels map to [0, 1] as v/255 on read. On write, values are clamped to [0, 1]
and quantized round-half-up to 8 bits, so golden files are portable across
platforms.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .containers import Image

# Guard against absurd header dimensions before allocating.
MAX_DIM = 1 << 20


class PgmFormatError(ValueError):
    """Malformed PGM input; `offset` is the byte position of the problem."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


def quantize_u8(values: np.ndarray) -> np.ndarray:
    """Clamp to [0, 1] and quantize to 8 bits with round-half-up."""
    clamped = np.clip(values, 0.0, 1.0)
    return np.floor(clamped * 255.0 + 0.5).astype(np.uint8)


def _read_token(buf: bytes, pos: int) -> tuple[bytes, int]:
    """Next whitespace-delimited header token, skipping '#' comments."""
    n = len(buf)
    while pos < n:
        c = buf[pos : pos + 1]
        if c == b"#":
            while pos < n and buf[pos : pos + 1] != b"\n":
                pos += 1
        elif c.isspace():
            pos += 1
        else:
            break
    if pos >= n:
        raise PgmFormatError("unexpected end of header", pos)
    start = pos
    while pos < n and not buf[pos : pos + 1].isspace() and buf[pos : pos + 1] != b"#":
        pos += 1
    return buf[start:pos], pos


def _parse_dim(token: bytes, what: str, offset: int) -> int:
    if not token.isdigit():
        raise PgmFormatError(f"malformed {what} {token!r}", offset)
    value = int(token)
    if value <= 0 or value > MAX_DIM:
        raise PgmFormatError(f"{what} {value} out of range 1..{MAX_DIM}", offset)
    return value


def read_image(path) -> Image:
    """Read a binary P5 PGM (maxval 255) into an Image with values in [0, 1]."""
    buf = Path(path).read_bytes()
    if buf[:2] != b"P5":
        raise PgmFormatError(f"bad magic {buf[:2]!r}, expected P5", 0)
    pos = 2
    tok, end = _read_token(buf, pos)
    width = _parse_dim(tok, "width", end - len(tok))
    tok, end = _read_token(buf, end)
    height = _parse_dim(tok, "height", end - len(tok))
    tok, end = _read_token(buf, end)
    if tok != b"255":
        raise PgmFormatError(f"unsupported maxval {tok!r}, only 255", end - len(tok))
    if end >= len(buf):
        raise PgmFormatError("missing payload", end)
    # Exactly one whitespace byte separates the header from the raster.
    if not buf[end : end + 1].isspace():
        raise PgmFormatError("missing whitespace after maxval", end)
    start = end + 1
    expected = height * width
    payload = buf[start : start + expected]
    if len(payload) < expected:
        raise PgmFormatError(
            f"truncated payload: expected {expected} bytes, got {len(payload)}",
            start + len(payload),
        )
    pixels = np.frombuffer(payload, dtype=np.uint8).reshape(height, width)
    return Image(pixels.astype(np.float64) / 255.0)


def write_image(img: Image, path) -> None:
    """Write an Image as binary P5 PGM, clamping and quantizing to 8 bits."""
    pixels = quantize_u8(img.data)
    header = f"P5\n{img.width} {img.height}\n255\n".encode("ascii")
    Path(path).write_bytes(header + pixels.tobytes())
