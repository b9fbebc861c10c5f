"""Minimal binary PGM (P5, maxval 255) reader and writer.

The header is written in one fixed shape, "P5\\n<width> <height>\\n255\\n",
and the reader accepts exactly that shape. Pixels map to floats in [0, 1].
"""

from __future__ import annotations

import re

import numpy as np

from .linalg import Matrix, as_matrix

_HEADER_RE = re.compile(rb"\AP5\n(\d+) (\d+)\n255\n")


class PgmFormatError(ValueError):
    """Raised when a file is not in the exact P5 shape we produce."""


def read_pgm(path) -> Matrix:
    """Read a P5 image into a (height, width) float array in [0, 1]."""
    with open(path, "rb") as fh:
        buf = fh.read()
    m = _HEADER_RE.match(buf)
    if m is None:
        raise PgmFormatError(
            f"header does not match 'P5\\n<w> <h>\\n255\\n' (starts with {buf[:16]!r})"
        )
    width = int(m.group(1))
    height = int(m.group(2))
    pixels = buf[m.end():]
    if len(pixels) != width * height:
        raise PgmFormatError(
            f"expected {width * height} pixel bytes for {width}x{height}, "
            f"got {len(pixels)}"
        )
    data = np.frombuffer(pixels, dtype=np.uint8).reshape(height, width)
    return data.astype(np.float64) / 255.0


def write_pgm(path, image: Matrix) -> None:
    """Write a float image, clamping to [0, 1] and rounding to 8 bits."""
    image = as_matrix(image, "image")
    quantized = np.rint(np.clip(image, 0.0, 1.0) * 255.0).astype(np.uint8)
    height, width = quantized.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{width} {height}\n255\n".encode("ascii"))
        fh.write(quantized.tobytes())
