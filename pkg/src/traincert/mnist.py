"""Reader and writer for the IDX binary format used by the digit corpus.

Only the two layouts we need are supported: unsigned-byte image tensors
(magic 0x00000803) and unsigned-byte label vectors (magic 0x00000801).
All integers are big-endian.
"""

from __future__ import annotations

import struct

import numpy as np

from .tasks import Dataset, encode_label

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801


class IdxFormatError(ValueError):
    """Raised when an IDX file does not match the expected layout."""


def _read_u32(buf: bytes, offset: int, what: str) -> int:
    if len(buf) < offset + 4:
        raise IdxFormatError(
            f"truncated file: need 4 bytes for {what} at offset {offset}, "
            f"have {len(buf) - offset}"
        )
    return struct.unpack_from(">I", buf, offset)[0]


def load_idx_images(path) -> np.ndarray:
    """Read an IDX image file into a (count, rows, cols) uint8 array."""
    with open(path, "rb") as fh:
        buf = fh.read()
    magic = _read_u32(buf, 0, "magic")
    if magic != IMAGE_MAGIC:
        raise IdxFormatError(
            f"bad magic 0x{magic:08x} at offset 0, expected 0x{IMAGE_MAGIC:08x}"
        )
    count = _read_u32(buf, 4, "image count")
    rows = _read_u32(buf, 8, "row count")
    cols = _read_u32(buf, 12, "column count")
    expected = 16 + count * rows * cols
    if len(buf) != expected:
        raise IdxFormatError(
            f"payload length mismatch at offset 16: header implies {expected} "
            f"bytes total, file has {len(buf)}"
        )
    data = np.frombuffer(buf, dtype=np.uint8, offset=16)
    return data.reshape(count, rows, cols).copy()


def load_idx_labels(path) -> np.ndarray:
    """Read an IDX label file into a (count,) uint8 array."""
    with open(path, "rb") as fh:
        buf = fh.read()
    magic = _read_u32(buf, 0, "magic")
    if magic != LABEL_MAGIC:
        raise IdxFormatError(
            f"bad magic 0x{magic:08x} at offset 0, expected 0x{LABEL_MAGIC:08x}"
        )
    count = _read_u32(buf, 4, "label count")
    expected = 8 + count
    if len(buf) != expected:
        raise IdxFormatError(
            f"payload length mismatch at offset 8: header implies {expected} "
            f"bytes total, file has {len(buf)}"
        )
    return np.frombuffer(buf, dtype=np.uint8, offset=8).copy()


def write_idx_images(path, images: np.ndarray) -> None:
    """Write a (count, rows, cols) uint8 array in IDX image layout."""
    images = np.asarray(images, dtype=np.uint8)
    if images.ndim != 3:
        raise ValueError(f"expected a 3-D array, got shape {images.shape}")
    with open(path, "wb") as fh:
        fh.write(struct.pack(">IIII", IMAGE_MAGIC, *images.shape))
        fh.write(images.tobytes())


def write_idx_labels(path, labels: np.ndarray) -> None:
    """Write a (count,) uint8 array in IDX label layout."""
    labels = np.asarray(labels, dtype=np.uint8)
    if labels.ndim != 1:
        raise ValueError(f"expected a 1-D array, got shape {labels.shape}")
    with open(path, "wb") as fh:
        fh.write(struct.pack(">II", LABEL_MAGIC, labels.shape[0]))
        fh.write(labels.tobytes())


def load_digit_task(images_path, labels_path, limit: int | None = None) -> Dataset:
    """Assemble a training dataset from an IDX image/label pair.

    Images are flattened column-wise to pixels-in-[0,1] input columns;
    labels become diagonal-encoded target columns.
    """
    images = load_idx_images(images_path)
    labels = load_idx_labels(labels_path)
    if images.shape[0] != labels.shape[0]:
        raise IdxFormatError(
            f"{images.shape[0]} images but {labels.shape[0]} labels"
        )
    if limit is not None:
        images = images[:limit]
        labels = labels[:limit]
    count = images.shape[0]
    x = images.reshape(count, -1).T.astype(np.float64) / 255.0
    y = np.stack([encode_label(int(c)) for c in labels], axis=1)
    return Dataset(
        x=x,
        y=y,
        meta={
            "task": "digits",
            "count": count,
            "image_shape": list(images.shape[1:]),
            "labels": [int(c) for c in labels],
        },
    )
