"""IDX container reader (MNIST images and labels)."""
import gzip
import struct
from pathlib import Path

import numpy as np

IMAGE_MAGIC = 2051
LABEL_MAGIC = 2049


class IdxFormatError(ValueError):
    pass


def _read_bytes(path) -> bytes:
    raw = Path(path).read_bytes()
    if raw[:2] == b"\x1f\x8b":
        raw = gzip.decompress(raw)
    return raw


def _parse(raw: bytes, magic: int, ndim: int, path) -> np.ndarray:
    if len(raw) < 4 + 4 * ndim:
        raise IdxFormatError(f"{path}: truncated header")
    (found,) = struct.unpack_from(">i", raw, 0)
    if found != magic:
        raise IdxFormatError(f"{path}: bad magic {found}, expected {magic}")
    dims = struct.unpack_from(">" + "i" * ndim, raw, 4)
    offset = 4 + 4 * ndim
    expected = int(np.prod(dims))
    if len(raw) - offset != expected:
        raise IdxFormatError(
            f"{path}: payload has {len(raw) - offset} bytes, header declares {expected}"
        )
    return np.frombuffer(raw, dtype=np.uint8, offset=offset).reshape(dims)


def read_idx_images(path) -> np.ndarray:
    """Images as float64 in [0, 1], shape ``(count, rows, cols)``. Gzip is detected."""
    return _parse(_read_bytes(path), IMAGE_MAGIC, 3, path) / 255.0


def read_idx_labels(path) -> np.ndarray:
    return _parse(_read_bytes(path), LABEL_MAGIC, 1, path).astype(np.int64)


def write_idx(path, array, magic: int) -> None:
    array = np.asarray(array)
    with open(path, "wb") as f:
        f.write(struct.pack(">i", magic))
        for extent in array.shape:
            f.write(struct.pack(">i", extent))
        f.write(array.astype(np.uint8).tobytes())
