"""IDX (MNIST-style) file reading and writing.

Big-endian headers: magic 0x00000803 for ubyte image tensors, 0x00000801
for ubyte label vectors. Files may be gzip-compressed (.gz suffix).
"""

import gzip
import struct
from pathlib import Path

import numpy as np

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801


def _open(path, mode):
    path = Path(path)
    if path.suffix == ".gz":
        return gzip.open(path, mode)
    return open(path, mode)


def read_idx_images(path) -> np.ndarray:
    with _open(path, "rb") as fh:
        magic, count, rows, cols = struct.unpack(">IIII", fh.read(16))
        if magic != IMAGE_MAGIC:
            raise ValueError(f"bad image magic 0x{magic:08x} in {path}")
        buf = fh.read(count * rows * cols)
    if len(buf) != count * rows * cols:
        raise ValueError(f"truncated image file {path}")
    return np.frombuffer(buf, dtype=np.uint8).reshape(count, rows, cols)


def read_idx_labels(path) -> np.ndarray:
    with _open(path, "rb") as fh:
        magic, count = struct.unpack(">II", fh.read(8))
        if magic != LABEL_MAGIC:
            raise ValueError(f"bad label magic 0x{magic:08x} in {path}")
        buf = fh.read(count)
    if len(buf) != count:
        raise ValueError(f"truncated label file {path}")
    return np.frombuffer(buf, dtype=np.uint8).copy()


def write_idx_images(path, images):
    images = np.asarray(images, dtype=np.uint8)
    if images.ndim != 3:
        raise ValueError(f"expected (n, rows, cols), got shape {images.shape}")
    with _open(path, "wb") as fh:
        fh.write(struct.pack(">IIII", IMAGE_MAGIC, *images.shape))
        fh.write(images.tobytes())


def write_idx_labels(path, labels):
    labels = np.asarray(labels, dtype=np.uint8)
    with _open(path, "wb") as fh:
        fh.write(struct.pack(">II", LABEL_MAGIC, len(labels)))
        fh.write(labels.tobytes())


def _resolve(directory, stem):
    for name in (stem, stem + ".gz"):
        p = Path(directory) / name
        if p.exists():
            return p
    raise FileNotFoundError(f"{stem}[.gz] not found in {directory}")


def load_dataset(images_path, labels_path):
    """Images flattened to float32 rows scaled to [0, 1], labels int64."""
    images = read_idx_images(images_path)
    labels = read_idx_labels(labels_path)
    if len(images) != len(labels):
        raise ValueError("image/label count mismatch")
    x = images.reshape(len(images), -1).astype(np.float32) / np.float32(255.0)
    return x, labels.astype(np.int64)


def load_idx_dir(directory):
    """Load an MNIST-layout directory (train-* and t10k-* IDX files)."""
    x_train, y_train = load_dataset(
        _resolve(directory, "train-images-idx3-ubyte"),
        _resolve(directory, "train-labels-idx1-ubyte"))
    x_test, y_test = load_dataset(
        _resolve(directory, "t10k-images-idx3-ubyte"),
        _resolve(directory, "t10k-labels-idx1-ubyte"))
    return x_train, y_train, x_test, y_test
