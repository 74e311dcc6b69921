import gzip
import struct

import numpy as np
import pytest

from decfl.data import (
    load_dataset,
    load_idx_dir,
    make_corpus,
    read_idx_images,
    read_idx_labels,
    write_idx_images,
    write_idx_labels,
    write_synth_idx,
)


def test_idx_image_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    imgs = rng.integers(0, 256, size=(7, 28, 28), dtype=np.uint8)
    p = tmp_path / "imgs-idx3-ubyte"
    write_idx_images(p, imgs)
    back = read_idx_images(p)
    assert np.array_equal(back, imgs)
    # header is big-endian with the standard magic
    raw = p.read_bytes()
    magic, count, rows, cols = struct.unpack(">IIII", raw[:16])
    assert (magic, count, rows, cols) == (0x803, 7, 28, 28)


def test_idx_label_round_trip(tmp_path):
    labels = np.array([0, 1, 9, 3], dtype=np.uint8)
    p = tmp_path / "labels-idx1-ubyte"
    write_idx_labels(p, labels)
    assert np.array_equal(read_idx_labels(p), labels)
    magic, count = struct.unpack(">II", p.read_bytes()[:8])
    assert (magic, count) == (0x801, 4)


def test_idx_gzip_transparent(tmp_path):
    imgs = np.zeros((2, 4, 4), dtype=np.uint8)
    p = tmp_path / "x-idx3-ubyte.gz"
    write_idx_images(p, imgs)
    with gzip.open(p) as fh:
        assert struct.unpack(">I", fh.read(4))[0] == 0x803
    assert read_idx_images(p).shape == (2, 4, 4)


def test_bad_magic_rejected(tmp_path):
    p = tmp_path / "bad"
    p.write_bytes(struct.pack(">IIII", 0x9999, 1, 2, 2) + b"\x00" * 4)
    with pytest.raises(ValueError, match="magic"):
        read_idx_images(p)
    with pytest.raises(ValueError, match="magic"):
        read_idx_labels(p)


def test_truncated_rejected(tmp_path):
    p = tmp_path / "short"
    p.write_bytes(struct.pack(">IIII", 0x803, 2, 4, 4) + b"\x00" * 10)
    with pytest.raises(ValueError, match="truncated"):
        read_idx_images(p)


def test_load_dataset_scales_to_unit_interval(tmp_path):
    imgs = np.full((3, 4, 4), 255, dtype=np.uint8)
    labels = np.array([1, 2, 3], dtype=np.uint8)
    write_idx_images(tmp_path / "i", imgs)
    write_idx_labels(tmp_path / "l", labels)
    x, y = load_dataset(tmp_path / "i", tmp_path / "l")
    assert x.shape == (3, 16) and x.dtype == np.float32
    assert np.all(x == 1.0)
    assert y.dtype == np.int64


def test_synth_corpus_layout(tmp_path):
    write_synth_idx(tmp_path, n_train_per_class=5, n_test_per_class=2, seed=0)
    x_train, y_train, x_test, y_test = load_idx_dir(tmp_path)
    assert x_train.shape == (50, 784) and x_test.shape == (20, 784)
    assert set(np.bincount(y_train).tolist()) == {5}
    assert 0.0 <= x_train.min() and x_train.max() <= 1.0


def test_synth_corpus_deterministic_and_distinct():
    a_imgs, a_labels = make_corpus(3, seed=5)
    b_imgs, b_labels = make_corpus(3, seed=5)
    assert np.array_equal(a_imgs, b_imgs) and np.array_equal(a_labels, b_labels)
    c_imgs, _ = make_corpus(3, seed=6)
    assert not np.array_equal(a_imgs, c_imgs)
