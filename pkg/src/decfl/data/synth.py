"""Deterministic synthetic digit corpus in the MNIST IDX layout.

Renders 28x28 grayscale digits from a 5x7 dot-matrix font with random
placement, rotation, blur, stroke intensity and pixel noise. Useful as a
hermetic stand-in when the real MNIST files are not on disk; written and
read through the same IDX pipeline.
"""

from pathlib import Path

import numpy as np
from scipy import ndimage

from .idx import write_idx_images, write_idx_labels

_FONT = {
    0: ["01110", "10001", "10011", "10101", "11001", "10001", "01110"],
    1: ["00100", "01100", "00100", "00100", "00100", "00100", "01110"],
    2: ["01110", "10001", "00001", "00110", "01000", "10000", "11111"],
    3: ["01110", "10001", "00001", "00110", "00001", "10001", "01110"],
    4: ["00010", "00110", "01010", "10010", "11111", "00010", "00010"],
    5: ["11111", "10000", "11110", "00001", "00001", "10001", "01110"],
    6: ["00110", "01000", "10000", "11110", "10001", "10001", "01110"],
    7: ["11111", "00001", "00010", "00100", "01000", "01000", "01000"],
    8: ["01110", "10001", "10001", "01110", "10001", "10001", "01110"],
    9: ["01110", "10001", "10001", "01111", "00001", "00010", "01100"],
}

_GLYPHS = {
    d: np.array([[int(c) for c in row] for row in rows], dtype=np.float64)
    for d, rows in _FONT.items()
}


def render_digit(digit, rng) -> np.ndarray:
    """One 28x28 uint8 image of `digit` with randomised nuisance factors."""
    scale = int(rng.integers(3, 5))
    glyph = np.kron(_GLYPHS[digit], np.ones((scale, scale)))
    glyph = ndimage.rotate(glyph, float(rng.uniform(-12.0, 12.0)),
                           reshape=True, order=1, mode="constant")
    glyph = glyph[:28, :28]
    gh, gw = glyph.shape
    canvas = np.zeros((28, 28))
    max_r, max_c = 28 - gh, 28 - gw
    r0 = int(rng.integers(0, max_r + 1)) if max_r > 0 else 0
    c0 = int(rng.integers(0, max_c + 1)) if max_c > 0 else 0
    canvas[r0:r0 + gh, c0:c0 + gw] = glyph
    canvas *= rng.uniform(0.85, 1.0)
    canvas = ndimage.gaussian_filter(canvas, sigma=float(rng.uniform(0.3, 0.6)))
    canvas += rng.normal(0.0, 0.02, size=canvas.shape)
    return (np.clip(canvas, 0.0, 1.0) * 255).astype(np.uint8)


def make_corpus(n_per_class, seed):
    """Balanced, shuffled (images, labels) arrays; 10 classes."""
    rng = np.random.default_rng(seed)
    images = np.empty((10 * n_per_class, 28, 28), dtype=np.uint8)
    labels = np.empty(10 * n_per_class, dtype=np.uint8)
    i = 0
    for digit in range(10):
        for _ in range(n_per_class):
            images[i] = render_digit(digit, rng)
            labels[i] = digit
            i += 1
    order = rng.permutation(len(labels))
    return images[order], labels[order]


def write_synth_idx(directory, n_train_per_class=205, n_test_per_class=52, seed=0):
    """Write a synthetic corpus in MNIST file layout; returns the dir."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    train_x, train_y = make_corpus(n_train_per_class, np.random.SeedSequence((seed, 0)))
    test_x, test_y = make_corpus(n_test_per_class, np.random.SeedSequence((seed, 1)))
    write_idx_images(directory / "train-images-idx3-ubyte", train_x)
    write_idx_labels(directory / "train-labels-idx1-ubyte", train_y)
    write_idx_images(directory / "t10k-images-idx3-ubyte", test_x)
    write_idx_labels(directory / "t10k-labels-idx1-ubyte", test_y)
    return directory
