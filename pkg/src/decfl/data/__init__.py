from .idx import (
    load_dataset,
    load_idx_dir,
    read_idx_images,
    read_idx_labels,
    write_idx_images,
    write_idx_labels,
)
from .synth import make_corpus, render_digit, write_synth_idx

__all__ = [
    "load_dataset", "load_idx_dir", "make_corpus", "read_idx_images",
    "read_idx_labels", "render_digit", "write_idx_images",
    "write_idx_labels", "write_synth_idx",
]
