"""Kernel backend selection.

The compiled Cython extension is preferred; the pure numpy fallback is
used when the extension is missing or DECFL_PURE=1 is set. `BACKEND`
reports which one is active.
"""

import os

if os.environ.get("DECFL_PURE"):
    from . import _pure as _impl
else:
    try:
        from . import _core as _impl
    except ImportError:
        from . import _pure as _impl

BACKEND = _impl.BACKEND

csc_matvec = _impl.csc_matvec
csc_matmat_dense = _impl.csc_matmat_dense
bfs_reach_count = _impl.bfs_reach_count
swap_mix = _impl.swap_mix
anneal_chunk = _impl.anneal_chunk
