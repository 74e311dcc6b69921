"""Edge-list text format: one 'u v' pair per line, '#' comments allowed."""

import numpy as np

from ..errors import DuplicateEdgeError, ParseError, SelfLoopError
from .core import Graph


def load_edge_list(path, n=None):
    """Load a graph from an edge-list file.

    Node count defaults to max id + 1; pass n to keep trailing isolated
    nodes. Raises ParseError/SelfLoopError/DuplicateEdgeError with the
    offending 1-based line number.
    """
    pairs = []
    seen = set()
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ParseError(f"expected two node ids, got {raw.strip()!r}", line_no)
            try:
                u, v = int(parts[0]), int(parts[1])
            except ValueError:
                raise ParseError(f"non-integer node id in {raw.strip()!r}", line_no) from None
            if u < 0 or v < 0:
                raise ParseError(f"negative node id in {raw.strip()!r}", line_no)
            if u == v:
                raise SelfLoopError(f"self-loop {u}-{v}", line_no)
            key = (min(u, v), max(u, v))
            if key in seen:
                raise DuplicateEdgeError(f"duplicate edge {u}-{v}", line_no)
            seen.add(key)
            pairs.append(key)
    count = (max((max(p) for p in pairs), default=-1) + 1) if n is None else n
    return Graph(n=count, edges=np.array(pairs, dtype=np.int64).reshape(-1, 2))


def save_edge_list(g, path):
    with open(path, "w", encoding="utf-8") as fh:
        for u, v in g.edges:
            fh.write(f"{u} {v}\n")
