"""Kernel dispatch: compiled extension when available, numpy fallback otherwise.

Set ``ZIGZAGFO_PURE=1`` to force the fallback.
"""
from __future__ import annotations

import os

from . import _pykernels as pure

compiled = None
if os.environ.get("ZIGZAGFO_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as compiled  # type: ignore[no-redef]
    except ImportError:
        compiled = None

_impl = compiled if compiled is not None else pure
BACKEND = "cython" if compiled is not None else "python"

validate_table = _impl.validate_table
square_table = _impl.square_table
zigzag_table = _impl.zigzag_table
adjacency_counts = _impl.adjacency_counts
exhaustive_cut = _impl.exhaustive_cut
triangle_free_mask = _impl.triangle_free_mask
masked_bfs = _impl.masked_bfs
ball_vertices = _impl.ball_vertices
layer_edge_counts = _impl.layer_edge_counts
