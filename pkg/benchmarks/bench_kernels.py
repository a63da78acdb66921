"""Time the compiled kernels against the pure-Python fallback.

    python benchmarks/bench_kernels.py [--repeat 3] [--json out.json]
"""
from __future__ import annotations

import argparse
import json
import time

import numpy as np

from zigzagfo import _pykernels as pure
from zigzagfo import gadgets as gd
from zigzagfo import rotgraph as rg
from zigzagfo import structures as ss

try:
    from zigzagfo import _ckernels as compiled
except ImportError:
    compiled = None


def workloads(seed: int = 0):
    rng = np.random.default_rng(seed)
    g = rg.random_rotation(4096, 8, rng)
    h, _ = rg.random_regular_base(2, seed)
    g2 = rg.build_family(h, 2)[-1]
    small = rg.random_rotation(20, 4, rng)
    A = np.ascontiguousarray(small.adjacency())
    enc = gd.encode(ss.build_model(h, 1))
    eg = enc.graph
    allowed = np.ones(eg.n, dtype=np.uint8)
    starts = np.arange(enc.n_original, dtype=np.int64)
    mark = np.full(eg.n, -1, dtype=np.int64)
    return {
        "validate_table": lambda k: k.validate_table(g.table, g.n, g.degree),
        "square_table": lambda k: k.square_table(g.table, g.n, g.degree),
        "zigzag_table": lambda k: k.zigzag_table(k.square_table(g2.table, g2.n, g2.degree), g2.n, g2.degree ** 2,
                                                  h.table, h.degree),
        "adjacency_counts": lambda k: k.adjacency_counts(g.table, g.n, g.degree),
        "exhaustive_cut": lambda k: k.exhaustive_cut(A),
        "triangle_free_mask": lambda k: k.triangle_free_mask(eg.indptr, eg.indices),
        "masked_bfs": lambda k: k.masked_bfs(eg.indptr, eg.indices, allowed, starts),
        "ball_vertices": lambda k: [k.ball_vertices(eg.indptr, eg.indices, v, 3, mark) for v in range(0, eg.n, 997)],
    }


def best_of(fn, repeat: int) -> float:
    out = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        out = min(out, time.perf_counter() - t0)
    return out


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--json", default=None)
    args = ap.parse_args()
    rows = []
    for name, fn in workloads().items():
        tp = best_of(lambda: fn(pure), args.repeat)
        tc = best_of(lambda: fn(compiled), args.repeat) if compiled else None
        rows.append({"kernel": name, "python_s": tp, "cython_s": tc, "speedup": tp / tc if tc else None})
        sp = f"{tp / tc:8.1f}x" if tc else "      n/a"
        print(f"{name:20s} python {tp:9.4f}s  cython {tc if tc else float('nan'):9.4f}s  {sp}")
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump(rows, fh, indent=2)


if __name__ == "__main__":
    main()
