"""Regenerate the frozen test corpus (deterministic)."""
from pathlib import Path

import numpy as np

from zigzagfo import rotgraph as rg
from zigzagfo import simplegraph as sg

HERE = Path(__file__).parent


def rotgraphs():
    out = HERE / "rotgraphs"
    out.mkdir(exist_ok=True)
    for n in range(3, 17):
        rg.save(rg.cycle(n), out / f"cycle{n:02d}.rot")
    for n in range(2, 9):
        rg.save(rg.complete(n), out / f"complete{n:02d}.rot")
    rng = np.random.default_rng(20240501)
    for i in range(24):
        n = int(rng.integers(2, 17))
        D = int(rng.integers(2, 5))
        rg.save(rg.random_rotation(n, D, rng), out / f"random{i:02d}_n{n}_d{D}.rot")


def cubic2000():
    # pairing model, rejecting loops and multi-edges by re-pairing
    rng = np.random.default_rng(7)
    n, d = 2000, 3
    while True:
        pts = rng.permutation(n * d) // d
        a, b = pts[0::2], pts[1::2]
        e = {tuple(sorted(p)) for p in zip(a.tolist(), b.tolist()) if p[0] != p[1]}
        if len(e) == n * d // 2:
            break
    sg.save(sg.SimpleGraph.from_edges(n, sorted(e)), HERE / "cubic2000.graph")


def mixed2000():
    # max degree 3 with every degree 0..3 present and planted triangles,
    # so the 1-type distribution has several non-trivial entries
    rng = np.random.default_rng(11)
    n, d = 2000, 3
    deg = np.zeros(n, dtype=int)
    e = set()
    for t in range(150):
        a, b, c = 3 * t, 3 * t + 1, 3 * t + 2
        e |= {(a, b), (a, c), (b, c)}
        deg[[a, b, c]] += 2
    for _ in range(1700):
        u, v = sorted(rng.choice(n, size=2, replace=False).tolist())
        if (u, v) not in e and deg[u] < d and deg[v] < d:
            e.add((u, v))
            deg[u] += 1
            deg[v] += 1
    sg.save(sg.SimpleGraph.from_edges(n, sorted(e)), HERE / "mixed2000.graph")


if __name__ == "__main__":
    rotgraphs()
    cubic2000()
    mixed2000()
