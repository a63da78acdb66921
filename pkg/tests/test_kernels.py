import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from zigzagfo import _pykernels as pure
from zigzagfo import kernels
from zigzagfo import rotgraph as rg
from zigzagfo.simplegraph import SimpleGraph

compiled = pytest.importorskip("zigzagfo._ckernels")

seeds = st.integers(0, 2 ** 32 - 1)


def random_simple(rng, n, p):
    e = [(u, v) for u in range(n) for v in range(u + 1, n) if rng.random() < p]
    return SimpleGraph.from_edges(n, e)


def same(a, b):
    if isinstance(a, tuple):
        assert len(a) == len(b)
        for x, y in zip(a, b):
            same(x, y)
    else:
        np.testing.assert_array_equal(np.asarray(a), np.asarray(b))


def test_backend_selected():
    assert kernels.BACKEND == "cython"


def test_pure_env_forces_fallback():
    env = dict(os.environ, ZIGZAGFO_PURE="1")
    out = subprocess.run([sys.executable, "-c", "from zigzagfo import kernels; print(kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


@settings(max_examples=30, deadline=None)
@given(seeds, st.integers(1, 30), st.integers(1, 5))
def test_rotation_kernels_agree(seed, n, D):
    rng = np.random.default_rng(seed)
    if n * D % 2:
        n += 1
    g = rg.random_rotation(n, D, rng)
    t = g.table
    same(pure.validate_table(t, n, D), compiled.validate_table(t, n, D))
    broken = t.copy()
    broken[int(rng.integers(n * D))] = int(rng.integers(n * D))
    same(pure.validate_table(broken, n, D), compiled.validate_table(broken, n, D))
    same(pure.square_table(t, n, D), compiled.square_table(t, n, D))
    same(pure.adjacency_counts(t, n, D), compiled.adjacency_counts(t, n, D))


@settings(max_examples=20, deadline=None)
@given(seeds, st.integers(2, 12), st.integers(2, 4), st.integers(1, 3))
def test_zigzag_kernel_agrees(seed, n1, D1, D2):
    rng = np.random.default_rng(seed)
    if n1 * D1 % 2:
        n1 += 1
    if D1 * D2 % 2:
        D2 += 1
    g1 = rg.random_rotation(n1, D1, rng)
    g2 = rg.random_rotation(D1, D2, rng)
    same(pure.zigzag_table(g1.table, n1, D1, g2.table, D2),
         compiled.zigzag_table(g1.table, n1, D1, g2.table, D2))


@settings(max_examples=20, deadline=None)
@given(seeds, st.integers(2, 12))
def test_exhaustive_cut_agrees(seed, n):
    rng = np.random.default_rng(seed)
    D = 4
    g = rg.random_rotation(n, D, rng)
    A = np.ascontiguousarray(g.adjacency())
    same(pure.exhaustive_cut(A), compiled.exhaustive_cut(A))


@settings(max_examples=30, deadline=None)
@given(seeds, st.integers(1, 40), st.floats(0.02, 0.5))
def test_graph_kernels_agree(seed, n, p):
    rng = np.random.default_rng(seed)
    g = random_simple(rng, n, p)
    same(pure.triangle_free_mask(g.indptr, g.indices), compiled.triangle_free_mask(g.indptr, g.indices))
    allowed = (rng.random(n) < 0.8).astype(np.uint8)
    starts = rng.choice(n, size=min(n, 3), replace=False).astype(np.int64)
    same(pure.masked_bfs(g.indptr, g.indices, allowed, starts),
         compiled.masked_bfs(g.indptr, g.indices, allowed, starts))
    mark_a = np.full(n, -1, dtype=np.int64)
    mark_b = mark_a.copy()
    for v in range(0, n, 3):
        r = int(rng.integers(0, 4))
        a = pure.ball_vertices(g.indptr, g.indices, v, r, mark_a)
        b = compiled.ball_vertices(g.indptr, g.indices, v, r, mark_b)
        assert list(a[0]) == list(b[0]) and list(a[1]) == list(b[1])
        assert (mark_a == -1).all() and (mark_b == -1).all()


@settings(max_examples=20, deadline=None)
@given(seeds, st.integers(2, 40))
def test_layer_counts_agree(seed, n):
    rng = np.random.default_rng(seed)
    g = random_simple(rng, n, 0.15)
    comp = rng.integers(-1, 3, size=n).astype(np.int64)
    dist = rng.integers(0, 5, size=n).astype(np.int64)
    same(pure.layer_edge_counts(g.indptr, g.indices, comp, dist, 3, 4),
         compiled.layer_edge_counts(g.indptr, g.indices, comp, dist, 3, 4))
