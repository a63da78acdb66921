import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from zigzagfo import folagic as fo
from zigzagfo import gadgets as gd
from zigzagfo import rotgraph as rg
from zigzagfo import structures as ss
from zigzagfo.simplegraph import SimpleGraph


@pytest.fixture(scope="module")
def base():
    return rg.random_regular_base(2, seed=0)[0]


@pytest.fixture(scope="module")
def model1(base):
    return ss.build_model(base, 1)


@pytest.fixture(scope="module")
def enc1(model1):
    return gd.encode(model1)


def hist(g):
    v, c = np.unique(g.degrees(), return_counts=True)
    return dict(zip(v.tolist(), c.tolist()))


def has_triangle_through(g, v):
    nb = set(g.neighbors(v).tolist())
    return any(set(g.neighbors(w).tolist()) & nb for w in nb)


# gadgets

def test_small_path_gadget():
    g, u, v = gd.path_gadget(6, 3, 2)
    assert g.n == 33 == 3 * 7 + 12
    assert hist(g) == {5: 2, 6: 31}
    assert g.degrees()[u] == g.degrees()[v] == 5


def test_full_size_path_gadget():
    d, ell = gd.structure_degree(2), gd.path_length(2)
    assert (d, ell) == (25, 98)
    g, u, v = gd.path_gadget(d, ell, 17)
    assert g.n == gd.arrow_size(d, ell) == 98 * 26 + 50 == 2598
    assert hist(g) == {24: 2, 25: 2596}


@pytest.mark.parametrize("d", [3, 4, 6, 7])
def test_gadget_degrees(d):
    g, u, v = gd.g_gadget(d)
    assert g.n == d + 1 and hist(g) == {d - 1: 2, d: d - 1}
    h, u, v = gd.h_gadget(d)
    assert h.n == 2 * d and hist(h) == {d - 1: 2, d: 2 * d - 2}
    assert not h.has_edge(u, v)


def test_h_gadget_triangle_free_for_d3():
    h, _, _ = gd.h_gadget(3)
    assert not any(has_triangle_through(h, v) for v in range(h.n))


def test_gadget_rejects_small_degree():
    with pytest.raises(gd.GadgetError):
        gd.g_gadget(2)
    with pytest.raises(gd.GadgetError):
        gd.path_gadget(5, 3, 4)


def test_only_original_vertices_avoid_triangles():
    # every gadget vertex sits on a triangle once d >= 4
    for d in (4, 6, 25):
        g, _, _ = gd.path_gadget(d, 4, 1)
        assert gd.original_vertices(g).size == 0


# arrow codes

def test_arrow_positions_cover_range():
    D = 2
    sig = ss.signature_for(D)
    ps = sorted(gd.arrow_position(s, D) for s in sig.names)
    assert ps == list(range(3 * D ** 4 + 1))
    assert gd.arrow_position("R", D) == 48 <= gd.path_length(D)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 4), st.data())
def test_arrow_position_roundtrip(D, data):
    p = data.draw(st.integers(0, 3 * D ** 4))
    sym = gd.arrow_symbol(p, D)
    assert gd.arrow_position(sym, D) == p
    _, idx = ss.parse_symbol(sym)
    assert ss.parse_symbol(gd.arrow_symbol(gd.arrow_position(sym, D), D)) == ss.parse_symbol(sym)
    assert len(idx) in (0, 4)


def test_arrow_symbol_errors():
    with pytest.raises(gd.GadgetError):
        gd.arrow_symbol(49, 2)
    with pytest.raises(gd.GadgetError):
        gd.arrow_position("E[0,0,0,2]", 2)


# encoding

def test_encode_size(model1, enc1):
    assert enc1.graph.n == 17 + model1.tuple_count * 2598
    assert len(enc1.arrows) == model1.tuple_count


def test_encode_simple(enc1):
    g = enc1.graph
    for v in (0, 16, 17, 5000, g.n - 1):
        nb = g.neighbors(v)
        assert v not in nb.tolist()
        assert np.unique(nb).size == nb.size


def test_original_degree_counts_tuple_ends(model1, enc1):
    # one gadget end per tuple position, so a loop tuple counts twice
    ends = np.zeros(17, dtype=int)
    for ts in model1.rels.values():
        for x, y in ts:
            ends[x] += 1
            ends[y] += 1
    deg = enc1.graph.degrees()
    assert deg[:17].tolist() == ends.tolist()
    assert (deg[17:] == 25).all()


def test_encoded_block_position_recovers_kind(enc1):
    g = enc1.graph
    # blocks before position p are all 26-vertex G blocks
    h, _, _ = gd.h_gadget(25)
    for t in (0, len(enc1.arrows) // 2, len(enc1.arrows) - 1):
        lo, _ = enc1.arrow_range(t)
        spec = enc1.arrows[t]
        blk = lo + spec.p * 26
        assert g.induced(range(blk, blk + 50)) == h
        assert ss.parse_symbol(gd.arrow_symbol(spec.p, 2)) == ss.parse_symbol(spec.symbol)


def test_encode_checks_model(model1, base):
    broken = model1.remove(ss.f_name(0, 2), next(iter(model1.tuples(ss.f_name(0, 2)))))
    with pytest.raises(gd.NotAModel):
        gd.encode(broken, base)


def test_encode_cap(model1):
    with pytest.raises(rg.CapExceeded):
        gd.encode(model1, cap_vertices=1000)


def test_encode_rejects_foreign_signature():
    with pytest.raises(gd.GadgetError):
        gd.encode(ss.Structure(ss.simple_signature("E"), 2))


# original vertices

def test_original_vertices_match_provenance(enc1):
    assert gd.original_vertices(enc1.graph).tolist() == list(range(17))


def test_original_vertices_small_cases():
    tri = SimpleGraph.from_edges(3, [(0, 1), (1, 2), (0, 2)])
    assert gd.original_vertices(tri).size == 0
    assert gd.original_vertices(SimpleGraph.from_edges(4, [])).tolist() == [0, 1, 2, 3]


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_original_vertices_brute_force(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 12))
    edges = [(u, v) for u in range(n) for v in range(u + 1, n) if rng.random() < 0.3]
    g = SimpleGraph.from_edges(n, edges)
    want = [v for v in range(n) if not has_triangle_through(g, v)]
    assert gd.original_vertices(g).tolist() == want


# decoding

def test_decode_roundtrip_depth1(model1, enc1):
    assert gd.decode(enc1.graph, 2) == model1


def test_decode_small_structure():
    sig = ss.signature_for(2)
    a = ss.Structure(sig, 3, {"R": {(0, 0)}, ss.e_name(1, 2, 2): {(1, 2)}, ss.e_name(2, 1, 2): {(2, 1)}})
    enc = gd.encode(a)
    assert gd.decode(enc.graph, 2) == a


def test_decode_names_mutated_arrow(enc1):
    g = enc1.graph
    edges = g.edges()
    lo, hi = enc1.arrow_range(5)
    i = int(np.flatnonzero((edges[:, 0] >= lo + 30) & (edges[:, 1] < hi))[0])
    e2 = np.delete(edges, i, axis=0)
    bad = SimpleGraph.from_unique_pairs(g.n, e2[:, 0], e2[:, 1])
    spec = enc1.arrows[5]
    with pytest.raises(gd.MalformedArrow) as exc:
        gd.decode(bad, 2)
    assert f"original vertices {spec.x} and {spec.y}" in str(exc.value)


def test_decode_dangling_triangle(enc1):
    g = enc1.graph
    e = g.edges()
    n = g.n
    extra = np.array([[n, n + 1], [n, n + 2], [n + 1, n + 2]])
    e2 = np.concatenate([e, extra])
    with pytest.raises(gd.DanglingComponent):
        gd.decode(SimpleGraph.from_unique_pairs(n + 3, e2[:, 0], e2[:, 1]), 2)


def test_decode_then_check(enc1, base):
    back = gd.decode(enc1.graph, 2)
    assert fo.check_zigzag(back, base).ok


# expansion spot check

def test_xi_value():
    assert gd.xi_bound(2) == pytest.approx(1.1853e-08, rel=1e-3)
    # the per-arrow count bound only makes the constant smaller
    assert gd.xi_bound(2, c=2 * 49 * (26 + 50)) < gd.xi_bound(2)


def test_structured_cuts_expand(enc1):
    xi = gd.xi_bound(2)
    cuts = gd.structured_cuts(enc1, seed=3)
    assert {"one-arrow", "half-arrow"} <= set(cuts)
    for name, mask in cuts.items():
        assert gd.boundary_size(enc1.graph, mask) >= xi * mask.sum(), name


def test_boundary_size_small():
    g = SimpleGraph.from_edges(4, [(0, 1), (1, 2), (2, 3), (3, 0)])
    assert gd.boundary_size(g, np.array([1, 1, 0, 0], bool)) == 2
