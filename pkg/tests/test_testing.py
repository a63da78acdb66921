import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from zigzagfo import structures as ss
from zigzagfo import testing as tt
from zigzagfo.cli import graph_pattern
from zigzagfo.simplegraph import SimpleGraph


def cycle(n):
    return SimpleGraph.from_edges(n, [(i, (i + 1) % n) for i in range(n)])


def complete(n):
    return SimpleGraph.from_edges(n, list(itertools.combinations(range(n), 2)))


def union(*gs):
    edges, off = [], 0
    for g in gs:
        edges += [(u + off, v + off) for u, v in g.edges().tolist()]
        off += g.n
    return SimpleGraph.from_edges(off, edges)


def random_graph(rng, n, d, p=0.5):
    deg = [0] * n
    edges = []
    pairs = list(itertools.combinations(range(n), 2))
    rng.shuffle(pairs)
    for u, v in pairs:
        if deg[u] < d and deg[v] < d and rng.random() < p:
            edges.append((int(u), int(v)))
            deg[u] += 1
            deg[v] += 1
    return SimpleGraph.from_edges(n, edges)


K4 = complete(4)
K4_TYPE = tt.graph_type(K4, 0, 1)


# oracle

def test_oracle_none_past_degree():
    o = tt.Oracle(cycle(5), d=4)
    assert o.query(0, 0, 1) is not None
    assert o.query(0, 0, 3) is None


def test_oracle_counts_repeats():
    o = tt.Oracle(cycle(5))
    a = o.query(2, 0, 0)
    b = o.query(2, 0, 0)
    assert a == b and o.queries == 2
    o.reset()
    assert o.queries == 0


def test_oracle_graph_edges_by_neighbour_index():
    g = SimpleGraph.from_edges(4, [(0, 3), (0, 1), (0, 2)])
    o = tt.Oracle(g)
    assert [o.query(0, 0, k) for k in range(3)] == [(0, 1), (0, 2), (0, 3)]


def test_oracle_errors():
    o = tt.Oracle(cycle(4))
    for args in [(4, 0, 0), (-1, 0, 0), (0, 1, 0), (0, 0, 2)]:
        with pytest.raises(tt.OracleError):
            o.query(*args)
    with pytest.raises(tt.OracleError):
        tt.Oracle(complete(5), d=3)


def test_oracle_structure_tuples_in_order():
    sig = ss.simple_signature("E", "F")
    a = ss.Structure(sig, 3, {"E": {(1, 0), (0, 2), (0, 0)}, "F": {(2, 1)}})
    o = tt.Oracle(a)
    assert [o.query(0, 0, k) for k in range(3)] == [(0, 0), (0, 2), (1, 0)]
    assert o.query(1, 1, 0) == (2, 1)


# balls and types

def test_isolated_vertex_type():
    g = SimpleGraph.from_edges(3, [(1, 2)])
    for r in range(3):
        tp = tt.graph_type(g, 0, r)
        assert tp.size == 1 and tp.tuples() == ()


def test_cycle_centre_is_path_middle():
    path = SimpleGraph.from_edges(3, [(0, 1), (1, 2)])
    assert tt.graph_type(cycle(6), 0, 1) == tt.graph_type(path, 1, 1)
    assert tt.graph_type(cycle(6), 0, 1) != tt.graph_type(path, 0, 1)


def test_ball_is_induced():
    # the edge between the two neighbours must be in the 1-ball
    b = tt.ball(tt.Oracle(complete(3)), 0, 1)
    assert len(b.tuples) == 3


def test_ball_cap():
    with pytest.raises(tt.CapExceeded):
        tt.ball(tt.Oracle(cycle(50)), 0, 3, cap=5)
    with pytest.raises(tt.CapExceeded):
        tt.ball(tt.Oracle(cycle(50)), 0, 4)


def _rooted_iso(a, ra, b, rb):
    if a.n != b.n:
        return False
    ea = {frozenset(e) for e in a.edges().tolist()}
    eb = {frozenset(e) for e in b.edges().tolist()}
    for perm in itertools.permutations(range(b.n)):
        if perm[ra] != rb:
            continue
        if {frozenset((perm[u], perm[v])) for u, v in map(tuple, ea)} == eb:
            return True
    return False


def _ball_graph(g, v, r):
    b = tt.ball(tt.Oracle(g), v, r, cap=100, radius_cap=10)
    return SimpleGraph.from_edges(b.size, [t for _, t in b.tuples]), b


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_canonical_type_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    g = random_graph(rng, int(rng.integers(2, 9)), 3)
    balls = [_ball_graph(g, v, 1) for v in range(g.n)]
    types = [tt.canonical_type(b) for _, b in balls]
    for (x, tx), (y, ty) in itertools.combinations(zip(balls, types), 2):
        assert (tx == ty) == _rooted_iso(x[0], 0, y[0], 0)


# distributions

def test_rho_regular_triangle_free_r0():
    rho = tt.rho_exact(cycle(7), 0)
    assert rho.support == 1 and list(rho.freq.values()) == [1.0]


def test_rho_c4_plus_k1():
    g = union(cycle(4), SimpleGraph.from_edges(1, []))
    rho = tt.rho_exact(g, 1)
    assert sorted(rho.freq.values()) == [pytest.approx(0.2), pytest.approx(0.8)]


@pytest.mark.parametrize("m", [1, 2, 5])
def test_rho_union_invariance(m):
    h = union(cycle(5), complete(4), SimpleGraph.from_edges(3, [(0, 1), (1, 2)]))
    g = union(*([h] * m))
    for r in (0, 1, 2):
        assert tt.rho_exact(g, r).freq == tt.rho_exact(h, r).freq


def test_rho_sums_to_one():
    rng = np.random.default_rng(4)
    g = random_graph(rng, 40, 3)
    for r in (1, 2):
        assert math.isclose(sum(tt.rho_exact(g, r).freq.values()), 1.0)


def test_required_samples():
    assert tt.required_samples(3, 0.2) == 847 == math.ceil(9 / 0.04 * math.log(43))
    with pytest.raises(ValueError):
        tt.required_samples(0, 0.1)


def test_estimate_close_to_exact_with_many_samples():
    rng = np.random.default_rng(5)
    g = random_graph(rng, 60, 3)
    exact = tt.rho_exact(g, 1)
    est = tt.estimate_frequencies(tt.Oracle(g), 1, 6000, seed=1)
    assert est.l1(exact) < 0.15


def test_estimate_is_seeded():
    o = tt.Oracle(cycle(30))
    a = tt.estimate_frequencies(o, 1, 50, seed=3)
    b = tt.estimate_frequencies(o, 1, 50, seed=3)
    assert a.counts == b.counts


def test_estimate_charges_full_ball_cost():
    # cached types must still cost what a fresh exploration would
    rng = np.random.default_rng(8)
    g = random_graph(rng, 40, 3)
    o = tt.Oracle(g)
    tt.estimate_frequencies(o, 2, 300, seed=4)
    tt.estimate_frequencies(o, 2, 300, seed=9)
    want = 0
    for s in (4, 9):
        for v in np.random.default_rng(s).integers(0, g.n, size=300).tolist():
            fresh = tt.Oracle(g)
            tt.ball(fresh, v, 2)
            want += fresh.queries
    assert o.queries == want


def test_sampling_distance_identical():
    g = cycle(6)
    sd = tt.sampling_distance(g, g, r_max=2)
    assert sd.per_radius == [0.0, 0.0, 0.0]
    assert sd.lower == 0.0 and sd.upper == pytest.approx(0.25)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_sampling_distance_metric(seed):
    rng = np.random.default_rng(seed)
    a, b, c = (random_graph(rng, 10, 3) for _ in range(3))
    ab = tt.sampling_distance(a, b, 2).per_radius
    ba = tt.sampling_distance(b, a, 2).per_radius
    bc = tt.sampling_distance(b, c, 2).per_radius
    ac = tt.sampling_distance(a, c, 2).per_radius
    for r in range(3):
        assert ab[r] == pytest.approx(ba[r])
        assert ac[r] <= ab[r] + bc[r] + 1e-12


def test_sampling_distance_interval_width():
    sd = tt.sampling_distance(cycle(8), union(cycle(4), cycle(4)), r_max=3)
    assert 0 <= sd.upper - sd.lower <= 2 ** -3 + 1e-12


# cliques

def test_maxcl_k4_and_star():
    assert tt.maxcl(K4, 0) == {4: 1}
    star = SimpleGraph.from_edges(4, [(0, 1), (0, 2), (0, 3)])
    assert tt.maxcl(star, 0) == {2: 3}
    assert tt.maxcl(SimpleGraph.from_edges(1, []), 0) == {1: 1}


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_maxcl_sum_divisible(seed):
    rng = np.random.default_rng(seed)
    g = random_graph(rng, int(rng.integers(1, 12)), 4, p=0.7)
    tot: dict[int, int] = {}
    for v in range(g.n):
        for i, c in tt.maxcl(g, v).items():
            tot[i] = tot.get(i, 0) + c
    assert all(c % i == 0 for i, c in tot.items())


def test_clique_union_type():
    assert tt.clique_union_type(K4_TYPE)
    assert tt.clique_union_type(tt.graph_type(cycle(6), 0, 2))
    # neighbours 1-2-3 form a path, not a clique
    fan = SimpleGraph.from_edges(4, [(0, 1), (0, 2), (0, 3), (1, 2), (2, 3)])
    assert not tt.clique_union_type(tt.graph_type(fan, 0, 1))


# freeness

def test_freeness_lambda_one_type():
    tau = tt.graph_type(SimpleGraph.from_edges(1, []), 0, 1)
    plan = tt.freeness_plan(tau, 1, 0.28)
    assert plan.case == "1-type" and plan.lam == pytest.approx(0.01)


def test_freeness_odd_gate():
    iso = tt.graph_type(SimpleGraph.from_edges(1, []), 0, 1)
    g = SimpleGraph.from_edges(7, [(0, 1), (2, 3), (4, 5)])
    out = tt.freeness_tester(tt.Oracle(g, d=1), iso, 0.5)
    assert out.verdict == "reject" and out.queries == 0


def test_freeness_full_degree_case():
    tau = tt.graph_type(cycle(5), 0, 1)
    plan = tt.freeness_plan(tau, 2, 0.3)
    assert plan.case == "full-degree" and plan.lam == 0.3


def test_freeness_rejects_bad_epsilon():
    tau = tt.graph_type(cycle(5), 0, 1)
    for eps in (0, -0.1, 1.5):
        with pytest.raises(ValueError):
            tt.freeness_plan(tau, 2, eps)


@pytest.mark.parametrize("seed", range(30))
def test_freeness_one_sided(seed):
    # cycles have no degree-1 vertex, so the path-end type never appears
    tau = tt.graph_type(SimpleGraph.from_edges(3, [(0, 1), (1, 2)]), 0, 1)
    g = union(cycle(40), cycle(33))
    out = tt.freeness_tester(tt.Oracle(g), tau, 0.5, seed=seed, lam=0.3, n0=10)
    assert out.accepted


def test_freeness_rejects_far_instance():
    tau = tt.graph_type(SimpleGraph.from_edges(2, [(0, 1)]), 0, 1)
    g = SimpleGraph.from_edges(200, [(2 * i, 2 * i + 1) for i in range(100)])
    rejections = sum(not tt.freeness_tester(tt.Oracle(g, d=2), tau, 0.5, seed=s, lam=0.3, n0=10).accepted
                     for s in range(20))
    assert rejections == 20


def test_sampling_queries_independent_of_n():
    tau = tt.graph_type(SimpleGraph.from_edges(2, [(0, 1)]), 0, 1)
    q = [tt.freeness_tester(tt.Oracle(cycle(n)), tau, 0.5, seed=1, lam=0.3, n0=1, t=2).queries
         for n in (50, 500, 5000)]
    assert len(set(q)) == 1


# regularity

def test_regularity_gate_k4():
    ex = tt.regularity_excluded(K4_TYPE, 3)
    assert [n for n in range(1, 17) if not ex(n)] == [4, 8, 12, 16]


@pytest.mark.parametrize("m", [1, 3, 10])
def test_regularity_rejects_k4_plus_point(m):
    g = union(*([K4] * m), SimpleGraph.from_edges(1, []))
    o = tt.Oracle(g, d=3)
    out = tt.regularity_tester(o, K4_TYPE, 0.5)
    assert out.verdict == "reject" and out.reason == "n in M"
    assert out.queries == 0 and o.queries == 0


def test_regularity_accepts_k4_union():
    g = union(*([K4] * 6))
    for seed in range(20):
        assert tt.regularity_tester(tt.Oracle(g), K4_TYPE, 0.5, seed=seed, lam=0.3, n0=5).accepted
    assert tt.regularity_tester(tt.Oracle(g), K4_TYPE, 0.5).accepted  # exact branch


def test_regularity_default_constants():
    out = tt.regularity_tester(tt.Oracle(union(K4, K4)), K4_TYPE, 0.6)
    assert out.lam == pytest.approx(0.6 / (20 * 3 ** 6)) and out.n0 == 20 * 3 ** 8


def test_regularity_needs_clique_type():
    with pytest.raises(ValueError):
        tt.regularity_tester(tt.Oracle(cycle(6)), tt.graph_type(cycle(6), 0, 2), 0.5)


# substructure freeness

def test_contains_induced():
    tri = graph_pattern(complete(3))
    host = [("E", t) for t in [(0, 1), (1, 0), (1, 2), (2, 1), (0, 2), (2, 0)]]
    assert tt.contains_induced(3, host, tri)
    assert not tt.contains_induced(3, host[:4], tri)
    # induced: a triangle is not an induced path
    path = graph_pattern(SimpleGraph.from_edges(3, [(0, 1), (1, 2)]))
    assert not tt.contains_induced(3, host, path)


def test_substructure_exact_branch_rejects():
    g = union(complete(3), SimpleGraph.from_edges(2, [(0, 1)]))
    out = tt.substructure_freeness_tester(tt.Oracle(g), graph_pattern(complete(3)), 1.0)
    assert out.verdict == "reject" and "exact small-case branch" in out.notes


def test_substructure_accepts_free_input():
    g = union(cycle(30), cycle(40))
    for seed in range(10):
        out = tt.substructure_freeness_tester(tt.Oracle(g), graph_pattern(complete(3)), 0.5, seed=seed, n0=1)
        assert out.accepted


def test_substructure_rejects_copies():
    g = union(*([complete(3)] * 100))
    rej = sum(not tt.substructure_freeness_tester(tt.Oracle(g), graph_pattern(complete(3)), 0.5, seed=s).accepted
              for s in range(50))
    assert rej >= 34


def test_substructure_rejects_zero_epsilon():
    with pytest.raises(ValueError):
        tt.substructure_freeness_tester(tt.Oracle(cycle(5)), graph_pattern(complete(3)), 0)


def test_gaifman_diameter():
    assert tt.gaifman_diameter(graph_pattern(SimpleGraph.from_edges(4, [(0, 1), (1, 2), (2, 3)]))) == 3
    with pytest.raises(ValueError):
        tt.gaifman_diameter(graph_pattern(SimpleGraph.from_edges(2, [])))


# farness

def edgeless(h):
    return h.m == 0


def triangle_free(h):
    return not any(h.has_edge(a, b) and h.has_edge(b, c) and h.has_edge(a, c)
                   for a, b, c in itertools.combinations(range(h.n), 3))


def no_degree_two(h):
    return h.n == 0 or not (h.degrees() == 2).any()


def test_farness_single_edge():
    g = SimpleGraph.from_edges(2, [(0, 1)])
    res = tt.farness_oracle(g, edgeless, 0.5, 1)
    assert not res.far and res.distance == 1 and res.witness.m == 0


def test_farness_already_member():
    res = tt.farness_oracle(cycle(5), triangle_free, 0.1, 2)
    assert not res.far and res.distance == 0


def _all_graphs(n, d):
    pairs = list(itertools.combinations(range(n), 2))
    for mask in range(1 << len(pairs)):
        g = SimpleGraph.from_edges(n, [pairs[i] for i in range(len(pairs)) if mask >> i & 1])
        if g.m == 0 or int(g.degrees().max()) <= d:
            yield g


@pytest.mark.parametrize("prop", [edgeless, no_degree_two])
def test_farness_implementations_agree(prop):
    for n in range(1, 6):
        for d in (1, 2):
            for g in _all_graphs(n, d):
                for eps in (0.1, 0.3):
                    a = tt.farness_oracle(g, prop, eps, d)
                    b = tt.farness_bruteforce(g, prop, eps, d)
                    assert a.far == b.far
                    assert a.distance == b.distance


def test_farness_structure_input():
    sig = ss.simple_signature("E")
    a = ss.Structure(sig, 3, {"E": {(0, 0), (1, 1)}})
    res = tt.farness_oracle(a, lambda s: not s.tuples("E"), 1.0, 1)
    assert not res.far and res.distance == 2
    assert tt.farness_oracle(a, lambda s: not s.tuples("E"), 0.5, 1).far


# trials

def test_trial_seeds_deterministic():
    a = [s.generate_state(2).tolist() for s in tt.trial_seeds(7, 5)]
    b = [s.generate_state(2).tolist() for s in tt.trial_seeds(7, 5)]
    assert a == b and len({tuple(x) for x in a}) == 5


def test_run_trials_records():
    tau = tt.graph_type(SimpleGraph.from_edges(2, [(0, 1)]), 0, 1)
    o = tt.Oracle(cycle(30))
    rows = tt.run_trials(lambda s: tt.freeness_tester(o, tau, 0.5, seed=s, lam=0.4, n0=1, t=2), 3, master=1)
    assert [r["trial"] for r in rows] == [0, 1, 2]
    assert all(r["verdict"] == "accept" for r in rows)
