"""Bounded-degree property testing: query-counted oracles, r-balls and
their canonical types, type distributions, the sample-and-reject tester
framework with its concrete instances, and a brute-force farness oracle.

Indices are 0-based throughout: element ``i``, symbol ``j`` (position in
the signature), and rank ``k`` of the tuple among those containing ``i``.
"""
from __future__ import annotations

import itertools
import math
import threading
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from . import kernels
from .rotgraph import CapExceeded
from .simplegraph import SimpleGraph
from .structures import Signature, Structure, gaifman

BALL_CAP = 40
RADIUS_CAP = 3
SEARCH_LEAF_CAP = 20_000


class OracleError(IndexError):
    pass


# incidence index and oracle

class _Incidence:
    """Per element and symbol, the containing tuples in lexicographic order."""

    def __init__(self, obj: Structure | SimpleGraph):
        if isinstance(obj, SimpleGraph):
            self.names = ["E"]
            self.n = obj.n
            self.graph = obj
            self.rows = None
        else:
            self.names = obj.sig.names
            self.n = obj.n
            self.graph = None
            rows: list[list[list[tuple]]] = [[[] for _ in self.names] for _ in range(obj.n)]
            for j, name in enumerate(self.names):
                for t in sorted(obj.rels.get(name, ())):
                    for e in set(t):
                        rows[e][j].append(t)
            self.rows = rows

    def tuples(self, i: int, j: int) -> Sequence[tuple]:
        if self.rows is None:
            return [(i, int(w)) for w in self.graph.neighbors(i)]
        return self.rows[i][j]

    def degree(self, i: int) -> int:
        if self.rows is None:
            return int(self.graph.indptr[i + 1] - self.graph.indptr[i])
        return sum(len(ts) for ts in self.rows[i])

    def gaifman(self) -> SimpleGraph:
        return self.graph


class Oracle:
    """Neighbour-query access to a structure or simple graph.

    ``query(i, j, k)`` returns the k-th tuple of symbol j containing i (in
    lexicographic order) or None; each call counts as one query.
    """

    def __init__(self, obj: Structure | SimpleGraph, d: int | None = None):
        self._obj = obj
        self._inc = _Incidence(obj)
        self.n = self._inc.n
        self.names = self._inc.names
        self.symmetric = isinstance(obj, SimpleGraph)
        if self.symmetric:
            self.arity = 2
            dmax = int(obj.degrees().max()) if obj.n else 0
        else:
            self.arity = max((a for _, a in obj.sig.symbols), default=2)
            dmax = obj.max_degree()
        self.d = dmax if d is None else int(d)
        if dmax > self.d:
            raise OracleError(f"input has degree {dmax} > bound {self.d}")
        self._lock = threading.Lock()
        self._queries = 0
        # (r, cap) -> {v: (type, queries spent)}; lets repeated sampling skip
        # re-exploring balls while still charging the same query cost
        self._types: dict = {}

    @property
    def queries(self) -> int:
        return self._queries

    def reset(self) -> None:
        with self._lock:
            self._queries = 0

    def charge(self, q: int) -> None:
        with self._lock:
            self._queries += q

    def query(self, i: int, j: int, k: int):
        if not 0 <= i < self.n:
            raise OracleError(f"element {i} out of range")
        if not 0 <= j < len(self.names):
            raise OracleError(f"symbol index {j} out of range")
        if not 0 <= k < self.d:
            raise OracleError(f"rank {k} out of range for degree bound {self.d}")
        with self._lock:
            self._queries += 1
        ts = self._inc.tuples(i, j)
        return ts[k] if k < len(ts) else None

    def ball_cost_bound(self, r: int) -> int:
        """Worst-case queries for exploring one r-ball."""
        fan = self.d * max(1, self.arity - 1)
        verts = sum(fan ** i for i in range(r + 1))
        per_vertex = min(len(self.names) * self.d, self.d + len(self.names))
        return verts * per_vertex


# balls and canonical types

@dataclass(frozen=True)
class BallType:
    radius: int
    key: bytes
    cert: tuple = field(compare=False, repr=False, default=())

    @property
    def size(self) -> int:
        return self.cert[0] if self.cert else 1

    def tuples(self) -> tuple:
        return self.cert[1] if self.cert else ()

    def degrees(self) -> list[int]:
        deg = [0] * self.size
        for _, t in self.tuples():
            for e in set(t):
                deg[e] += 1
        return deg

    def dists(self) -> list[int]:
        adj = [set() for _ in range(self.size)]
        for _, t in self.tuples():
            for a in t:
                adj[a].update(x for x in t if x != a)
        dist = [-1] * self.size
        dist[0] = 0
        frontier = [0]
        while frontier:
            nxt = []
            for v in frontier:
                for w in adj[v]:
                    if dist[w] < 0:
                        dist[w] = dist[v] + 1
                        nxt.append(w)
            frontier = nxt
        return dist

    def interior_degrees(self) -> list[int]:
        deg, dist = self.degrees(), self.dists()
        return [deg[v] for v in range(self.size) if dist[v] < self.radius]

    def graph(self) -> SimpleGraph:
        """Gaifman graph of the canonical ball (centre is vertex 0)."""
        pairs = {tuple(sorted((a, b))) for _, t in self.tuples() for a in t for b in t if a != b}
        return SimpleGraph.from_edges(self.size, sorted(pairs))

    def digest(self) -> str:
        import hashlib
        return hashlib.sha1(self.key).hexdigest()[:16]


@dataclass
class Ball:
    """An r-ball with local ids; the centre is local 0."""
    radius: int
    elems: list[int]
    dists: list[int]
    tuples: list[tuple[str, tuple[int, ...]]]
    symmetric: bool = False

    @property
    def size(self) -> int:
        return len(self.elems)


def ball(o: Oracle, v: int, r: int, cap: int = BALL_CAP, radius_cap: int = RADIUS_CAP) -> Ball:
    """Explore the r-ball of ``v`` with neighbour queries only."""
    if r > radius_cap:
        raise CapExceeded(f"radius {r} > cap {radius_cap}")
    local = {v: 0}
    dists = [0]
    order = [v]
    found: set = set()
    head = 0
    while head < len(order):
        x = order[head]
        dx = dists[head]
        head += 1
        for j in range(len(o.names)):
            for k in range(o.d):
                t = o.query(x, j, k)
                if t is None:
                    break
                found.add((j, tuple(sorted(t)) if o.symmetric else t))
                if dx < r:
                    for e in t:
                        if e not in local:
                            local[e] = len(order)
                            order.append(e)
                            dists.append(dx + 1)
                            if len(order) > cap:
                                raise CapExceeded(f"ball exceeds {cap} elements")
    tuples = [(o.names[j], tuple(local[e] for e in t)) for j, t in found if all(e in local for e in t)]
    if o.symmetric:
        tuples = [(name, tuple(sorted(t))) for name, t in tuples]
    return Ball(r, order, dists, sorted(tuples), o.symmetric)


def _direct_ball(inc: _Incidence, indptr, indices, mark, v: int, r: int, cap: int) -> Ball:
    order, dists = kernels.ball_vertices(indptr, indices, v, r, mark)
    if len(order) > cap:
        raise CapExceeded(f"ball exceeds {cap} elements")
    local = {int(e): i for i, e in enumerate(order)}
    tuples = set()
    for e in order:
        for j, name in enumerate(inc.names):
            for t in inc.tuples(int(e), j):
                if all(x in local for x in t):
                    lt = tuple(local[x] for x in t)
                    tuples.add((name, tuple(sorted(lt)) if inc.rows is None else lt))
    return Ball(r, [int(e) for e in order], [int(x) for x in dists], sorted(tuples), inc.rows is None)


def canonical_type(b: Ball, leaf_cap: int = SEARCH_LEAF_CAP) -> BallType:
    """Centre-preserving canonical form by colour refinement plus
    individualization search; minimal certificate over all leaves."""
    m = b.size
    inc: list[list[tuple]] = [[] for _ in range(m)]
    for name, t in b.tuples:
        for pos, e in enumerate(t):
            inc[e].append((name, -1 if b.symmetric else pos, t))
    colours = _relabel([(0 if v == 0 else 1, b.dists[v]) for v in range(m)])
    colours = _refine(colours, inc)
    best = [None]
    leaves = [0]

    def search(col):
        classes: dict[int, list[int]] = {}
        for v, c in enumerate(col):
            classes.setdefault(c, []).append(v)
        cells = [vs for c, vs in sorted(classes.items()) if len(vs) > 1]
        if not cells:
            leaves[0] += 1
            if leaves[0] > leaf_cap:
                raise CapExceeded(f"canonical search exceeded {leaf_cap} leaves")
            if b.symmetric:
                ts = ((name, tuple(sorted(col[e] for e in t))) for name, t in b.tuples)
            else:
                ts = ((name, tuple(col[e] for e in t)) for name, t in b.tuples)
            cert = (m, tuple(sorted(ts)))
            if best[0] is None or cert < best[0]:
                best[0] = cert
            return
        target = min(cells, key=len)
        for v in target:
            split = [(c, 0 if u == v else 1) if c == col[v] else (c, 0) for u, c in enumerate(col)]
            search(_refine(_relabel(split), inc))

    search(colours)
    cert = best[0]
    return BallType(b.radius, repr(cert).encode(), cert)


def _relabel(keys: list) -> list[int]:
    order = {k: i for i, k in enumerate(sorted(set(keys)))}
    return [order[k] for k in keys]


def _refine(col: list[int], inc) -> list[int]:
    while True:
        sig = [(col[v], tuple(sorted((name, pos, tuple(col[e] for e in t) if pos >= 0 else tuple(sorted(col[e] for e in t)))
                                     for name, pos, t in inc[v])))
               for v in range(len(col))]
        new = _relabel(sig)
        if len(set(new)) == len(set(col)):
            return new
        col = new


def type_of(o: Oracle, v: int, r: int, cap: int = BALL_CAP) -> BallType:
    return canonical_type(ball(o, v, r, cap))


# distributions

@dataclass
class TypeDistribution:
    radius: int
    counts: Counter
    total: int

    @property
    def freq(self) -> dict[BallType, float]:
        return {t: c / self.total for t, c in self.counts.items()}

    @property
    def support(self) -> int:
        return len(self.counts)

    def l1(self, other: "TypeDistribution") -> float:
        f, g = self.freq, other.freq
        return float(sum(abs(f.get(t, 0.0) - g.get(t, 0.0)) for t in set(f) | set(g)))

    def tv(self, other: "TypeDistribution") -> float:
        return 0.5 * self.l1(other)

    def as_dict(self) -> dict:
        return {
            "radius": self.radius,
            "total": self.total,
            "support": self.support,
            "types": sorted(
                ({"type": t.digest(), "size": t.size, "frequency": c / self.total} for t, c in self.counts.items()),
                key=lambda x: (-x["frequency"], x["type"])),
        }


def rho_exact(a: Structure | SimpleGraph, r: int, cap: int = BALL_CAP, radius_cap: int = RADIUS_CAP) -> TypeDistribution:
    """Exact r-type distribution by scanning every element."""
    if r > radius_cap:
        raise CapExceeded(f"radius {r} > cap {radius_cap}")
    inc = _Incidence(a)
    g = a if isinstance(a, SimpleGraph) else gaifman(a)
    mark = np.full(g.n, -1, dtype=np.int64)
    counts: Counter = Counter()
    for v in range(g.n):
        counts[canonical_type(_direct_ball(inc, g.indptr, g.indices, mark, v, r, cap))] += 1
    return TypeDistribution(r, counts, g.n)


def required_samples(t: int, lam: float) -> int:
    """s = ceil((t^2 / lambda^2) * ln(t + 40))."""
    if lam <= 0 or t < 1:
        raise ValueError("need t >= 1 and lambda > 0")
    return math.ceil(t * t / (lam * lam) * math.log(t + 40))


def estimate_frequencies(o: Oracle, r: int, s: int, seed: int | np.random.SeedSequence = 0,
                         cap: int = BALL_CAP) -> TypeDistribution:
    """Empirical r-type frequencies of ``s`` uniform samples (with replacement)."""
    if s < 1:
        raise ValueError("s must be positive")
    rng = np.random.default_rng(seed)
    counts: Counter = Counter()
    seen = o._types.setdefault((r, cap), {})
    for v in rng.integers(0, o.n, size=s).tolist():
        hit = seen.get(v)
        if hit is None:
            before = o.queries
            tp = canonical_type(ball(o, v, r, cap))
            seen[v] = (tp, o.queries - before)
        else:
            tp, cost = hit
            o.charge(cost)
        counts[tp] += 1
    return TypeDistribution(r, counts, s)


def support_bound(o: Oracle, r: int, lam: float, seed=0, slack: int = 2) -> tuple[int, int]:
    """Observed-support rule: distinct types in a presample of 10*s0 vertices
    (s0 the sample size for t = 1), times ``slack``. Returns (t, presample)."""
    s0 = required_samples(1, lam)
    pre = estimate_frequencies(o, r, 10 * s0, seed)
    return max(1, slack * pre.support), 10 * s0


@dataclass
class SamplingDistance:
    per_radius: list[float | None]
    lower: float
    upper: float

    def as_dict(self) -> dict:
        return {"per_radius": self.per_radius, "interval": [self.lower, self.upper]}


def sampling_distance(a, b, r_max: int = RADIUS_CAP, cap: int = BALL_CAP) -> SamplingDistance:
    """Per-radius total variation of type distributions and the interval for
    the geometric sum (radii beyond ``r_max`` or over the ball cap count as
    unknown in [0, 1])."""
    per: list[float | None] = []
    lo = 0.0
    hi = 0.0
    for r in range(r_max + 1):
        try:
            dr = rho_exact(a, r, cap, radius_cap=r_max).tv(rho_exact(b, r, cap, radius_cap=r_max))
        except CapExceeded:
            dr = None
        per.append(dr)
        w = 2.0 ** -r
        if dr is None:
            hi += w
        else:
            lo += w * dr
            hi += w * dr
    hi += 2.0 ** -r_max
    return SamplingDistance(per, lo, hi)


# tester framework

@dataclass
class TesterOutcome:
    verdict: str
    queries: int
    reason: str | None = None
    budget: int = 0
    samples: int = 0
    t: int = 0
    lam: float = 0.0
    n0: float = 0.0
    notes: list[str] = field(default_factory=list)

    @property
    def accepted(self) -> bool:
        return self.verdict == "accept"

    def as_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "queries": self.queries,
            "reason": self.reason,
            "budget": self.budget,
            "samples": self.samples,
            "t": self.t,
            "lambda": self.lam,
            "n0": self.n0,
            "notes": self.notes,
        }


def full_scan_table(is_forbidden: Callable[[BallType], bool], r: int, cap: int = BALL_CAP) -> Callable[[Oracle], bool]:
    """Small-input decision: accept iff no element has a forbidden r-type.
    Reads the whole input through the oracle."""
    def table(o: Oracle) -> bool:
        return not any(is_forbidden(type_of(o, v, r, cap)) for v in range(o.n))
    return table


def framework_tester(o: Oracle, is_forbidden: Callable[[BallType], bool], excluded: Callable[[int], bool],
                     r: int, lam: float, n0: float, table: Callable[[Oracle], bool] | None = None,
                     seed=0, t: int | None = None, cap: int = BALL_CAP) -> TesterOutcome:
    """Reject if n is excluded; decide exactly below n0; otherwise sample
    and reject iff a forbidden type is seen."""
    start = o.queries
    if excluded(o.n):
        return TesterOutcome("reject", 0, "n in M", 0, lam=lam, n0=n0)
    if o.n < n0:
        if table is None:
            raise ValueError(f"n = {o.n} < n0 = {n0} and no small-case table was given")
        ok = table(o)
        return TesterOutcome("accept" if ok else "reject", o.queries - start, None if ok else "exact-small",
                             o.n * o.ball_cost_bound(r), lam=lam, n0=n0, notes=["exact small-case branch"])
    ss = np.random.SeedSequence(seed if not isinstance(seed, np.random.SeedSequence) else seed.entropy)
    pre_seed, main_seed = ss.spawn(2)
    notes = []
    presample = 0
    if t is None:
        t, presample = support_bound(o, r, lam, pre_seed)
        notes.append(f"t from observed support of {presample} presamples")
    s = required_samples(t, lam)
    est = estimate_frequencies(o, r, s, main_seed, cap)
    bad = sum(c for tp, c in est.counts.items() if is_forbidden(tp))
    used = o.queries - start
    budget = (s + presample) * o.ball_cost_bound(r)
    verdict = "reject" if bad > 0 else "accept"
    return TesterOutcome(verdict, used, "sampled type in F" if bad else None, budget, s, t, lam, n0, notes)


def _check_eps(eps: float) -> None:
    if not 0 < eps <= 1:
        raise ValueError("epsilon must lie in (0, 1]")


@dataclass
class FreenessPlan:
    case: str
    lam: float
    n0: float
    forbidden_possible: bool
    odd_gate: bool


def freeness_plan(tau: BallType, d: int, eps: float) -> FreenessPlan:
    """Constants for tau-freeness by case on the interior degrees of tau."""
    _check_eps(eps)
    r = tau.radius
    degs = tau.interior_degrees()
    fits = max(tau.degrees(), default=0) <= d
    centre_deg = tau.degrees()[0] if tau.size else 0
    odd_gate = d == 1 and centre_deg == 0
    if r >= 1 and degs and all(x == d for x in degs):
        return FreenessPlan("full-degree", eps, 1, fits, odd_gate)
    if r == 1:
        return FreenessPlan("1-type", eps * d / (14 * (1 + d ** 3)), 2 * d * d / eps, fits, odd_gate)
    if r >= 1:
        for low in sorted(set(degs)):
            if low < d and (low + 1) not in degs:
                return FreenessPlan("degree-gap", eps * d / (14 * (1 + d ** (2 * r + 1))), 2 * d * d / eps, fits, odd_gate)
    raise ValueError("unsupported type for the freeness tester")


def freeness_tester(o: Oracle, tau: BallType, eps: float, seed=0, lam: float | None = None,
                    n0: float | None = None, t: int | None = None, table=None) -> TesterOutcome:
    plan = freeness_plan(tau, o.d, eps)
    lam = plan.lam if lam is None else lam
    n0 = plan.n0 if n0 is None else n0

    def is_forbidden(tp: BallType) -> bool:
        return plan.forbidden_possible and tp == tau

    def excluded(n: int) -> bool:
        return plan.odd_gate and n % 2 == 1

    if table is None:
        table = full_scan_table(is_forbidden, tau.radius)
    out = framework_tester(o, is_forbidden, excluded, tau.radius, lam, n0, table, seed, t)
    out.notes.append(f"case {plan.case}")
    return out


def maxcl(g: SimpleGraph, v: int) -> dict[int, int]:
    """Number of maximal cliques of each size that contain ``v``."""
    nb = [int(w) for w in g.neighbors(v)]
    adj = {w: set(int(x) for x in g.neighbors(w)) for w in nb}
    out: Counter = Counter()
    for mask in range(1 << len(nb)):
        S = [nb[i] for i in range(len(nb)) if mask >> i & 1]
        if any(b not in adj[a] for a, b in itertools.combinations(S, 2)):
            continue
        if any(all(w in adj[x] for x in S) for w in nb if w not in S):
            continue
        out[len(S) + 1] += 1
    return dict(out)


def clique_union_type(tau: BallType) -> bool:
    """True if the ball minus its centre is a disjoint union of cliques."""
    g = tau.graph()
    rest = list(range(1, g.n))
    seen = set()
    for v in rest:
        if v in seen:
            continue
        comp = {v}
        stack = [v]
        while stack:
            x = stack.pop()
            for w in g.neighbors(x).tolist():
                if w != 0 and w not in comp:
                    comp.add(w)
                    stack.append(w)
        seen |= comp
        if any(not g.has_edge(a, b) for a, b in itertools.combinations(sorted(comp), 2)):
            return False
    return True


def regularity_excluded(tau: BallType, d: int) -> Callable[[int], bool]:
    counts = maxcl(tau.graph(), 0)

    def excluded(n: int) -> bool:
        # cliques in C_d reach size d + 1 (K_4 at d = 3)
        return any(counts.get(i, 0) * n % i for i in range(1, d + 2))
    return excluded


def regularity_tester(o: Oracle, tau: BallType, eps: float, seed=0, lam: float | None = None,
                      n0: float | None = None, t: int | None = None, table=None) -> TesterOutcome:
    _check_eps(eps)
    if tau.radius != 1 or not clique_union_type(tau):
        raise ValueError("regularity needs a 1-type whose ball minus centre is a union of cliques")
    d = o.d
    lam = eps / (20 * d ** 6) if lam is None else lam
    n0 = 20 * d ** 8 if n0 is None else n0

    def is_forbidden(tp: BallType) -> bool:
        return tp != tau

    if table is None:
        table = full_scan_table(is_forbidden, 1)
    return framework_tester(o, is_forbidden, regularity_excluded(tau, d), 1, lam, n0, table, seed, t)


# substructure freeness

def gaifman_diameter(b: Structure) -> int:
    g = gaifman(b)
    best = 0
    for v in range(g.n):
        dist, _ = kernels.masked_bfs(g.indptr, g.indices, np.ones(g.n, dtype=np.uint8), np.array([v], dtype=np.int64))
        if (dist < 0).any():
            raise ValueError("pattern must be connected")
        best = max(best, int(dist.max()))
    return best


def contains_induced(host_n: int, host_tuples: Iterable[tuple[str, tuple]], pattern: Structure) -> bool:
    """Backtracking search for an induced copy of ``pattern``."""
    ht = set(host_tuples)
    pt = {(s, t) for s, ts in pattern.rels.items() for t in ts}
    names = pattern.sig.names
    arities = dict(pattern.sig.symbols)
    k = pattern.n
    assign: list[int] = []

    def consistent() -> bool:
        i = len(assign) - 1
        img = assign
        for name in names:
            ar = arities[name]
            for t in itertools.product(range(i + 1), repeat=ar):
                if i not in t:
                    continue
                if ((name, t) in pt) != ((name, tuple(img[x] for x in t)) in ht):
                    return False
        return True

    def rec() -> bool:
        if len(assign) == k:
            return True
        for v in range(host_n):
            if v in assign:
                continue
            assign.append(v)
            if consistent() and rec():
                return True
            assign.pop()
        return False

    return rec()


def substructure_freeness_tester(o: Oracle, b: Structure, eps: float, seed=0, c: float | None = None,
                                 n0: float | None = None) -> TesterOutcome:
    """Sample ceil(c/eps) elements, c = 3|B|d^(r+1), and reject iff an explored
    r-ball (r the diameter of B) contains B as an induced substructure."""
    _check_eps(eps)
    if b.n > 6:
        raise ValueError("pattern too large (at most 6 elements)")
    r = gaifman_diameter(b)
    c = 3 * b.n * o.d ** (r + 1) if c is None else c
    s = math.ceil(c / eps)
    n0 = s if n0 is None else n0
    start = o.queries

    def hit(bl: Ball) -> bool:
        ts = bl.tuples
        if bl.symmetric:
            # graph balls keep one orientation per edge; patterns carry both
            ts = ts + [(name, t[::-1]) for name, t in ts]
        return contains_induced(bl.size, ts, b)

    if o.n < n0:
        found = any(hit(ball(o, v, r, cap=10 ** 9, radius_cap=10 ** 9)) for v in range(o.n))
        return TesterOutcome("reject" if found else "accept", o.queries - start,
                             "exact-small" if found else None, o.n * o.ball_cost_bound(r), n0=n0,
                             notes=["exact small-case branch"])
    rng = np.random.default_rng(seed)
    for v in rng.integers(0, o.n, size=s).tolist():
        if hit(ball(o, v, r, cap=10 ** 9, radius_cap=10 ** 9)):
            return TesterOutcome("reject", o.queries - start, "sampled type in F", s * o.ball_cost_bound(r), s, n0=n0)
    return TesterOutcome("accept", o.queries - start, None, s * o.ball_cost_bound(r), s, n0=n0)


# farness

@dataclass
class Farness:
    far: bool
    budget: int
    distance: int | None
    witness: SimpleGraph | Structure | None

    def as_dict(self) -> dict:
        return {"far": self.far, "budget": self.budget, "distance": self.distance}


def _graph_candidates(g: SimpleGraph):
    return [(u, v) for u in range(g.n) for v in range(u + 1, g.n)]


def _apply_graph(g: SimpleGraph, flips) -> SimpleGraph:
    e = {tuple(x) for x in g.edges().tolist()}
    e ^= set(flips)
    return SimpleGraph.from_edges(g.n, sorted(e))


def farness_oracle(g: SimpleGraph | Structure, prop: Callable, eps: float, d: int,
                   budget_cap: int = 2_000_000) -> Farness:
    """Exhaustive search over inputs within floor(eps*d*n) modifications
    (in C_d), by increasing number of modifications."""
    _check_eps(eps)
    n = g.n
    budget = math.floor(eps * d * n)
    if isinstance(g, SimpleGraph):
        cands = _graph_candidates(g)
        apply = _apply_graph
        deg_ok = lambda h: h.n == 0 or int(h.degrees().max()) <= d
    else:
        cands = [(name, t) for name, ar in g.sig.symbols for t in itertools.product(range(n), repeat=ar)]

        def apply(s: Structure, flips):
            rels = {name: set(ts) for name, ts in s.rels.items()}
            for name, t in flips:
                rels.setdefault(name, set()).symmetric_difference_update({t})
            return Structure(s.sig, s.n, rels, check=False)
        deg_ok = lambda h: h.max_degree() <= d
    tried = 0
    for k in range(0, min(budget, len(cands)) + 1):
        for flips in itertools.combinations(cands, k):
            tried += 1
            if tried > budget_cap:
                raise CapExceeded(f"farness search exceeded {budget_cap} candidates")
            h = apply(g, flips)
            if deg_ok(h) and prop(h):
                return Farness(False, budget, k, h)
    return Farness(True, budget, None, None)


def farness_bruteforce(g: SimpleGraph, prop: Callable, eps: float, d: int) -> Farness:
    """Independent check: distance to the nearest member over every simple
    graph on the same vertex set."""
    n = g.n
    budget = math.floor(eps * d * n)
    pairs = _graph_candidates(g)
    mine = {tuple(x) for x in g.edges().tolist()}
    best = None
    wit = None
    for mask in range(1 << len(pairs)):
        e = [pairs[i] for i in range(len(pairs)) if mask >> i & 1]
        h = SimpleGraph.from_edges(n, e)
        if h.n and h.m and int(h.degrees().max()) > d:
            continue
        if not prop(h):
            continue
        dist = len(mine ^ set(e))
        if best is None or dist < best:
            best, wit = dist, h
    if best is None or best > budget:
        return Farness(True, budget, None, None)
    return Farness(False, budget, best, wit)


# trials

def trial_seeds(master: int, trials: int) -> list[np.random.SeedSequence]:
    """Per-trial seeds split from one master seed."""
    return np.random.SeedSequence(master).spawn(trials)


def run_trials(fn: Callable[[np.random.SeedSequence], TesterOutcome], trials: int, master: int = 0) -> list[dict]:
    out = []
    for i, ss in enumerate(trial_seeds(master, trials)):
        res = fn(ss)
        out.append({"trial": i, "seed": int(ss.generate_state(1)[0]), "verdict": res.verdict,
                    "queries": res.queries})
    return out


# helpers for building types

def graph_type(g: SimpleGraph, v: int, r: int) -> BallType:
    return canonical_type(ball(Oracle(g), v, r, cap=10 ** 6, radius_cap=10 ** 6))


def structure_type(a: Structure, v: int, r: int) -> BallType:
    return canonical_type(ball(Oracle(a), v, r, cap=10 ** 6, radius_cap=10 ** 6))
