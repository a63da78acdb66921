"""Regular multigraphs given by rotation maps.

A rotation graph on ``n`` vertices with degree ``D`` is stored as a flat
int64 table indexed by slot ``v*D + i``; ``table[v*D + i] == w*D + j`` means
port ``i`` of ``v`` leads to port ``j`` of ``w``. A fixed point is a self-loop
that contributes one to the degree.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import kernels

DENSE_LIMIT = 5000
POWER_TOL = 1e-10
POWER_MAXITER = 100_000
SPECTRAL_TOL = 1e-9
EXHAUSTIVE_LIMIT = 24
DEFAULT_SLOT_CAP = 50_000_000


class RotationError(ValueError):
    pass


class CapExceeded(RuntimeError):
    pass


class RotationGraph:
    """Immutable rotation map. Construct via :meth:`from_table` or helpers."""

    __slots__ = ("n", "degree", "table", "_adj")

    def __init__(self, n: int, degree: int, table: np.ndarray, check: bool = True):
        table = np.ascontiguousarray(table, dtype=np.int64).reshape(-1)
        table.setflags(write=False)
        self.n = int(n)
        self.degree = int(degree)
        self.table = table
        self._adj = None
        if check:
            bad = validate(self)
            if bad is not None:
                raise RotationError(bad)

    @classmethod
    def from_pairs(cls, n: int, degree: int, rot: dict) -> "RotationGraph":
        """Build from a mapping ``(v, i) -> (w, j)``."""
        t = np.full(n * degree, -1, dtype=np.int64)
        for (v, i), (w, j) in rot.items():
            t[v * degree + i] = w * degree + j
        return cls(n, degree, t)

    def rot(self, v: int, i: int) -> tuple[int, int]:
        s = int(self.table[v * self.degree + i])
        return divmod(s, self.degree)

    def adjacency(self) -> np.ndarray:
        """Dense port-count matrix ``A[v, w]``; symmetric with row sums ``D``."""
        if self._adj is None:
            a = kernels.adjacency_counts(self.table, self.n, self.degree)
            a.setflags(write=False)
            self._adj = a
        return self._adj

    def sparse_adjacency(self):
        from scipy.sparse import csr_matrix

        rows = np.repeat(np.arange(self.n, dtype=np.int64), self.degree)
        cols = self.table // self.degree
        data = np.ones(rows.size, dtype=np.float64)
        return csr_matrix((data, (rows, cols)), shape=(self.n, self.n))

    def __eq__(self, other):
        return (
            isinstance(other, RotationGraph)
            and self.n == other.n
            and self.degree == other.degree
            and np.array_equal(self.table, other.table)
        )

    def __hash__(self):
        return hash((self.n, self.degree, self.table.tobytes()))

    def __repr__(self):
        return f"RotationGraph(n={self.n}, degree={self.degree})"


@dataclass(frozen=True)
class SpectralReport:
    lambda2: float
    lambdaN: float
    lam: float
    connected: bool
    bipartite: bool
    method: str = "dense"

    def as_dict(self) -> dict:
        return {
            "lambda2": self.lambda2,
            "lambdaN": self.lambdaN,
            "lambda": self.lam,
            "connected": self.connected,
            "bipartite": self.bipartite,
            "method": self.method,
        }


@dataclass(frozen=True)
class CutReport:
    h: float
    witness_set: tuple[int, ...]
    boundary: int
    exact: bool

    def as_dict(self) -> dict:
        return {
            "h": self.h,
            "witness_set": list(self.witness_set),
            "boundary": self.boundary,
            "exact": self.exact,
            "upper_bound_only": not self.exact,
        }


def validate(g: RotationGraph) -> str | None:
    """None if the table is total and self-inverse, else a description."""
    if g.n < 0 or g.degree < 0:
        return "negative dimensions"
    if g.table.shape[0] != g.n * g.degree:
        return f"table length {g.table.shape[0]} != n*D = {g.n * g.degree}"
    bad = kernels.validate_table(g.table, g.n, g.degree)
    if bad < 0:
        return None
    v, i = divmod(int(bad), g.degree)
    t = int(g.table[bad])
    if t < 0 or t >= g.n * g.degree:
        return f"rot({v},{i}) out of range"
    w, j = divmod(t, g.degree)
    back = divmod(int(g.table[t]), g.degree)
    return f"rot({v},{i})=({w},{j}) but rot({w},{j})={back}"


# construction helpers

def cycle(n: int) -> RotationGraph:
    """C_n with port 0 forward and port 1 backward."""
    if n < 1:
        raise ValueError("cycle needs n >= 1")
    t = np.empty(2 * n, dtype=np.int64)
    v = np.arange(n)
    t[2 * v] = 2 * ((v + 1) % n) + 1
    t[2 * v + 1] = 2 * ((v - 1) % n)
    return RotationGraph(n, 2, t)


def complete(n: int) -> RotationGraph:
    """K_n; port i at v leads to the i-th other vertex in increasing order."""
    if n < 2:
        raise ValueError("complete graph needs n >= 2")
    D = n - 1
    t = np.empty(n * D, dtype=np.int64)
    for v in range(n):
        for i in range(D):
            w = i if i < v else i + 1
            j = v if v < w else v - 1
            t[v * D + i] = w * D + j
    return RotationGraph(n, D, t)


def self_loops(degree: int) -> RotationGraph:
    """One vertex whose every port is a fixed point."""
    return RotationGraph(1, degree, np.arange(degree, dtype=np.int64))


def disjoint_union(graphs: Sequence[RotationGraph]) -> RotationGraph:
    D = graphs[0].degree
    if any(g.degree != D for g in graphs):
        raise ValueError("degrees differ")
    parts, off = [], 0
    for g in graphs:
        parts.append(g.table + off * D)
        off += g.n
    return RotationGraph(off, D, np.concatenate(parts))


def random_rotation(n: int, degree: int, rng: np.random.Generator) -> RotationGraph:
    """Random perfect matching on the slots (pairing model); a leftover slot
    becomes a fixed point when ``n*degree`` is odd."""
    total = n * degree
    perm = rng.permutation(total)
    t = np.empty(total, dtype=np.int64)
    m = total - (total % 2)
    a, b = perm[0:m:2], perm[1:m:2]
    t[a] = b
    t[b] = a
    if total % 2:
        t[perm[-1]] = perm[-1]
    return RotationGraph(n, degree, t)


def relabel_ports(g: RotationGraph, perms: np.ndarray) -> RotationGraph:
    """Apply a per-vertex port permutation ``perms[v][old] = new``."""
    D = g.degree
    perms = np.asarray(perms, dtype=np.int64)
    newslot = (np.arange(g.n)[:, None] * D + perms).reshape(-1)
    t = np.empty_like(g.table)
    t[newslot] = newslot[g.table]
    return RotationGraph(g.n, D, t)


# products

def square(g: RotationGraph) -> RotationGraph:
    """G^2 with ports ``(k1, k2)`` flattened as ``k1*D + k2``."""
    _require_valid(g)
    t = kernels.square_table(g.table, g.n, g.degree)
    return RotationGraph(g.n, g.degree ** 2, t, check=False)


def zigzag(g1: RotationGraph, g2: RotationGraph, port_map: Sequence[int] | None = None) -> RotationGraph:
    """Zig-zag product. Vertex ``(v, k)`` becomes ``v*D1 + k``; port ``(i, j)``
    becomes ``i*D2 + j``. ``port_map[k]`` names the g2 vertex identified with
    port ``k`` of g1 (identity when omitted)."""
    _require_valid(g1)
    _require_valid(g2)
    if g2.n != g1.degree:
        raise ValueError(f"dimension mismatch: g2 has {g2.n} vertices, g1 has degree {g1.degree}")
    t2 = g2.table
    if port_map is not None:
        pm = np.asarray(port_map, dtype=np.int64)
        if sorted(pm.tolist()) != list(range(g2.n)):
            raise ValueError("port_map must be a bijection")
        inv = np.argsort(pm)
        # re-index g2 so that its vertex k is the one identified with port k
        D2 = g2.degree
        src = (inv[:, None] * D2 + np.arange(D2)).reshape(-1)
        tgt = g2.table[src]
        t2 = pm[tgt // D2] * D2 + tgt % D2
    t = kernels.zigzag_table(g1.table, g1.n, g1.degree, np.ascontiguousarray(t2), g2.degree)
    return RotationGraph(g1.n * g1.degree, g2.degree ** 2, t, check=False)


def _require_valid(g: RotationGraph) -> None:
    bad = validate(g)
    if bad is not None:
        raise RotationError(bad)


# spectra

def spectrum(g: RotationGraph, dense_limit: int = DENSE_LIMIT) -> SpectralReport:
    if g.n == 0:
        raise ValueError("empty graph has no spectrum")
    if g.n == 1:
        # no nontrivial eigenvalue; report zeros
        return SpectralReport(0.0, 0.0, 0.0, True, False, "trivial")
    if g.n <= dense_limit:
        M = g.adjacency().astype(np.float64) / g.degree
        ev = np.linalg.eigvalsh(M)[::-1]
        return _report(float(ev[1]), float(ev[-1]), g.n, "dense")
    lam2, lamN = _power_extremes(g)
    return _report(lam2, lamN, g.n, "power")


def eigenvalues(g: RotationGraph) -> np.ndarray:
    """Full normalized spectrum in descending order (dense)."""
    M = g.adjacency().astype(np.float64) / g.degree
    return np.linalg.eigvalsh(M)[::-1]


def _report(lam2: float, lamN: float, n: int, method: str) -> SpectralReport:
    lam2 = min(1.0, max(-1.0, lam2))
    lamN = min(1.0, max(-1.0, lamN))
    connected = lam2 < 1.0 - SPECTRAL_TOL
    bipartite = connected and lamN <= -1.0 + SPECTRAL_TOL
    return SpectralReport(lam2, lamN, max(abs(lam2), abs(lamN)), connected, bipartite, method)


def _power_extremes(g: RotationGraph) -> tuple[float, float]:
    M = g.sparse_adjacency() / g.degree
    n = g.n
    ones = np.full(n, 1.0 / math.sqrt(n))
    rng = np.random.default_rng(0)

    def top(apply) -> float:
        x = rng.standard_normal(n)
        x -= ones * (ones @ x)
        x /= np.linalg.norm(x)
        mu = 0.0
        for _ in range(POWER_MAXITER):
            y = apply(x)
            y -= ones * (ones @ y)
            nrm = np.linalg.norm(y)
            if nrm == 0.0:
                return 0.0
            new_mu = float(x @ y)
            y /= nrm
            if abs(new_mu - mu) < POWER_TOL and np.linalg.norm(y - x) < math.sqrt(POWER_TOL):
                return new_mu
            x, mu = y, new_mu
        return mu

    mu2 = top(lambda x: 0.5 * (M @ x + x))
    muN = top(lambda x: 0.5 * (x - M @ x))
    return 2.0 * mu2 - 1.0, 1.0 - 2.0 * muN


def cheeger_bound(g: RotationGraph, lam: float | None = None) -> float:
    if lam is None:
        lam = spectrum(g).lam
    return g.degree * (1.0 - lam) / 2.0


# cuts

def expansion(g: RotationGraph, mode: str = "exhaustive", k: int = 1000, seed: int = 0) -> CutReport:
    """Expansion ratio h(G). ``mode='sampled'`` gives an upper bound from
    ``k`` random subsets plus every singleton."""
    if g.n < 2:
        raise ValueError("expansion needs at least two vertices")
    A = g.adjacency()
    if mode == "exhaustive":
        if g.n > EXHAUSTIVE_LIMIT:
            raise ValueError(f"exhaustive expansion limited to n <= {EXHAUSTIVE_LIMIT}")
        b, size, mask = kernels.exhaustive_cut(np.ascontiguousarray(A))
        S = tuple(v for v in range(g.n) if (mask >> v) & 1)
        return CutReport(b / size, S, int(b), True)
    if mode != "sampled":
        raise ValueError(f"unknown mode {mode!r}")
    rng = np.random.default_rng(seed)
    off = A - np.diag(np.diag(A))
    deg_off = off.sum(axis=1)
    best = (float("inf"), (), 0)
    for v in range(g.n):
        b = int(deg_off[v])
        if b < best[0]:
            best = (float(b), (v,), b)
    half = g.n // 2
    for _ in range(k):
        size = int(rng.integers(1, half + 1))
        S = np.sort(rng.choice(g.n, size=size, replace=False))
        b = boundary_size(A, S)
        if b / size < best[0]:
            best = (b / size, tuple(int(x) for x in S), b)
    return CutReport(best[0], best[1], best[2], False)


def boundary_size(A: np.ndarray, S: Iterable[int]) -> int:
    mask = np.zeros(A.shape[0], dtype=bool)
    mask[list(S)] = True
    return int(A[np.ix_(mask, ~mask)].sum())


# families

def build_family(h: RotationGraph, m: int, cap_slots: int = DEFAULT_SLOT_CAP) -> list[RotationGraph]:
    """[G_1, ..., G_m] with G_1 = H^2 and G_k = G_{k-1}^2 zigzag H."""
    D = h.degree
    if D < 2 or h.n != D ** 4:
        raise ValueError(f"base graph must be D-regular on D^4 vertices (D={D}, n={h.n})")
    if m < 1:
        raise ValueError("m must be positive")
    # the largest intermediate is G_{m-1}^2 with D^{4(m-1)} * D^4 slots
    need = max(D ** (4 * m) * D ** 2, D ** (4 * (m - 1)) * D ** 4)
    if need > cap_slots:
        raise CapExceeded(f"family up to m={m} needs {need} slots > cap {cap_slots}")
    _require_valid(h)
    fam = [square(h)]
    for _ in range(1, m):
        fam.append(zigzag(square(fam[-1]), h))
    return fam


def random_regular_base(D: int, seed: int, trials: int = 64) -> tuple[RotationGraph, float]:
    """Best of ``trials`` seeded random D-regular graphs on D^4 vertices,
    ranked by lambda. Returns the graph and its lambda."""
    if D < 2:
        raise ValueError("D must be at least 2")
    if (D * D ** 4) % 2:
        raise ValueError("D * D^4 must be even")
    rng = np.random.default_rng(seed)
    best, best_lam = None, float("inf")
    for _ in range(max(1, trials)):
        g = random_rotation(D ** 4, D, rng)
        lam = spectrum(g).lam
        if lam < best_lam:
            best, best_lam = g, lam
    return best, best_lam


# isomorphism

def port_isomorphic(g: RotationGraph, h: RotationGraph) -> dict | None:
    """Port-preserving isomorphism (v -> phi(v) with rot commuting), or None.

    Each connected component is pinned by its first vertex; the rest of the
    map is forced by following ports.
    """
    if g.n != h.n or g.degree != h.degree:
        return None
    D = g.degree
    gt, ht = g.table, h.table
    phi = np.full(g.n, -1, dtype=np.int64)
    used = np.zeros(h.n, dtype=bool)
    for start in range(g.n):
        if phi[start] >= 0:
            continue
        for cand in range(h.n):
            if used[cand]:
                continue
            trial = _follow(gt, ht, D, start, cand, phi, used)
            if trial is not None:
                for v, w in trial:
                    phi[v] = w
                    used[w] = True
                break
        else:
            return None
    return {int(v): int(phi[v]) for v in range(g.n)}


def _follow(gt, ht, D, start, cand, phi, used):
    local = {start: cand}
    taken = {cand}
    stack = [start]
    while stack:
        v = stack.pop()
        w = local[v]
        for i in range(D):
            a = int(gt[v * D + i])
            b = int(ht[w * D + i])
            if a % D != b % D:
                return None
            va, wb = a // D, b // D
            if va in local:
                if local[va] != wb:
                    return None
            else:
                if phi[va] >= 0 or used[wb] or wb in taken:
                    return None
                local[va] = wb
                taken.add(wb)
                stack.append(va)
    return list(local.items())


def multigraph_isomorphic(g: RotationGraph, h: RotationGraph, limit: int = 9) -> bool:
    """Isomorphism of the underlying multigraphs, ports ignored (brute force)."""
    if g.n != h.n or g.degree != h.degree:
        return False
    if g.n > limit:
        raise ValueError(f"brute-force isomorphism limited to n <= {limit}")
    A, B = g.adjacency(), h.adjacency()
    if sorted(np.diag(A)) != sorted(np.diag(B)):
        return False
    for p in itertools.permutations(range(g.n)):
        p = np.asarray(p)
        if np.array_equal(A[np.ix_(p, p)], B):
            return True
    return False


def components(g: RotationGraph) -> list[np.ndarray]:
    from scipy.sparse.csgraph import connected_components

    k, lab = connected_components(g.sparse_adjacency(), directed=False)
    return [np.flatnonzero(lab == c) for c in range(k)]


def induced(g: RotationGraph, vertices: Sequence[int]) -> RotationGraph:
    """Restriction to a union of components (ports kept)."""
    vs = np.asarray(vertices, dtype=np.int64)
    index = np.full(g.n, -1, dtype=np.int64)
    index[vs] = np.arange(vs.size)
    D = g.degree
    slots = (vs[:, None] * D + np.arange(D)).reshape(-1)
    tgt = g.table[slots]
    tv = index[tgt // D]
    if (tv < 0).any():
        raise ValueError("vertex set is not closed under rot")
    return RotationGraph(vs.size, D, tv * D + tgt % D)


# text format

def dumps(g: RotationGraph) -> str:
    lines = [f"rotgraph {g.n} {g.degree}"]
    D = g.degree
    for s, t in enumerate(g.table.tolist()):
        lines.append(f"{s // D} {s % D} {t // D} {t % D}")
    return "\n".join(lines) + "\n"


def loads(text: str) -> RotationGraph:
    rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not rows:
        raise RotationError("empty input: missing 'rotgraph n D' header")
    head = rows[0]
    if len(head) != 3 or head[0] != "rotgraph":
        raise RotationError(f"bad header {' '.join(head)!r}")
    try:
        n, D = int(head[1]), int(head[2])
    except ValueError as exc:
        raise RotationError(f"bad header {' '.join(head)!r}") from exc
    t = np.full(n * D, -1, dtype=np.int64)
    for lineno, r in enumerate(rows[1:], start=2):
        if len(r) != 4:
            raise RotationError(f"line {lineno}: expected 4 integers")
        try:
            v, i, w, j = map(int, r)
        except ValueError as exc:
            raise RotationError(f"line {lineno}: expected 4 integers") from exc
        if not (0 <= v < n and 0 <= i < D and 0 <= w < n and 0 <= j < D):
            raise RotationError(f"line {lineno}: index out of range")
        if t[v * D + i] >= 0:
            raise RotationError(f"line {lineno}: duplicate entry for ({v},{i})")
        t[v * D + i] = w * D + j
    missing = np.flatnonzero(t < 0)
    if missing.size:
        v, i = divmod(int(missing[0]), D)
        raise RotationError(f"missing entry for ({v},{i})")
    return RotationGraph(n, D, t)


def load(path) -> RotationGraph:
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())


def save(g: RotationGraph, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(g))
