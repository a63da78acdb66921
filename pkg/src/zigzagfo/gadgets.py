"""Translation between tree-of-expanders structures and simple graphs.

Every tuple (x, y) becomes an *arrow*: a path of ``ell + 1`` blocks where
all blocks are copies of the clique gadget G^d except one copy of the
two-sided gadget H^d, whose position along the path encodes the relation
symbol. Original vertices are exactly the vertices lying on no triangle
(for d >= 4; at d = 3 the H block is triangle-free, so detection breaks).
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import kernels
from .rotgraph import CapExceeded
from .simplegraph import SimpleGraph
from .structures import Signature, Structure, parse_symbol, signature_for

DEFAULT_VERTEX_CAP = 20_000_000


class GadgetError(ValueError):
    pass


class MalformedArrow(GadgetError):
    pass


class DanglingComponent(GadgetError):
    pass


class NotAModel(GadgetError):
    pass


def structure_degree(D: int) -> int:
    """Degree bound of the structure class: 2D^2 E-tuples, D^4 children or
    leaf loops, one parent or the root loop."""
    return 2 * D * D + D ** 4 + 1


def path_length(D: int) -> int:
    return 2 * (3 * D ** 4 + 1)


def arrow_size(d: int, ell: int) -> int:
    """Auxiliary vertices per arrow."""
    return ell * (d + 1) + 2 * d


def xi_bound(D: int, c: int | None = None, eps: float | None = None) -> float:
    """Edge-expansion constant of encoded models with per-arrow count ``c``
    (exact count by default) and base expansion ``eps`` (default D^2/12)."""
    d = structure_degree(D)
    c = arrow_size(d, path_length(D)) if c is None else c
    eps = D * D / 12 if eps is None else eps
    return min((2 * d * c - c - 1) / (2 * d * c * c),
               eps * (1 / (2 * d * c)) * (d * c - 2) / (2 + d * c),
               2 / (d * c * c))


# gadgets

def _g_edges(d: int, u: int) -> tuple[list[tuple[int, int]], int]:
    """Edges of G^d with u at local id ``u``, internals next, v last."""
    inner = list(range(u + 1, u + d))
    v = u + d
    e = [(u, w) for w in inner] + [(w, v) for w in inner]
    e += [(a, b) for i, a in enumerate(inner) for b in inner[i + 1:]]
    return e, v


def _h_edges(d: int, u: int) -> tuple[list[tuple[int, int]], int]:
    a, b = (d - 1) // 2, d - 1 - (d - 1) // 2
    ui = list(range(u + 1, u + 1 + a))
    uj = list(range(u + 1 + a, u + 1 + a + b))
    vi = list(range(u + 1 + a + b, u + 1 + 2 * a + b))
    vj = list(range(u + 1 + 2 * a + b, u + 1 + 2 * a + 2 * b))
    v = u + 2 * d - 1
    e = [(u, w) for w in ui + uj] + [(w, v) for w in vi + vj]
    e += list(zip(ui, vi)) + list(zip(uj, vj))
    for grp in (ui, uj, vi, vj):
        e += [(x, y) for i, x in enumerate(grp) for y in grp[i + 1:]]
    e += [(x, y) for x in ui for y in vj] + [(y, x) for x in vi for y in uj]
    return e, v


def _check_d(d: int) -> None:
    if d < 3:
        raise GadgetError("gadget degree must be at least 3")


def g_gadget(d: int) -> tuple[SimpleGraph, int, int]:
    _check_d(d)
    e, v = _g_edges(d, 0)
    return SimpleGraph.from_edges(d + 1, e), 0, v


def h_gadget(d: int) -> tuple[SimpleGraph, int, int]:
    _check_d(d)
    e, v = _h_edges(d, 0)
    return SimpleGraph.from_edges(2 * d, e), 0, v


def _path_edges(d: int, ell: int, p: int) -> tuple[list[tuple[int, int]], int]:
    edges: list[tuple[int, int]] = []
    u = 0
    prev_v = None
    for blk in range(ell + 1):
        e, v = (_h_edges if blk == p else _g_edges)(d, u)
        edges += e
        if prev_v is not None:
            edges.append((prev_v, u))
        prev_v = v
        u = v + 1
    return edges, u


def path_gadget(d: int, ell: int, p: int) -> tuple[SimpleGraph, int, int]:
    """The chained gadget with the H block at position ``p``; returns the
    graph and its two ends."""
    _check_d(d)
    if ell < 0 or not 0 <= p <= ell:
        raise GadgetError(f"need 0 <= p <= ell, got p={p}, ell={ell}")
    e, n = _path_edges(d, ell, p)
    return SimpleGraph.from_edges(n, e), 0, n - 1


# arrow codes

@dataclass(frozen=True)
class ArrowSpec:
    symbol: str
    p: int
    x: int
    y: int

    @property
    def kind(self) -> str:
        return parse_symbol(self.symbol)[0]


def arrow_position(symbol: str, D: int) -> int:
    kind, idx = parse_symbol(symbol)
    if kind == "R":
        return 3 * D ** 4
    base = {"E": 0, "F": D ** 4, "L": 2 * D ** 4}.get(kind)
    if base is None or len(idx) != 4 or any(not 0 <= i < D for i in idx):
        raise GadgetError(f"no arrow code for symbol {symbol!r}")
    return base + sum(i * D ** k for k, i in enumerate(idx))


def arrow_symbol(p: int, D: int) -> str:
    D4 = D ** 4
    if p == 3 * D4:
        return "R"
    if not 0 <= p < 3 * D4:
        raise GadgetError(f"position {p} encodes no symbol")
    kind = "EFL"[p // D4]
    r = p % D4
    return f"{kind}[" + ",".join(str((r // D ** k) % D) for k in range(4)) + "]"


def arrows_of(a: Structure) -> list[ArrowSpec]:
    """Arrows in encoder order: symbol order, then tuples lexicographically."""
    D = a.sig.param
    if D is None:
        raise GadgetError("structure signature has no D parameter")
    out = []
    for name in a.sig.names:
        p = arrow_position(name, D)
        for x, y in sorted(a.rels.get(name, ())):
            out.append(ArrowSpec(name, p, x, y))
    return out


# encoding

@dataclass
class Encoding:
    graph: SimpleGraph
    n_original: int
    D: int
    d: int
    ell: int
    arrows: list[ArrowSpec]

    @property
    def size(self) -> int:
        return arrow_size(self.d, self.ell)

    def arrow_range(self, t: int) -> tuple[int, int]:
        lo = self.n_original + t * self.size
        return lo, lo + self.size

    def provenance(self) -> dict:
        return {
            "D": self.D,
            "d": self.d,
            "ell": self.ell,
            "arrow_size": self.size,
            "original_vertices": list(range(self.n_original)),
            "arrows": [
                {"symbol": s.symbol, "x": s.x, "y": s.y, "p": s.p, "first": self.arrow_range(t)[0]}
                for t, s in enumerate(self.arrows)
            ],
        }

    def save_provenance(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.provenance(), fh)


def _template(d: int, ell: int, p: int):
    """Flattened local CSR of one arrow with its H block at ``p``. Both end
    rows start with a placeholder slot for the external original neighbour,
    which is always smaller than any auxiliary id, so rows stay sorted after
    offsetting."""
    e, size = _path_edges(d, ell, p)
    rows = [[] for _ in range(size)]
    for a, b in e:
        rows[a].append(b)
        rows[b].append(a)
    rows = [sorted(r) for r in rows]
    rows[0] = [0] + rows[0]
    rows[-1] = [0] + rows[-1]
    lens = np.array([len(r) for r in rows], dtype=np.int64)
    flat = np.concatenate([np.asarray(r, dtype=np.int32) for r in rows])
    return flat, np.concatenate([[0], np.cumsum(lens)])


def encode(a: Structure, h=None, d: int | None = None, cap_vertices: int = DEFAULT_VERTEX_CAP) -> Encoding:
    """Encode ``a`` as a simple graph. When the base graph ``h`` is given the
    input is first checked to be a model of the tree-of-expanders sentence."""
    D = a.sig.param
    if D is None or a.sig != signature_for(D):
        raise GadgetError("structure must use the tree-of-expanders signature")
    if h is not None:
        from .folagic import check_zigzag
        res = check_zigzag(a, h)
        if not res.ok:
            raise NotAModel(f"input is not a model ({res.part}: {res.witness})")
    d = structure_degree(D) if d is None else d
    _check_d(d)
    ell = path_length(D)
    arrows = arrows_of(a)
    size = arrow_size(d, ell)
    n, T = a.n, len(arrows)
    total = n + T * size
    if total > cap_vertices:
        raise CapExceeded(f"encoding needs {total} vertices > cap {cap_vertices}")
    if total >= 2 ** 31:
        raise CapExceeded("vertex ids exceed 32 bits")

    xs = np.array([s.x for s in arrows], dtype=np.int64)
    ys = np.array([s.y for s in arrows], dtype=np.int64)
    first = n + np.arange(T, dtype=np.int64) * size
    # original rows: u0 of outgoing arrows, v_ell of incoming ones
    own = np.concatenate([xs, ys])
    nb = np.concatenate([first, first + size - 1])
    order = np.lexsort((nb, own))
    own, nb = own[order], nb[order]
    odeg = np.bincount(own, minlength=n)

    L = size * d  # every auxiliary vertex ends with degree d
    indptr = np.empty(total + 1, dtype=np.int64)
    indptr[0] = 0
    np.cumsum(odeg, out=indptr[1:n + 1])
    base = int(indptr[n])
    indices = np.empty(base + T * L, dtype=np.int32)
    indices[:base] = nb
    if T:
        ptr_rows = indptr[n + 1:].reshape(T, size)
        block = indices[base:].reshape(T, L)
        codes = np.array([s.p for s in arrows], dtype=np.int64)
        for p in np.unique(codes).tolist():
            ids = np.flatnonzero(codes == p)
            flat, ptr = _template(d, ell, p)
            ptr_rows[ids] = base + ids[:, None] * L + ptr[None, 1:]
            block[ids] = flat[None, :] + first[ids].astype(np.int32)[:, None]
        block[:, 0] = xs
        block[:, L - d] = ys
    g = SimpleGraph(total, indptr, indices)
    return Encoding(g, n, D, d, ell, arrows)


def original_vertices(g: SimpleGraph) -> np.ndarray:
    """Vertices that lie on no triangle."""
    return np.flatnonzero(kernels.triangle_free_mask(g.indptr, g.indices)).astype(np.int64)


# decoding

def _row_counts(g: SimpleGraph, flag: np.ndarray, rows: np.ndarray) -> np.ndarray:
    """For each vertex in ``rows``, the number of neighbours with flag set."""
    out = np.zeros(rows.size, dtype=np.int64)
    step = 1 << 20
    for s in range(0, rows.size, step):
        r = rows[s:s + step]
        starts, ends = g.indptr[r], g.indptr[r + 1]
        lens = ends - starts
        if lens.sum() == 0:
            continue
        pos = np.repeat(starts - np.concatenate([[0], np.cumsum(lens)[:-1]]), lens) + np.arange(lens.sum())
        vals = flag[g.indices[pos]].astype(np.int64)
        owner = np.repeat(np.arange(r.size), lens)
        out[s:s + step] = np.bincount(owner, weights=vals, minlength=r.size).astype(np.int64)
    return out


def _first_flagged_neighbor(g: SimpleGraph, flag: np.ndarray, rows: np.ndarray) -> np.ndarray:
    out = np.full(rows.size, -1, dtype=np.int64)
    for i, v in enumerate(rows.tolist()):
        nb = g.neighbors(v)
        hit = nb[flag[nb].astype(bool)]
        if hit.size:
            out[i] = hit[0]
    return out


def _cross_pairs(g: SimpleGraph, aux: np.ndarray, src: np.ndarray) -> np.ndarray:
    """Distinct (src[u], src[w]) pairs over auxiliary edges joining regions."""
    rows = np.flatnonzero(aux)
    found = []
    step = 1 << 20
    for s in range(0, rows.size, step):
        r = rows[s:s + step]
        lens = g.indptr[r + 1] - g.indptr[r]
        pos = np.repeat(g.indptr[r] - np.concatenate([[0], np.cumsum(lens)[:-1]]), lens) + np.arange(lens.sum())
        w = g.indices[pos].astype(np.int64)
        u = np.repeat(r, lens)
        keep = aux[w].astype(bool) & (src[u] != src[w]) & (src[u] >= 0) & (src[w] >= 0)
        if keep.any():
            found.append(np.stack([src[u[keep]], src[w[keep]]], axis=1))
    if not found:
        return np.zeros((0, 2), dtype=np.int64)
    return np.unique(np.concatenate(found), axis=0)


def _signature_table(d: int, ell: int) -> tuple[dict, int]:
    """Layer profile of the template from its first end, per H position."""
    width = 3 * (ell + 1) + 2
    table = {}
    for q in range(ell + 1):
        g, s, _ = path_gadget(d, ell, q)
        allowed = np.ones(g.n, dtype=np.uint8)
        dist, _ = kernels.masked_bfs(g.indptr, g.indices, allowed, np.array([s], dtype=np.int64))
        comp = np.zeros(g.n, dtype=np.int64)
        intra, fwd, odd = kernels.layer_edge_counts(g.indptr, g.indices, comp, dist, 1, width)
        sizes = np.bincount(dist, minlength=width)
        table[_profile_key(sizes, intra[0], fwd[0])] = q
    return table, width


def _profile_key(sizes, intra, fwd) -> bytes:
    return np.concatenate([sizes, intra, fwd]).astype(np.int64).tobytes()


def decode(g: SimpleGraph, D: int | None = None) -> Structure:
    """Recover the structure from an encoded graph (original vertices in
    increasing id order become elements 0, 1, ...)."""
    orig = kernels.triangle_free_mask(g.indptr, g.indices)
    aux = (1 - orig).astype(np.uint8)
    aux_ids = np.flatnonzero(aux)
    orig_ids = np.flatnonzero(orig)
    rank = np.full(g.n, -1, dtype=np.int64)
    rank[orig_ids] = np.arange(orig_ids.size)
    deg = g.degrees()
    if D is None:
        if aux_ids.size == 0:
            D = 2
        else:
            dd = int(deg[aux_ids[0]])
            D = next((k for k in range(2, 8) if structure_degree(k) == dd), None)
            if D is None:
                raise MalformedArrow(f"auxiliary degree {dd} matches no gadget degree")
    d, ell = structure_degree(D), path_length(D)
    size = arrow_size(d, ell)
    sig = signature_for(D)
    if aux_ids.size == 0:
        return Structure(sig, orig_ids.size, {})

    onb = _row_counts(g, orig, aux_ids)
    if (onb > 1).any():
        v = int(aux_ids[np.flatnonzero(onb > 1)[0]])
        raise MalformedArrow(f"auxiliary vertex {v} touches {int(onb[onb > 1][0])} original vertices")
    ends = aux_ids[onb == 1]
    end_orig = _first_flagged_neighbor(g, orig, ends)

    dist, src = kernels.masked_bfs(g.indptr, g.indices, aux, ends)
    unreached = aux_ids[dist[aux_ids] < 0]
    if unreached.size:
        raise DanglingComponent(f"auxiliary component containing vertex {int(unreached[0])} has no end")

    pairs = _cross_pairs(g, aux, src)
    partner = np.full(ends.size, -1, dtype=np.int64)
    for a_, b_ in pairs.tolist():
        if partner[a_] not in (-1, b_):
            raise MalformedArrow(_where(ends, end_orig, a_, "more than two ends"))
        partner[a_] = b_
    lonely = np.flatnonzero(partner < 0)
    if lonely.size:
        raise MalformedArrow(_where(ends, end_orig, int(lonely[0]), "only one end"))
    starts = np.flatnonzero(np.arange(ends.size) < partner)
    comp_start = ends[starts]
    comp_other = ends[partner[starts]]

    dist, comp = kernels.masked_bfs(g.indptr, g.indices, aux, comp_start)
    ncomp = starts.size
    counts = np.bincount(comp[aux_ids], minlength=ncomp)
    bad_deg = aux_ids[deg[aux_ids] != d]
    if bad_deg.size:
        c = int(comp[bad_deg[0]])
        raise MalformedArrow(_arrow_where(comp_start, comp_other, rank, g, orig, c,
                                          f"vertex {int(bad_deg[0])} has degree {int(deg[bad_deg[0]])}, expected {d}"))
    wrong = np.flatnonzero(counts != size)
    if wrong.size:
        c = int(wrong[0])
        raise MalformedArrow(_arrow_where(comp_start, comp_other, rank, g, orig, c,
                                          f"{int(counts[c])} vertices, expected {size}"))

    table, width = _signature_table(d, ell)
    comp_aux = np.full(g.n, -1, dtype=np.int64)
    comp_aux[aux_ids] = comp[aux_ids]
    if dist[aux_ids].max() >= width:
        c = int(comp[aux_ids[np.argmax(dist[aux_ids])]])
        raise MalformedArrow(_arrow_where(comp_start, comp_other, rank, g, orig, c, "path too long"))
    intra, fwd, odd = kernels.layer_edge_counts(g.indptr, g.indices, comp_aux, dist, ncomp, width)
    sizes = np.bincount(comp[aux_ids] * width + dist[aux_ids], minlength=ncomp * width).reshape(ncomp, width)
    D4 = D ** 4
    rels: dict[str, set] = {}
    for c in range(ncomp):
        q = table.get(_profile_key(sizes[c], intra[c], fwd[c]))
        if q is None:
            raise MalformedArrow(_arrow_where(comp_start, comp_other, rank, g, orig, c, "does not match any arrow template"))
        s_orig = int(rank[_orig_of(g, orig, int(comp_start[c]))])
        t_orig = int(rank[_orig_of(g, orig, int(comp_other[c]))])
        if q <= 3 * D4:
            p, x, y = q, s_orig, t_orig
        elif ell - q <= 3 * D4 and ell - q != q:
            p, x, y = ell - q, t_orig, s_orig
        else:
            raise MalformedArrow(_arrow_where(comp_start, comp_other, rank, g, orig, c, "H block has no direction"))
        rels.setdefault(arrow_symbol(p, D), set()).add((x, y))
    if odd:
        raise MalformedArrow(f"{odd} auxiliary edges join different arrows or skip layers")
    return Structure(sig, orig_ids.size, rels)


def _orig_of(g: SimpleGraph, orig: np.ndarray, v: int) -> int:
    nb = g.neighbors(v)
    return int(nb[orig[nb].astype(bool)][0])


def _where(ends, end_orig, i, why) -> str:
    return f"malformed arrow at end vertex {int(ends[i])} (original neighbour {int(end_orig[i])}): {why}"


def _arrow_where(starts, others, rank, g, orig, c, why) -> str:
    x = _orig_of(g, orig, int(starts[c]))
    y = _orig_of(g, orig, int(others[c]))
    return f"malformed arrow between original vertices {x} and {y}: {why}"


# expansion spot checks

def boundary_size(g: SimpleGraph, inside: np.ndarray) -> int:
    """Number of edges with exactly one end in ``inside`` (bool mask)."""
    inside = inside.astype(bool)
    rows = np.flatnonzero(inside)
    total = 0
    step = 1 << 20
    for s in range(0, rows.size, step):
        r = rows[s:s + step]
        lens = g.indptr[r + 1] - g.indptr[r]
        if lens.sum() == 0:
            continue
        pos = np.repeat(g.indptr[r] - np.concatenate([[0], np.cumsum(lens)[:-1]]), lens) + np.arange(lens.sum())
        total += int((~inside[g.indices[pos]]).sum())
    return total


def arrow_mask(enc: Encoding, arrow_ids: Sequence[int], originals: Sequence[int] = ()) -> np.ndarray:
    m = np.zeros(enc.graph.n, dtype=bool)
    for t in arrow_ids:
        lo, hi = enc.arrow_range(int(t))
        m[lo:hi] = True
    m[np.asarray(list(originals), dtype=np.int64)] = True
    return m


def structured_cuts(enc: Encoding, seed: int = 0, random_cuts: int = 4) -> dict[str, np.ndarray]:
    """Vertex sets for the expansion spot check: level prefixes of the tree
    with all arrows inside them, single arrows, half arrows and random
    unions of arrows."""
    rng = np.random.default_rng(seed)
    n = enc.n_original
    cuts: dict[str, np.ndarray] = {}
    from .structures import level_offsets, model_size
    depth = next((k for k in range(1, 6) if model_size(enc.D, k) == n), 0)
    offs = level_offsets(enc.D, depth) if depth else [0, n]
    for lvl in range(1, len(offs) - 1):
        hi = offs[lvl]
        ids = [t for t, s in enumerate(enc.arrows) if s.x < hi and s.y < hi]
        cuts[f"levels<{lvl}"] = arrow_mask(enc, ids, range(hi))
    cuts["one-arrow"] = arrow_mask(enc, [0])
    lo, _ = enc.arrow_range(len(enc.arrows) // 2)
    half = np.zeros(enc.graph.n, dtype=bool)
    half[lo:lo + enc.size // 2] = True
    cuts["half-arrow"] = half
    T = len(enc.arrows)
    for r in range(random_cuts):
        ids = rng.choice(T, size=max(1, T // 4), replace=False)
        origs = rng.choice(n, size=max(1, n // 4), replace=False)
        cuts[f"random-{r}"] = arrow_mask(enc, ids, origs)
    return {k: v for k, v in cuts.items() if 0 < v.sum() <= enc.graph.n // 2}
