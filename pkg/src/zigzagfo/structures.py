"""Finite relational structures, the parameterised tree-of-expanders signature,
and the canonical model builder."""
from __future__ import annotations

import itertools
import re
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import rotgraph as rg
from .simplegraph import SimpleGraph

DEFAULT_TUPLE_CAP = 1_000_000
EXACT_DISTANCE_LIMIT = 8


class StructureError(ValueError):
    pass


class Signature:
    """Ordered relation symbols with arities. ``param`` is D for the
    tree-of-expanders signature, otherwise None."""

    __slots__ = ("symbols", "index", "param")

    def __init__(self, symbols: Sequence[tuple[str, int]], param: int | None = None):
        self.symbols = tuple((str(s), int(a)) for s, a in symbols)
        self.index = {s: i for i, (s, _) in enumerate(self.symbols)}
        if len(self.index) != len(self.symbols):
            raise StructureError("duplicate symbol names")
        self.param = param

    @property
    def names(self) -> list[str]:
        return [s for s, _ in self.symbols]

    def arity(self, name: str) -> int:
        try:
            return self.symbols[self.index[name]][1]
        except KeyError:
            raise StructureError(f"unknown symbol {name!r}") from None

    def __contains__(self, name):
        return name in self.index

    def __len__(self):
        return len(self.symbols)

    def __eq__(self, other):
        return isinstance(other, Signature) and self.symbols == other.symbols

    def __hash__(self):
        return hash(self.symbols)

    def __repr__(self):
        if self.param is not None:
            return f"Signature(D={self.param}, {len(self)} symbols)"
        return f"Signature({', '.join(f'{s}/{a}' for s, a in self.symbols)})"


def _digits(x: int, D: int, width: int) -> list[int]:
    out = []
    for _ in range(width):
        x, r = divmod(x, D)
        out.append(r)
    return out[::-1]


def e_name(i: int, j: int, D: int) -> str:
    """Name of E_{i,j} for flattened ports ``i, j`` in [D^2]."""
    return "E[" + ",".join(map(str, _digits(i, D, 2) + _digits(j, D, 2))) + "]"


def f_name(k: int, D: int) -> str:
    return "F[" + ",".join(map(str, _digits(k, D, 4))) + "]"


def l_name(k: int, D: int) -> str:
    return "L[" + ",".join(map(str, _digits(k, D, 4))) + "]"


_INDEXED = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)(?:\[([0-9,\s]*)\])?$")


def parse_symbol(name: str) -> tuple[str, tuple[int, ...]]:
    m = _INDEXED.match(name)
    if not m:
        raise StructureError(f"bad symbol name {name!r}")
    idx = tuple(int(x) for x in m.group(2).split(",")) if m.group(2) else ()
    return m.group(1), idx


def signature_for(D: int) -> Signature:
    if D < 2:
        raise StructureError("D must be at least 2")
    D2, D4 = D * D, D ** 4
    syms = [(e_name(i, j, D), 2) for i in range(D2) for j in range(D2)]
    syms += [(f_name(k, D), 2) for k in range(D4)]
    syms.append(("R", 2))
    syms += [(l_name(k, D), 2) for k in range(D4)]
    return Signature(syms, param=D)


def simple_signature(*names: str, arity: int = 2) -> Signature:
    return Signature([(n, arity) for n in names])


class Structure:
    """Universe ``0..n-1`` plus a set of tuples per symbol. Treat as immutable."""

    __slots__ = ("sig", "n", "rels", "_arrays", "_deg")

    def __init__(self, sig: Signature, n: int, rels: Mapping[str, Iterable[tuple]] | None = None, check: bool = True):
        self.sig = sig
        self.n = int(n)
        out = {}
        rels = rels or {}
        for name, tuples in rels.items():
            ar = sig.arity(name)
            ts = frozenset(tuple(int(x) for x in t) for t in tuples)
            if check:
                for t in ts:
                    if len(t) != ar:
                        raise StructureError(f"{name}: tuple {t} has wrong arity")
                    if any(x < 0 or x >= self.n for x in t):
                        raise StructureError(f"{name}: tuple {t} out of range for n={self.n}")
            if ts:
                out[name] = ts
        self.rels = out
        self._arrays = None
        self._deg = None

    def tuples(self, name: str) -> frozenset:
        if name not in self.sig:
            raise StructureError(f"unknown symbol {name!r}")
        return self.rels.get(name, frozenset())

    def holds(self, name: str, *elems: int) -> bool:
        return tuple(elems) in self.rels.get(name, ())

    def arrays(self) -> dict[str, np.ndarray]:
        """Sorted (m, arity) int64 arrays per non-empty symbol."""
        if self._arrays is None:
            arr = {}
            for name, ts in self.rels.items():
                a = np.array(sorted(ts), dtype=np.int64).reshape(len(ts), self.sig.arity(name))
                a.setflags(write=False)
                arr[name] = a
            self._arrays = arr
        return self._arrays

    @property
    def tuple_count(self) -> int:
        return sum(len(t) for t in self.rels.values())

    def degrees(self) -> np.ndarray:
        """Number of tuples containing each element (each tuple once)."""
        if self._deg is None:
            deg = np.zeros(self.n, dtype=np.int64)
            for a in self.arrays().values():
                if a.shape[1] == 0:
                    continue
                srt = np.sort(a, axis=1)
                first = np.ones(srt.shape, dtype=bool)
                first[:, 1:] = srt[:, 1:] != srt[:, :-1]
                np.add.at(deg, srt[first], 1)
            deg.setflags(write=False)
            self._deg = deg
        return self._deg

    def degree(self, a: int) -> int:
        return int(self.degrees()[a])

    def max_degree(self) -> int:
        return int(self.degrees().max()) if self.n else 0

    def replace(self, rels: Mapping[str, Iterable[tuple]] | None = None, n: int | None = None) -> "Structure":
        new = dict(self.rels)
        if rels:
            new.update(rels)
        return Structure(self.sig, self.n if n is None else n, new)

    def add(self, name: str, t: tuple) -> "Structure":
        return self.replace({name: self.tuples(name) | {tuple(t)}})

    def remove(self, name: str, t: tuple) -> "Structure":
        return self.replace({name: self.tuples(name) - {tuple(t)}})

    def __eq__(self, other):
        return isinstance(other, Structure) and self.sig == other.sig and self.n == other.n and self.rels == other.rels

    def __hash__(self):
        return hash((self.sig, self.n, frozenset(self.rels.items())))

    def __repr__(self):
        return f"Structure(n={self.n}, tuples={self.tuple_count}, sig={self.sig!r})"


# text format

def dumps(a: Structure) -> str:
    lines = [f"structure {a.n}"]
    if a.sig.param is not None:
        lines.append(f"signature D {a.sig.param}")
    else:
        lines.append("signature " + " ".join(f"{s}/{ar}" for s, ar in a.sig.symbols))
    for name in a.sig.names:
        for t in sorted(a.rels.get(name, ())):
            lines.append(name + " " + " ".join(map(str, t)))
    return "\n".join(lines) + "\n"


def loads(text: str, sig: Signature | None = None) -> Structure:
    rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not rows or len(rows[0]) != 2 or rows[0][0] != "structure":
        raise StructureError("missing 'structure n' header")
    try:
        n = int(rows[0][1])
    except ValueError:
        raise StructureError("bad universe size") from None
    body = rows[1:]
    if body and body[0][0] == "signature":
        spec = body[0][1:]
        body = body[1:]
        if len(spec) == 2 and spec[0] == "D":
            sig = signature_for(int(spec[1]))
        else:
            syms = []
            for tok in spec:
                name, _, ar = tok.rpartition("/")
                syms.append((name, int(ar)))
            sig = Signature(syms)
    if sig is None:
        raise StructureError("no signature given")
    rels: dict[str, set] = {}
    for lineno, r in enumerate(body, start=2):
        name = r[0]
        if name not in sig:
            raise StructureError(f"line {lineno}: unknown symbol {name!r}")
        try:
            t = tuple(int(x) for x in r[1:])
        except ValueError:
            raise StructureError(f"line {lineno}: non-integer element") from None
        if len(t) != sig.arity(name):
            raise StructureError(f"line {lineno}: {name} expects {sig.arity(name)} elements")
        rels.setdefault(name, set()).add(t)
    return Structure(sig, n, rels)


def load(path, sig: Signature | None = None) -> Structure:
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read(), sig)


def save(a: Structure, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(a))


# the canonical model

def level_offsets(D: int, depth: int) -> list[int]:
    offs, acc = [], 0
    for m in range(depth + 1):
        offs.append(acc)
        acc += D ** (4 * m)
    offs.append(acc)
    return offs


def model_size(D: int, depth: int) -> int:
    return sum(D ** (4 * m) for m in range(depth + 1))


def model_tuple_count(D: int, depth: int) -> int:
    inner = model_size(D, depth) - 1
    return D ** 4 + D * D * inner + inner + 1 + D ** 4 * D ** (4 * depth)


def build_model(h: rg.RotationGraph, depth: int, cap_tuples: int = DEFAULT_TUPLE_CAP,
                family: Sequence[rg.RotationGraph] | None = None) -> Structure:
    """The breadth-first-numbered model of depth ``depth`` over H.

    Level ``m`` element ``u = v*D^4 + k`` is the F_k-child of level ``m-1``
    element ``v``; its E-tuples encode G_m.
    """
    D = h.degree
    if D < 2 or h.n != D ** 4:
        raise StructureError(f"base graph must be D-regular on D^4 vertices (D={D}, n={h.n})")
    if depth < 1:
        raise StructureError("depth must be at least 1")
    need = model_tuple_count(D, depth)
    if need > cap_tuples:
        raise rg.CapExceeded(f"model needs {need} tuples > cap {cap_tuples}")
    fam = list(family) if family is not None else rg.build_family(h, depth)
    sig = signature_for(D)
    D2, D4 = D * D, D ** 4
    offs = level_offsets(D, depth)
    rels: dict[str, set] = {}

    def put(name, src, dst):
        rels.setdefault(name, set()).update(zip(src.tolist(), dst.tolist()))

    root = 0
    rels["R"] = {(root, root)}
    for i in range(D2):
        for j in range(D2):
            rels[e_name(i, j, D)] = {(root, root)}
    for m in range(1, depth + 1):
        g = fam[m - 1]
        off = offs[m]
        slots = np.arange(g.n * D2, dtype=np.int64)
        u, i = slots // D2, slots % D2
        w, j = g.table // D2, g.table % D2
        ports = i * D2 + j
        for p in np.unique(ports).tolist():
            sel = ports == p
            put(e_name(p // D2, p % D2, D), off + u[sel], off + w[sel])
        child = np.arange(g.n, dtype=np.int64)
        parent = offs[m - 1] + child // D4
        k = child % D4
        for kk in range(D4):
            sel = k == kk
            put(f_name(kk, D), parent[sel], off + child[sel])
    leaves = np.arange(offs[depth], offs[depth + 1], dtype=np.int64)
    for kk in range(D4):
        put(l_name(kk, D), leaves, leaves)
    return Structure(sig, offs[depth + 1], rels, check=False)


def symbols_of_kind(sig: Signature, kind: str) -> list[str]:
    return [s for s in sig.names if parse_symbol(s)[0] == kind]


def restrict(a: Structure, keep: Iterable[str]) -> Structure:
    keep = list(keep)
    for s in keep:
        if s not in a.sig:
            raise StructureError(f"unknown symbol {s!r}")
    ks = set(keep)
    return Structure(a.sig, a.n, {s: t for s, t in a.rels.items() if s in ks}, check=False)


def induced_substructure(a: Structure, elems: Sequence[int]) -> Structure:
    """Substructure induced on ``elems``, renumbered in the given order."""
    pos = {x: i for i, x in enumerate(elems)}
    rels = {}
    for s, ts in a.rels.items():
        kept = {tuple(pos[x] for x in t) for t in ts if all(x in pos for x in t)}
        if kept:
            rels[s] = kept
    return Structure(a.sig, len(elems), rels, check=False)


def disjoint_union(parts: Sequence[Structure], pad: int = 0) -> Structure:
    sig = parts[0].sig
    rels: dict[str, set] = {}
    off = 0
    for p in parts:
        if p.sig != sig:
            raise StructureError("signatures differ")
        for s, ts in p.rels.items():
            rels.setdefault(s, set()).update(tuple(x + off for x in t) for t in ts)
        off += p.n
    return Structure(sig, off + pad, rels, check=False)


def gaifman(a: Structure) -> SimpleGraph:
    pairs = set()
    for arr in a.arrays().values():
        ar = arr.shape[1]
        for p in range(ar):
            for q in range(p + 1, ar):
                x, y = arr[:, p], arr[:, q]
                sel = x != y
                lo = np.minimum(x[sel], y[sel])
                hi = np.maximum(x[sel], y[sel])
                pairs.update(zip(lo.tolist(), hi.tolist()))
    if not pairs:
        return SimpleGraph.from_unique_pairs(a.n, np.zeros(0, np.int64), np.zeros(0, np.int64))
    e = np.array(sorted(pairs), dtype=np.int64)
    return SimpleGraph.from_unique_pairs(a.n, e[:, 0], e[:, 1])


def _require_param(a: Structure) -> int:
    if a.sig.param is None:
        raise StructureError("structure is not over a tree-of-expanders signature")
    return a.sig.param


def f_children(a: Structure) -> dict[int, dict[int, list[int]]]:
    """parent -> {k: [children]}"""
    D = _require_param(a)
    out: dict[int, dict[int, list[int]]] = {}
    for k in range(D ** 4):
        for x, y in a.rels.get(f_name(k, D), ()):
            out.setdefault(x, {}).setdefault(k, []).append(y)
    return out


def tree_levels(a: Structure) -> np.ndarray:
    """BFS depth in the F-graph from the unique F-root; -1 if unreachable.

    Raises if the root is not unique.
    """
    D = _require_param(a)
    has_parent = np.zeros(a.n, dtype=bool)
    kids: list[list[int]] = [[] for _ in range(a.n)]
    for k in range(D ** 4):
        for x, y in a.rels.get(f_name(k, D), ()):
            has_parent[y] = True
            kids[x].append(y)
    roots = np.flatnonzero(~has_parent)
    if roots.size != 1:
        raise StructureError(f"expected exactly one F-root, found {roots.size}")
    lev = np.full(a.n, -1, dtype=np.int64)
    lev[roots[0]] = 0
    q = deque([int(roots[0])])
    while q:
        v = q.popleft()
        for w in kids[v]:
            if lev[w] < 0:
                lev[w] = lev[v] + 1
                q.append(w)
    return lev


def e_rotation(a: Structure, elems: Sequence[int]) -> rg.RotationGraph:
    """Rotation graph encoded by E on ``elems`` (renumbered in order)."""
    D = _require_param(a)
    D2 = D * D
    pos = {x: i for i, x in enumerate(elems)}
    t = np.full(len(elems) * D2, -1, dtype=np.int64)
    for i in range(D2):
        for j in range(D2):
            for x, y in a.rels.get(e_name(i, j, D), ()):
                if x in pos:
                    if y not in pos:
                        raise StructureError(f"E-tuple ({x},{y}) leaves the element set")
                    s = pos[x] * D2 + i
                    if t[s] >= 0:
                        raise StructureError(f"element {x} has two E-tuples on port {i}")
                    t[s] = pos[y] * D2 + j
    missing = np.flatnonzero(t < 0)
    if missing.size:
        x = elems[int(missing[0]) // D2]
        raise StructureError(f"element {x} has no E-tuple on port {int(missing[0]) % D2}")
    return rg.RotationGraph(len(elems), D2, t)


def underlying_graph(a: Structure) -> rg.RotationGraph:
    """Rotation graph with ports 0, then 1+k (k in [D^4]), then 1+D^4+i
    (i in [D^2]). A port with an E-self-loop E_{i,i}(v,v) is a fixed point,
    which also settles the root where every E_{i,j}(v,v) holds."""
    D = _require_param(a)
    D2, D4 = D * D, D ** 4
    P = 1 + D4 + D2
    t = np.full(a.n * P, -1, dtype=np.int64)

    def setp(v, port, w, wport):
        s = v * P + port
        if t[s] >= 0 and t[s] != w * P + wport:
            raise StructureError(f"element {v}: port {port} is ambiguous")
        t[s] = w * P + wport

    for v, w in a.rels.get("R", ()):
        if v != w:
            raise StructureError(f"R-tuple ({v},{w}) is not a self-loop")
        setp(v, 0, v, 0)
    for k in range(D4):
        for x, y in a.rels.get(f_name(k, D), ()):
            setp(y, 0, x, 1 + k)
            setp(x, 1 + k, y, 0)
        for x, y in a.rels.get(l_name(k, D), ()):
            if x != y:
                raise StructureError(f"L-tuple ({x},{y}) is not a self-loop")
            setp(x, 1 + k, x, 1 + k)
    loops = {}
    for i in range(D2):
        loops[i] = {x for x, y in a.rels.get(e_name(i, i, D), ()) if x == y}
    for i in range(D2):
        for j in range(D2):
            for x, y in a.rels.get(e_name(i, j, D), ()):
                if x in loops[i]:
                    setp(x, 1 + D4 + i, x, 1 + D4 + i)
                else:
                    setp(x, 1 + D4 + i, y, 1 + D4 + j)
    missing = np.flatnonzero(t < 0)
    if missing.size:
        v, port = divmod(int(missing[0]), P)
        raise StructureError(f"element {v}: port {port} has no edge")
    g = rg.RotationGraph(a.n, P, t, check=False)
    bad = rg.validate(g)
    if bad is not None:
        raise StructureError(f"underlying rotation map is not self-inverse: {bad}")
    return g


@dataclass
class ModelReport:
    depth: int
    sizes: list[int]
    level_iso: list[bool]
    tree_ok: bool
    degree_ok: bool
    degree_target: int
    degree_histogram: dict[int, int] = field(default_factory=dict)
    degree_deviations: dict[str, dict[int, int]] = field(default_factory=dict)
    size_ok: bool = True

    def as_dict(self) -> dict:
        return {
            "depth": self.depth,
            "sizes": self.sizes,
            "size_ok": self.size_ok,
            "level_iso": self.level_iso,
            "tree_ok": self.tree_ok,
            "degree_ok": self.degree_ok,
            "degree_target": self.degree_target,
            "degree_histogram": {str(k): v for k, v in sorted(self.degree_histogram.items())},
            "degree_deviations": {k: {str(a): b for a, b in v.items()} for k, v in self.degree_deviations.items()},
        }


def model_report(a: Structure, family: Sequence[rg.RotationGraph]) -> ModelReport:
    """Tree shape, level sizes, per-level port-isomorphism with the family
    and the degree law 2D^2 + D^4 + 1."""
    D = _require_param(a)
    D4 = D ** 4
    target = 2 * D * D + D4 + 1
    try:
        lev = tree_levels(a)
    except StructureError:
        lev = None
    tree_ok = lev is not None and bool((lev >= 0).all())
    sizes: list[int] = []
    level_iso: list[bool] = []
    if tree_ok:
        depth = int(lev.max())
        sizes = [int((lev == m).sum()) for m in range(depth + 1)]
        kids = f_children(a)
        for x in range(a.n):
            ks = kids.get(x, {})
            if ks and (len(ks) != D4 or any(len(v) != 1 for v in ks.values())):
                tree_ok = False
                break
            if not ks and lev[x] != depth:
                tree_ok = False
                break
        for m in range(1, depth + 1):
            elems = np.flatnonzero(lev == m).tolist()
            try:
                g = e_rotation(a, elems)
            except (StructureError, rg.RotationError):
                level_iso.append(False)
                continue
            ok = m - 1 < len(family) and rg.port_isomorphic(g, family[m - 1]) is not None
            level_iso.append(bool(ok))
    else:
        depth = -1
    deg = a.degrees()
    vals, cnts = np.unique(deg, return_counts=True)
    hist = {int(v): int(c) for v, c in zip(vals, cnts)}
    deviations: dict[str, dict[int, int]] = {}
    if lev is not None and depth >= 0:
        for m in range(depth + 1):
            sel = deg[lev == m]
            bad = sel[sel != target]
            if bad.size:
                v2, c2 = np.unique(bad, return_counts=True)
                deviations[f"level{m}"] = {int(x): int(c) for x, c in zip(v2, c2)}
    size_ok = depth >= 0 and sizes == [D ** (4 * m) for m in range(depth + 1)]
    return ModelReport(depth, sizes, level_iso, tree_ok, not deviations and bool(deg.size), target,
                       hist, deviations, size_ok)


# distances

def edit_distance_exact(a: Structure, b: Structure, limit: int = EXACT_DISTANCE_LIMIT) -> int:
    """min over bijections A -> B of the total symmetric difference."""
    if a.n != b.n:
        raise StructureError("exact distance needs equal universe sizes")
    if a.n > limit:
        raise StructureError(f"exact distance limited to n <= {limit}")
    if a.sig != b.sig:
        raise StructureError("signatures differ")
    best = None
    names = sorted(set(a.rels) | set(b.rels))
    for perm in itertools.permutations(range(a.n)):
        tot = 0
        for s in names:
            mapped = {tuple(perm[x] for x in t) for t in a.rels.get(s, ())}
            tot += len(mapped ^ b.rels.get(s, frozenset()))
            if best is not None and tot >= best:
                break
        if best is None or tot < best:
            best = tot
            if best == 0:
                break
    return int(best or 0)


def cut_lower_bound(a: Structure, S: Iterable[int], ug: rg.RotationGraph | None = None) -> int:
    """|<S, complement>| in U(A): tuples crossing the cut must all be removed
    to reach a structure without tuples across it."""
    if ug is None:
        ug = underlying_graph(a)
    inside = np.zeros(a.n, dtype=bool)
    inside[list(S)] = True
    P = ug.degree
    src = np.repeat(np.arange(a.n), P)
    dst = ug.table // P
    return int((inside[src] & ~inside[dst]).sum())


def partition_cut(ug: rg.RotationGraph, labels: np.ndarray) -> int:
    """Number of U-edges whose endpoints carry different labels."""
    P = ug.degree
    src = np.repeat(np.arange(ug.n), P)
    dst = ug.table // P
    return int((labels[src] != labels[dst]).sum()) // 2


def edit_distance(a: Structure, b: Structure, mode: str = "exact", S: Iterable[int] | None = None) -> int:
    if mode == "exact":
        return edit_distance_exact(a, b)
    if mode == "cut_lower_bound":
        if S is None:
            raise StructureError("cut mode needs a vertex set")
        return cut_lower_bound(a, S)
    raise StructureError(f"unknown mode {mode!r}")
