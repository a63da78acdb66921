"""Simple undirected graphs in CSR form (sorted rows, no loops, no multi-edges)."""
from __future__ import annotations

from typing import Iterable

import numpy as np


class GraphFormatError(ValueError):
    pass


class SimpleGraph:
    __slots__ = ("n", "indptr", "indices")

    def __init__(self, n: int, indptr: np.ndarray, indices: np.ndarray):
        self.n = int(n)
        self.indptr = np.ascontiguousarray(indptr, dtype=np.int64)
        self.indices = np.ascontiguousarray(indices, dtype=np.int32)

    @classmethod
    def from_edges(cls, n: int, edges) -> "SimpleGraph":
        e = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges, dtype=np.int64)
        if e.size == 0:
            return cls(n, np.zeros(n + 1, dtype=np.int64), np.zeros(0, dtype=np.int32))
        e = e.reshape(-1, 2)
        if (e < 0).any() or (e >= n).any():
            raise GraphFormatError("edge endpoint out of range")
        if (e[:, 0] == e[:, 1]).any():
            raise GraphFormatError("self-loop in simple graph")
        lo, hi = np.minimum(e[:, 0], e[:, 1]), np.maximum(e[:, 0], e[:, 1])
        key = np.unique(lo * n + hi)
        if key.size != e.shape[0]:
            raise GraphFormatError("parallel edge in simple graph")
        return cls.from_unique_pairs(n, key // n, key % n)

    @classmethod
    def from_unique_pairs(cls, n: int, a: np.ndarray, b: np.ndarray) -> "SimpleGraph":
        """Build from distinct unordered pairs without re-checking them."""
        src = np.concatenate([a, b]).astype(np.int64)
        dst = np.concatenate([b, a]).astype(np.int64)
        order = np.lexsort((dst, src))
        src, dst = src[order], dst[order]
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
        return cls(n, indptr, dst.astype(np.int32))

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    @property
    def m(self) -> int:
        return int(self.indices.size // 2)

    def edges(self) -> np.ndarray:
        """(m, 2) array of edges with u < v, lexicographically sorted."""
        src = np.repeat(np.arange(self.n, dtype=np.int64), self.degrees())
        keep = src < self.indices
        return np.stack([src[keep], self.indices[keep].astype(np.int64)], axis=1)

    def has_edge(self, u: int, v: int) -> bool:
        row = self.neighbors(u)
        k = np.searchsorted(row, v)
        return bool(k < row.size and row[k] == v)

    def induced(self, vertices: Iterable[int]) -> "SimpleGraph":
        vs = np.asarray(sorted(set(int(v) for v in vertices)), dtype=np.int64)
        index = np.full(self.n, -1, dtype=np.int64)
        index[vs] = np.arange(vs.size)
        e = self.edges()
        keep = (index[e[:, 0]] >= 0) & (index[e[:, 1]] >= 0)
        e = index[e[keep]]
        return SimpleGraph.from_unique_pairs(vs.size, e[:, 0], e[:, 1])

    def __eq__(self, other):
        return (
            isinstance(other, SimpleGraph)
            and self.n == other.n
            and np.array_equal(self.indptr, other.indptr)
            and np.array_equal(self.indices, other.indices)
        )

    def __repr__(self):
        return f"SimpleGraph(n={self.n}, m={self.m})"


def disjoint_union(graphs) -> SimpleGraph:
    parts, off = [], 0
    for g in graphs:
        parts.append(g.edges() + off)
        off += g.n
    e = np.concatenate(parts) if parts else np.zeros((0, 2), dtype=np.int64)
    return SimpleGraph.from_unique_pairs(off, e[:, 0], e[:, 1])


def complete_graph(n: int) -> SimpleGraph:
    iu = np.triu_indices(n, 1)
    return SimpleGraph.from_unique_pairs(n, iu[0], iu[1])


def cycle_graph(n: int) -> SimpleGraph:
    v = np.arange(n)
    return SimpleGraph.from_edges(n, np.stack([v, (v + 1) % n], axis=1))


def dumps(g: SimpleGraph) -> str:
    lines = [f"graph {g.n}"]
    lines.extend(f"{u} {v}" for u, v in g.edges().tolist())
    return "\n".join(lines) + "\n"


def loads(text: str) -> SimpleGraph:
    rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not rows or len(rows[0]) != 2 or rows[0][0] != "graph":
        raise GraphFormatError("missing 'graph n' header")
    try:
        n = int(rows[0][1])
        e = np.array([[int(a), int(b)] for a, b in rows[1:]], dtype=np.int64).reshape(-1, 2)
    except ValueError as exc:
        raise GraphFormatError(str(exc)) from exc
    return SimpleGraph.from_edges(n, e)


def save(g: SimpleGraph, path) -> None:
    # stream in chunks; encoded graphs can have 10^8 edges
    e = g.edges()
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"graph {g.n}\n")
        step = 1_000_000
        for s in range(0, e.shape[0], step):
            np.savetxt(fh, e[s:s + step], fmt="%d")


def load(path) -> SimpleGraph:
    with open(path, encoding="utf-8") as fh:
        head = fh.readline().split()
        if len(head) != 2 or head[0] != "graph":
            raise GraphFormatError("missing 'graph n' header")
        n = int(head[1])
        e = np.loadtxt(fh, dtype=np.int64, ndmin=2)
    if e.size == 0:
        e = np.zeros((0, 2), dtype=np.int64)
    return SimpleGraph.from_edges(n, e)
