"""Exhaustive enumeration of tiny binary structures, up to isomorphism."""
from __future__ import annotations

import itertools
from functools import lru_cache
from typing import Iterator, Sequence

import numpy as np

from .structures import Signature, Structure

MAX_BITS = 20


def _check_binary(sig: Signature) -> None:
    if any(a != 2 for _, a in sig.symbols):
        raise ValueError("only binary signatures are supported")


def from_mask(sig: Signature, n: int, mask: int) -> Structure:
    rels = {}
    nn = n * n
    for r, (name, _) in enumerate(sig.symbols):
        ts = {(b // n, b % n) for b in range(nn) if (mask >> (r * nn + b)) & 1}
        if ts:
            rels[name] = ts
    return Structure(sig, n, rels, check=False)


def to_mask(a: Structure) -> int:
    n, nn = a.n, a.n * a.n
    mask = 0
    for r, (name, _) in enumerate(a.sig.symbols):
        for u, v in a.rels.get(name, ()):
            mask |= 1 << (r * nn + u * n + v)
    return mask


@lru_cache(maxsize=None)
def _perm_positions(n: int, s: int) -> np.ndarray:
    """(perms, bits) array: new bit position of each bit under each permutation."""
    perms = list(itertools.permutations(range(n)))
    nn = n * n
    out = np.empty((len(perms), s * nn), dtype=np.int64)
    for p, perm in enumerate(perms):
        for r in range(s):
            for u in range(n):
                for v in range(n):
                    out[p, r * nn + u * n + v] = r * nn + perm[u] * n + perm[v]
    return out


def _degrees(bits: np.ndarray, n: int, s: int) -> np.ndarray:
    """Per-element tuple counts for a (m, s*n*n) bit matrix."""
    nn = n * n
    deg = np.zeros((bits.shape[0], n), dtype=np.int64)
    for r in range(s):
        for u in range(n):
            for v in range(n):
                b = bits[:, r * nn + u * n + v]
                deg[:, u] += b
                if v != u:
                    deg[:, v] += b
    return deg


def canonical_masks(masks: np.ndarray, n: int, s: int) -> np.ndarray:
    B = s * n * n
    bits = ((masks[:, None] >> np.arange(B)) & 1).astype(np.int64)
    pos = _perm_positions(n, s)
    best = None
    for p in range(pos.shape[0]):
        val = (bits << pos[p]).sum(axis=1)
        best = val if best is None else np.minimum(best, val)
    return best


def canonical_key(a: Structure) -> tuple:
    _check_binary(a.sig)
    if a.n == 0:
        return (0, 0)
    c = canonical_masks(np.array([to_mask(a)], dtype=np.int64), a.n, len(a.sig))
    return (a.n, int(c[0]))


def iso_classes(n: int, sig: Signature, d: int | None = None) -> list[Structure]:
    """One representative per isomorphism class on ``n`` elements, optionally
    restricted to maximum degree ``d``."""
    _check_binary(sig)
    s = len(sig)
    B = s * n * n
    if B > MAX_BITS:
        raise ValueError(f"{B} bits exceeds the enumeration limit {MAX_BITS}")
    if n == 0:
        return [Structure(sig, 0, {})]
    masks = np.arange(1 << B, dtype=np.int64)
    if d is not None:
        bits = ((masks[:, None] >> np.arange(B)) & 1).astype(np.int64)
        keep = _degrees(bits, n, s).max(axis=1) <= d
        masks = masks[keep]
    canon = np.unique(canonical_masks(masks, n, s))
    return [from_mask(sig, n, int(m)) for m in canon]


def labelled_structures(n: int, sig: Signature, d: int | None = None) -> Iterator[Structure]:
    """Every structure on ``n`` labelled elements (bounded by ``d``)."""
    _check_binary(sig)
    s = len(sig)
    B = s * n * n
    if B > MAX_BITS:
        raise ValueError(f"{B} bits exceeds the enumeration limit {MAX_BITS}")
    masks = np.arange(1 << B, dtype=np.int64)
    if d is not None and n:
        bits = ((masks[:, None] >> np.arange(B)) & 1).astype(np.int64)
        masks = masks[_degrees(bits, n, s).max(axis=1) <= d]
    for m in masks.tolist():
        yield from_mask(sig, n, m)


def bounded_structures(n: int, sig: Signature, d: int) -> Iterator[Structure]:
    """Labelled structures on ``n`` elements with max degree ``d``, by
    depth-first search over candidate tuples (works beyond MAX_BITS)."""
    _check_binary(sig)
    cands = [(name, (u, v)) for name, _ in sig.symbols for u in range(n) for v in range(n)]
    deg = [0] * n
    chosen: list = []

    def rec(i):
        if i == len(cands):
            rels: dict = {}
            for name, t in chosen:
                rels.setdefault(name, set()).add(t)
            yield Structure(sig, n, rels, check=False)
            return
        yield from rec(i + 1)
        name, (u, v) = cands[i]
        touched = (u,) if u == v else (u, v)
        if all(deg[x] < d for x in touched):
            for x in touched:
                deg[x] += 1
            chosen.append(cands[i])
            yield from rec(i + 1)
            chosen.pop()
            for x in touched:
                deg[x] -= 1

    yield from rec(0)


def growth_patterns(length: int) -> list[tuple[int, ...]]:
    """Restricted growth strings: surjections onto 0..m-1 labelled by first
    appearance."""
    out = []

    def rec(prefix, top):
        if len(prefix) == length:
            out.append(tuple(prefix))
            return
        for v in range(top + 2):
            rec(prefix + [v], max(top, v))

    if length == 0:
        return [()]
    rec([0], 0)
    return out


def surjections(length: int, m: int) -> list[tuple[int, ...]]:
    return [p for p in itertools.product(range(m), repeat=length) if len(set(p)) == m]


def relabel(a: Structure, perm: Sequence[int]) -> Structure:
    """Image of ``a`` under element map ``x -> perm[x]``."""
    rels = {s: {tuple(perm[x] for x in t) for t in ts} for s, ts in a.rels.items()}
    return Structure(a.sig, a.n, rels, check=False)


def is_isomorphic(a: Structure, b: Structure) -> bool:
    if a.n != b.n or a.sig != b.sig:
        return False
    sizes_a = sorted(len(t) for t in a.rels.values())
    if sizes_a != sorted(len(t) for t in b.rels.values()):
        return False
    for perm in itertools.permutations(range(a.n)):
        if relabel(a, perm).rels == b.rels:
            return True
    return False
