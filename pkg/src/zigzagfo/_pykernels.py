"""Pure numpy/Python versions of the compiled kernels (same signatures)."""
from __future__ import annotations

import numpy as np


def validate_table(table, n, D):
    total = n * D
    if table.shape[0] != total:
        return 0
    t = np.asarray(table)
    bad_range = (t < 0) | (t >= total)
    back = np.where(bad_range, -1, t[np.clip(t, 0, max(total - 1, 0))])
    bad = bad_range | (back != np.arange(total))
    hits = np.flatnonzero(bad)
    return int(hits[0]) if hits.size else -1


def square_table(table, n, D):
    t = np.asarray(table).reshape(n, D)
    s1 = t  # (u, k1)
    v, l1 = s1 // D, s1 % D
    s2 = t[v]  # (u, k1, k2)
    w, l2 = s2 // D, s2 % D
    out = w * D * D + l2 * D + l1[:, :, None]
    return out.reshape(-1).astype(np.int64)


def zigzag_table(t1, n1, D1, t2, D2):
    t1 = np.asarray(t1).reshape(n1, D1)
    t2 = np.asarray(t2).reshape(D1, D2)
    a = t2  # (k, i)
    kp, ip = a // D2, a % D2
    b = t1[:, kp]  # (v, k, i)
    w, lp = b // D1, b % D1
    c = t2[lp]  # (v, k, i, j)
    l, jp = c // D2, c % D2
    out = ((w[..., None] * D1 + l) * D2 + jp) * D2 + ip[None, :, :, None]
    return out.reshape(-1).astype(np.int64)


def adjacency_counts(table, n, D):
    A = np.zeros((n, n), dtype=np.int64)
    src = np.arange(n * D) // D
    np.add.at(A, (src, np.asarray(table) // D), 1)
    return A


def exhaustive_cut(A):
    A = np.asarray(A, dtype=np.int64)
    n = A.shape[0]
    half = n // 2
    off = A - np.diag(np.diag(A))
    offdeg = off.sum(axis=1)
    inside = np.zeros(n, dtype=np.int64)
    mask = 0
    prev = 0
    boundary = 0
    size = 0
    best = (-1, 1, 0)
    for step in range(1, 1 << n):
        g = step ^ (step >> 1)
        v = (g ^ prev).bit_length() - 1
        prev = g
        if (mask >> v) & 1:
            boundary -= int(offdeg[v] - 2 * inside[v])
            size -= 1
            inside -= off[:, v]
        else:
            boundary += int(offdeg[v] - 2 * inside[v])
            size += 1
            inside += off[:, v]
        mask ^= 1 << v
        if 1 <= size <= half:
            if best[0] < 0 or boundary * best[1] < best[0] * size:
                best = (boundary, size, mask)
    return best


def triangle_free_mask(indptr, indices):
    n = len(indptr) - 1
    out = np.ones(n, dtype=np.uint8)
    nbrs = [set(indices[indptr[v]:indptr[v + 1]].tolist()) for v in range(n)]
    for v in range(n):
        for w in nbrs[v]:
            if (nbrs[v] & nbrs[w]) - {v, w}:
                out[v] = 0
                break
    return out


def masked_bfs(indptr, indices, allowed, starts):
    from collections import deque

    n = len(indptr) - 1
    dist = np.full(n, -1, dtype=np.int64)
    src = np.full(n, -1, dtype=np.int64)
    q = deque()
    for s, v in enumerate(starts):
        if allowed[v] and dist[v] < 0:
            dist[v] = 0
            src[v] = s
            q.append(v)
    while q:
        v = q.popleft()
        for w in indices[indptr[v]:indptr[v + 1]]:
            if allowed[w] and dist[w] < 0:
                dist[w] = dist[v] + 1
                src[w] = src[v]
                q.append(w)
    return dist, src


def ball_vertices(indptr, indices, centre, radius, mark):
    order = [centre]
    dists = [0]
    mark[centre] = 0
    head = 0
    while head < len(order):
        v = order[head]
        head += 1
        if mark[v] >= radius:
            continue
        for w in indices[indptr[v]:indptr[v + 1]]:
            w = int(w)
            if mark[w] < 0:
                mark[w] = mark[v] + 1
                order.append(w)
                dists.append(int(mark[w]))
    for v in order:
        mark[v] = -1
    return order, dists


def layer_edge_counts(indptr, indices, comp, dist, ncomp, width):
    intra = np.zeros((ncomp, width), dtype=np.int64)
    fwd = np.zeros((ncomp, width), dtype=np.int64)
    odd = 0
    n = len(indptr) - 1
    step = 1 << 18
    for lo in range(0, n, step):
        hi = min(n, lo + step)
        a, b = indptr[lo], indptr[hi]
        u = np.repeat(np.arange(lo, hi), np.diff(indptr[lo:hi + 1]))
        w = np.asarray(indices[a:b], dtype=np.int64)
        keep = (w > u) & (comp[u] >= 0) & (comp[w] >= 0)
        u, w = u[keep], w[keep]
        cu, cw, du, dw = comp[u], comp[w], dist[u], dist[w]
        ok = (cu == cw) & (du < width) & (dw < width)
        same = ok & (du == dw)
        step_edge = ok & (np.abs(du - dw) == 1)
        odd += int((~(same | step_edge)).sum())
        np.add.at(intra, (cu[same], du[same]), 1)
        lo_d = np.minimum(du, dw)
        np.add.at(fwd, (cu[step_edge], lo_d[step_edge]), 1)
    return intra, fwd, odd
