# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled hot loops. Every function mirrors one in ``_pykernels``."""

import numpy as np
cimport numpy as cnp

cnp.import_array()

ctypedef cnp.int64_t i64


def validate_table(const i64[:] table, Py_ssize_t n, Py_ssize_t D):
    """Index of the first slot breaking range or self-inversion, or -1."""
    cdef Py_ssize_t s, t, total = n * D
    if table.shape[0] != total:
        return 0
    for s in range(total):
        t = table[s]
        if t < 0 or t >= total:
            return s
        if table[t] != s:
            return s
    return -1


def square_table(const i64[:] table, Py_ssize_t n, Py_ssize_t D):
    cdef Py_ssize_t D2 = D * D
    out = np.empty(n * D2, dtype=np.int64)
    cdef i64[:] o = out
    cdef Py_ssize_t u, k1, k2, s1, v, l1, s2, w, l2
    for u in range(n):
        for k1 in range(D):
            s1 = table[u * D + k1]
            v = s1 // D
            l1 = s1 % D
            for k2 in range(D):
                s2 = table[v * D + k2]
                w = s2 // D
                l2 = s2 % D
                o[u * D2 + k1 * D + k2] = w * D2 + l2 * D + l1
    return out


def zigzag_table(const i64[:] t1, Py_ssize_t n1, Py_ssize_t D1,
                 const i64[:] t2, Py_ssize_t D2):
    cdef Py_ssize_t P = D2 * D2
    out = np.empty(n1 * D1 * P, dtype=np.int64)
    cdef i64[:] o = out
    cdef Py_ssize_t v, k, i, j, a, kp, ip, b, w, lp, c, l, jp
    for v in range(n1):
        for k in range(D1):
            for i in range(D2):
                a = t2[k * D2 + i]
                kp = a // D2
                ip = a % D2
                b = t1[v * D1 + kp]
                w = b // D1
                lp = b % D1
                for j in range(D2):
                    c = t2[lp * D2 + j]
                    l = c // D2
                    jp = c % D2
                    o[((v * D1 + k) * D2 + i) * D2 + j] = ((w * D1 + l) * D2 + jp) * D2 + ip
    return out


def adjacency_counts(const i64[:] table, Py_ssize_t n, Py_ssize_t D):
    out = np.zeros((n, n), dtype=np.int64)
    cdef i64[:, :] A = out
    cdef Py_ssize_t s
    for s in range(n * D):
        A[s // D, table[s] // D] += 1
    return out


def exhaustive_cut(const i64[:, :] A):
    """Exact min of |boundary(S)|/|S| over nonempty S with |S| <= n/2.

    Walks all subsets in Gray-code order keeping, per vertex, the number of
    edge endpoints it has inside S.
    """
    cdef Py_ssize_t n = A.shape[0]
    cdef Py_ssize_t half = n // 2
    cdef i64[:] inside = np.zeros(n, dtype=np.int64)
    cdef i64[:] offdeg = np.zeros(n, dtype=np.int64)
    cdef Py_ssize_t v, w
    for v in range(n):
        for w in range(n):
            if w != v:
                offdeg[v] += A[v, w]
    cdef unsigned long long mask = 0, best_mask = 0, g, prev = 0, step, total
    cdef i64 boundary = 0, best_b = -1, size = 0, best_size = 1
    total = (<unsigned long long>1) << n
    for step in range(1, total):
        g = step ^ (step >> 1)
        v = 0
        while not ((g ^ prev) >> v) & 1:
            v += 1
        prev = g
        if (mask >> v) & 1:
            # v leaves S
            boundary -= offdeg[v] - 2 * inside[v]
            mask ^= (<unsigned long long>1) << v
            size -= 1
            for w in range(n):
                if w != v:
                    inside[w] -= A[w, v]
        else:
            boundary += offdeg[v] - 2 * inside[v]
            mask ^= (<unsigned long long>1) << v
            size += 1
            for w in range(n):
                if w != v:
                    inside[w] += A[w, v]
        if size >= 1 and size <= half:
            if best_b < 0 or boundary * best_size < best_b * size:
                best_b = boundary
                best_size = size
                best_mask = mask
    return int(best_b), int(best_size), int(best_mask)


def triangle_free_mask(const i64[:] indptr, const cnp.int32_t[:] indices):
    """1 for vertices lying in no triangle. Rows must be sorted."""
    cdef Py_ssize_t n = indptr.shape[0] - 1
    out = np.ones(n, dtype=np.uint8)
    cdef cnp.uint8_t[:] o = out
    cdef Py_ssize_t v, a, w, p, q, pe, qe
    cdef int found
    for v in range(n):
        found = 0
        for a in range(indptr[v], indptr[v + 1]):
            w = indices[a]
            p = indptr[v]
            pe = indptr[v + 1]
            q = indptr[w]
            qe = indptr[w + 1]
            while p < pe and q < qe:
                if indices[p] == indices[q]:
                    if indices[p] != v and indices[p] != w:
                        found = 1
                        break
                    p += 1
                    q += 1
                elif indices[p] < indices[q]:
                    p += 1
                else:
                    q += 1
            if found:
                break
        if found:
            o[v] = 0
    return out


def masked_bfs(const i64[:] indptr, const cnp.int32_t[:] indices,
               const cnp.uint8_t[:] allowed, const i64[:] starts):
    """Multi-source BFS confined to allowed vertices.

    Returns (dist, source) where source is the index into ``starts`` of the
    start that reached the vertex first; -1 where unreached.
    """
    cdef Py_ssize_t n = indptr.shape[0] - 1
    dist_a = np.full(n, -1, dtype=np.int64)
    src_a = np.full(n, -1, dtype=np.int64)
    queue_a = np.empty(n, dtype=np.int64)
    cdef i64[:] dist = dist_a
    cdef i64[:] src = src_a
    cdef i64[:] queue = queue_a
    cdef Py_ssize_t head = 0, tail = 0, s, v, a, w
    for s in range(starts.shape[0]):
        v = starts[s]
        if allowed[v] and dist[v] < 0:
            dist[v] = 0
            src[v] = s
            queue[tail] = v
            tail += 1
    while head < tail:
        v = queue[head]
        head += 1
        for a in range(indptr[v], indptr[v + 1]):
            w = indices[a]
            if allowed[w] and dist[w] < 0:
                dist[w] = dist[v] + 1
                src[w] = src[v]
                queue[tail] = w
                tail += 1
    return dist_a, src_a


def ball_vertices(const i64[:] indptr, const cnp.int32_t[:] indices,
                  Py_ssize_t centre, Py_ssize_t radius, i64[:] mark):
    """Vertices within ``radius`` of ``centre`` in BFS order, with distances.

    ``mark`` is scratch space of length n filled with -1; it is restored.
    """
    cdef Py_ssize_t head = 0, v, a, w, k
    order = [centre]
    dists = [0]
    mark[centre] = 0
    while head < len(order):
        v = order[head]
        head += 1
        if mark[v] >= radius:
            continue
        for a in range(indptr[v], indptr[v + 1]):
            w = indices[a]
            if mark[w] < 0:
                mark[w] = mark[v] + 1
                order.append(w)
                dists.append(mark[w])
    for k in range(len(order)):
        mark[order[k]] = -1
    return order, dists


def layer_edge_counts(const i64[:] indptr, const cnp.int32_t[:] indices,
                      const i64[:] comp, const i64[:] dist, Py_ssize_t ncomp, Py_ssize_t width):
    """Per (component, layer) counts of edges inside a BFS layer and edges to
    the next layer, over vertices with comp >= 0. The third result counts
    edges that fit neither (different components or a layer skip)."""
    intra_a = np.zeros((ncomp, width), dtype=np.int64)
    fwd_a = np.zeros((ncomp, width), dtype=np.int64)
    cdef i64[:, :] intra = intra_a
    cdef i64[:, :] fwd = fwd_a
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef Py_ssize_t u, a, w, c
    cdef i64 du, dw, odd = 0
    for u in range(n):
        c = comp[u]
        if c < 0:
            continue
        du = dist[u]
        for a in range(indptr[u], indptr[u + 1]):
            w = indices[a]
            if w <= u or comp[w] < 0:
                continue
            dw = dist[w]
            if comp[w] != c or du >= width or dw >= width:
                odd += 1
            elif dw == du:
                intra[c, du] += 1
            elif dw == du + 1:
                fwd[c, du] += 1
            elif du == dw + 1:
                fwd[c, dw] += 1
            else:
                odd += 1
    return intra_a, fwd_a, int(odd)
