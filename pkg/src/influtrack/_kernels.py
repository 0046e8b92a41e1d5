"""Hot numeric kernels: multi-source Dijkstra and the ascending-label sweep.

Kernels are written in loop style so they compile under numba's @njit.  When
numba is unavailable, or the INFLUTRACK_NO_NUMBA env flag is set, the same
functions run as plain Python over numpy arrays; both paths execute identical
arithmetic in identical order, so results match bit for bit.
"""

from __future__ import annotations

import os

import numpy as np


def _flag_set(name: str) -> bool:
    return os.environ.get(name, "").strip().lower() in {"1", "true", "yes", "on"}


NUMBA_DISABLED = _flag_set("INFLUTRACK_NO_NUMBA")

try:
    from numba import njit as _njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - depends on environment
    HAS_NUMBA = False

USING_NUMBA = HAS_NUMBA and not NUMBA_DISABLED


def _jit(fn):
    if USING_NUMBA:
        return _njit(cache=True)(fn)
    return fn


@_jit
def _heap_push(heap_d, heap_n, size, d, v):
    heap_d[size] = d
    heap_n[size] = v
    i = size
    while i > 0:
        p = (i - 1) >> 1
        if heap_d[p] <= heap_d[i]:
            break
        heap_d[p], heap_d[i] = heap_d[i], heap_d[p]
        heap_n[p], heap_n[i] = heap_n[i], heap_n[p]
        i = p
    return size + 1


@_jit
def _heap_pop(heap_d, heap_n, size):
    d = heap_d[0]
    v = heap_n[0]
    size -= 1
    heap_d[0] = heap_d[size]
    heap_n[0] = heap_n[size]
    i = 0
    while True:
        left = 2 * i + 1
        if left >= size:
            break
        child = left
        right = left + 1
        if right < size and heap_d[right] < heap_d[left]:
            child = right
        if heap_d[i] <= heap_d[child]:
            break
        heap_d[i], heap_d[child] = heap_d[child], heap_d[i]
        heap_n[i], heap_n[child] = heap_n[child], heap_n[i]
        i = child
    return d, v, size


@_jit
def dijkstra_times(indptr, indices, edge_ids, delays, sources, horizon):
    """Shortest delay-weighted distance from the source set to every node.

    Nodes beyond `horizon` keep +inf.  `delays` is indexed by original edge id
    through `edge_ids`.
    """
    n = len(indptr) - 1
    dist = np.full(n, np.inf)
    cap = len(indices) + n + 1
    heap_d = np.empty(cap)
    heap_n = np.empty(cap, np.int32)
    size = 0
    for k in range(len(sources)):
        s = sources[k]
        if dist[s] > 0.0:
            dist[s] = 0.0
            size = _heap_push(heap_d, heap_n, size, 0.0, s)
    while size > 0:
        d, v, size = _heap_pop(heap_d, heap_n, size)
        if d > dist[v]:
            continue
        for k in range(indptr[v], indptr[v + 1]):
            w = indices[k]
            nd = d + delays[edge_ids[k]]
            if nd <= horizon and nd < dist[w]:
                dist[w] = nd
                size = _heap_push(heap_d, heap_n, size, nd, w)
    return dist


@_jit
def cascade_sizes(indptr, indices, edge_ids, delay_batch, sources, horizon):
    """Number of nodes within `horizon` of the source set, per delay sample."""
    n_samples = delay_batch.shape[0]
    out = np.empty(n_samples, np.int64)
    for b in range(n_samples):
        dist = dijkstra_times(indptr, indices, edge_ids, delay_batch[b], sources, horizon)
        count = 0
        for v in range(len(dist)):
            if dist[v] <= horizon:
                count += 1
        out[b] = count
    return out


@_jit
def _label_sweep(indptr, indices, edge_ids, delays, labels, order, horizon,
                 rbar, assigned, delta, heap_d, heap_n):
    """One ascending-label sweep over the reverse graph.

    For every node v, rbar[v] becomes the smallest label among nodes reachable
    from v within `horizon` (v itself included).  Nodes are processed in
    ascending label order; a search from node w visits v only while v is
    unassigned or the tentative distance beats v's recorded assignment
    distance, so the first assignment wins.
    """
    n = len(labels)
    for v in range(n):
        assigned[v] = False
        delta[v] = np.inf
    n_assigned = 0
    for oi in range(n):
        w = order[oi]
        lab = labels[w]
        size = _heap_push(heap_d, heap_n, 0, 0.0, w)
        while size > 0:
            d, v, size = _heap_pop(heap_d, heap_n, size)
            if d >= delta[v]:
                continue
            delta[v] = d
            if not assigned[v]:
                assigned[v] = True
                rbar[v] = lab
                n_assigned += 1
            for k in range(indptr[v], indptr[v + 1]):
                x = indices[k]
                nd = d + delays[edge_ids[k]]
                if nd <= horizon and nd < delta[x]:
                    size = _heap_push(heap_d, heap_n, size, nd, x)
        # Later sources can never displace an assignment; stop once covered.
        if n_assigned == n:
            break


@_jit
def min_labels(indptr_rev, indices_rev, edge_ids_rev, delays, labels, horizon):
    """Smallest label within `horizon` of each node (standalone sweep)."""
    n = len(labels)
    order = np.argsort(labels)
    rbar = np.empty(n)
    assigned = np.empty(n, np.bool_)
    delta = np.empty(n)
    cap = len(indices_rev) + n + 1
    heap_d = np.empty(cap)
    heap_n = np.empty(cap, np.int32)
    _label_sweep(indptr_rev, indices_rev, edge_ids_rev, delays, labels, order,
                 horizon, rbar, assigned, delta, heap_d, heap_n)
    return rbar


@_jit
def node_influence_sums(indptr_rev, indices_rev, edge_ids_rev, delay_sets,
                        label_sets, horizon):
    """Cascade-size sketch for all nodes at once.

    delay_sets has shape (s, E); label_sets has shape (s, m, n).  For delay set
    u and label set j, a sweep yields rbar[v]; the per-node estimate averages
    (m - 1) / sum_j rbar[v] over the s delay sets.
    """
    s = delay_sets.shape[0]
    m = label_sets.shape[1]
    n = label_sets.shape[2]
    X = np.zeros(n)
    rsum = np.empty(n)
    rbar = np.empty(n)
    assigned = np.empty(n, np.bool_)
    delta = np.empty(n)
    cap = len(indices_rev) + n + 1
    heap_d = np.empty(cap)
    heap_n = np.empty(cap, np.int32)
    for u in range(s):
        for v in range(n):
            rsum[v] = 0.0
        for j in range(m):
            labels = label_sets[u, j]
            order = np.argsort(labels)
            _label_sweep(indptr_rev, indices_rev, edge_ids_rev, delay_sets[u],
                         labels, order, horizon, rbar, assigned, delta, heap_d, heap_n)
            for v in range(n):
                rsum[v] += rbar[v]
        for v in range(n):
            X[v] += (m - 1.0) / rsum[v]
    for v in range(n):
        X[v] /= s
    return X


@_jit
def support_influence_sums(indptr, indices, edge_ids, delay_sets, label_sets,
                           support, horizon):
    """Same sketch as node_influence_sums, restricted to the support nodes.

    Uses the forward graph: one truncated search per (delay set, support
    node) finds the ball within `horizon`, and each label set contributes the
    minimum label over that ball.  Produces values identical to the all-node
    sweep for the support entries.
    """
    s = delay_sets.shape[0]
    m = label_sets.shape[1]
    n = label_sets.shape[2]
    q = len(support)
    X = np.zeros(q)
    dist = np.empty(n)
    ball = np.empty(n, np.int64)
    cap = len(indices) + n + 1
    heap_d = np.empty(cap)
    heap_n = np.empty(cap, np.int32)
    for u in range(s):
        delays = delay_sets[u]
        for qi in range(q):
            src = support[qi]
            for v in range(n):
                dist[v] = np.inf
            dist[src] = 0.0
            ball[0] = src
            ball_size = 1
            size = _heap_push(heap_d, heap_n, 0, 0.0, src)
            while size > 0:
                d, v, size = _heap_pop(heap_d, heap_n, size)
                if d > dist[v]:
                    continue
                for k in range(indptr[v], indptr[v + 1]):
                    w = indices[k]
                    nd = d + delays[edge_ids[k]]
                    if nd <= horizon and nd < dist[w]:
                        if dist[w] == np.inf:
                            ball[ball_size] = w
                            ball_size += 1
                        dist[w] = nd
                        size = _heap_push(heap_d, heap_n, size, nd, w)
            rsum = 0.0
            for j in range(m):
                mn = np.inf
                for bi in range(ball_size):
                    lab = label_sets[u, j, ball[bi]]
                    if lab < mn:
                        mn = lab
                rsum += mn
            X[qi] += (m - 1.0) / rsum
    for qi in range(q):
        X[qi] /= s
    return X
