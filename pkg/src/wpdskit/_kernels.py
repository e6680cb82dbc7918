"""Compiled min-plus kernels.

Two hot loops run on int64 arrays: one evaluation round of a polynomial system
and Bellman-Ford relaxation over a weighted graph.  Each exists as a numba
``@njit`` kernel and as a pure-numpy twin.  ``WPDSKIT_BACKEND`` picks one of
``numba`` (default when importable), ``numpy`` or ``python`` (the exact
arbitrary-precision path in the callers, no kernels at all).

Encoding: ``INF`` is the min-plus zero, ``NEG`` the divergent element.  Finite
values must stay within ``+-limit``; kernels report overflow instead of
wrapping and callers then redo the work on Python integers.
"""
from __future__ import annotations

import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

INF = np.int64(2**62)
NEG = np.int64(-(2**62))

BACKENDS = ("numba", "numpy", "python")


def default_backend() -> str:
    name = os.environ.get("WPDSKIT_BACKEND", "").strip().lower()
    if not name:
        return "numba" if numba is not None else "numpy"
    if name not in BACKENDS:
        raise ValueError(f"WPDSKIT_BACKEND must be one of {BACKENDS}, got {name!r}")
    if name == "numba" and numba is None:
        return "numpy"
    return name


def resolve_backend(backend: str | None) -> str:
    if backend is None:
        return default_backend()
    if backend not in BACKENDS:
        raise ValueError(f"backend must be one of {BACKENDS}, got {backend!r}")
    if backend == "numba" and numba is None:
        return "numpy"
    return backend


def value_limit(max_terms: int) -> int:
    """Largest magnitude allowed for stored values so that a sum of
    ``max_terms`` of them stays strictly inside the sentinels."""
    return (2**62 - 1) // max(max_terms, 1)


# -- polynomial evaluation ----------------------------------------------------
#
# Monomial m belongs to component owner[m], has constant const[m] (the
# extend-product of its coefficients) and variable slots vars[m, :]; unused
# slots point at index n of the extended value vector, which holds 0 (= one).

def _eval_numpy(v, owner, const, vars_, n, limit):
    ext = np.empty(n + 1, dtype=np.int64)
    ext[:n] = v
    ext[n] = 0
    out = np.full(n, INF, dtype=np.int64)
    if owner.size == 0:
        return out, False
    vals = ext[vars_]
    has_inf = (vals == INF).any(axis=1)
    has_neg = (vals == NEG).any(axis=1)
    acc = const + np.where((vals == INF) | (vals == NEG), 0, vals).sum(axis=1)
    acc = np.where(has_neg, NEG, acc)
    acc = np.where(has_inf, INF, acc)
    finite = (acc != INF) & (acc != NEG)
    overflow = bool(np.any(np.abs(acc[finite]) > limit))
    np.minimum.at(out, owner, acc)
    return out, overflow


def _eval_loop(v, owner, const, vars_, n, limit):
    out = np.full(n, INF, dtype=np.int64)
    overflow = False
    width = vars_.shape[1]
    for m in range(owner.shape[0]):
        acc = const[m]
        neg = False
        dead = False
        for j in range(width):
            idx = vars_[m, j]
            if idx == n:
                continue
            x = v[idx]
            if x == INF:
                dead = True
                break
            if x == NEG:
                neg = True
            else:
                acc += x
        if dead:
            continue
        if neg:
            acc = NEG
        elif acc > limit or acc < -limit:
            overflow = True
        o = owner[m]
        if acc < out[o]:
            out[o] = acc
    return out, overflow


# -- Bellman-Ford --------------------------------------------------------------
#
# Edges run src -> dst with weight w (NEG for a divergent edge).  dist[u] is the
# shortest weight from u to any target; succ[u] is the edge index that last
# improved dist[u] (-1 for none).

def _bf_loop(n_nodes, src, dst, w, targets, limit):
    dist = np.full(n_nodes, INF, dtype=np.int64)
    succ = np.full(n_nodes, -1, dtype=np.int64)
    for t in targets:
        dist[t] = 0
    overflow = False
    n_edges = src.shape[0]
    for _ in range(max(n_nodes - 1, 1)):
        changed = False
        for e in range(n_edges):
            d = dist[dst[e]]
            if d == INF:
                continue
            if d == NEG or w[e] == NEG:
                cand = NEG
            else:
                cand = d + w[e]
                if cand > limit or cand < -limit:
                    overflow = True
            u = src[e]
            if cand < dist[u]:
                dist[u] = cand
                succ[u] = e
                changed = True
        if not changed:
            break
    # detection round, then spread the divergent marker to every predecessor
    for e in range(n_edges):
        d = dist[dst[e]]
        if d == INF or d == NEG:
            continue
        cand = NEG if w[e] == NEG else d + w[e]
        u = src[e]
        if cand < dist[u]:
            dist[u] = NEG
            succ[u] = e
    for _ in range(n_nodes):
        changed = False
        for e in range(n_edges):
            u = src[e]
            if dist[dst[e]] == NEG and dist[u] != NEG:
                dist[u] = NEG
                succ[u] = e
                changed = True
        if not changed:
            break
    return dist, succ, overflow


def _bf_numpy(n_nodes, src, dst, w, targets, limit):
    dist = np.full(n_nodes, INF, dtype=np.int64)
    succ = np.full(n_nodes, -1, dtype=np.int64)
    dist[targets] = 0
    overflow = False
    n_edges = src.shape[0]
    if n_edges == 0:
        return dist, succ, overflow
    edge_ids = np.arange(n_edges, dtype=np.int64)

    def candidates():
        d = dist[dst]
        cand = d + np.where(w == NEG, 0, w)
        cand = np.where((d == NEG) | (w == NEG), NEG, cand)
        cand = np.where(d == INF, INF, cand)
        return cand

    def best_per_source(cand):
        order = np.lexsort((edge_ids, cand, src))
        s_sorted = src[order]
        first = np.ones(order.size, dtype=bool)
        first[1:] = s_sorted[1:] != s_sorted[:-1]
        pick = order[first]
        return src[pick], cand[pick], pick

    for _ in range(max(n_nodes - 1, 1)):
        cand = candidates()
        finite = (cand != INF) & (cand != NEG)
        if np.any(np.abs(cand[finite]) > limit):
            overflow = True
        nodes, best, edge = best_per_source(cand)
        better = best < dist[nodes]
        if not better.any():
            break
        dist[nodes[better]] = best[better]
        succ[nodes[better]] = edge[better]
    cand = candidates()
    nodes, best, edge = best_per_source(cand)
    improving = (best < dist[nodes]) & (dist[nodes] != NEG)
    dist[nodes[improving]] = NEG
    succ[nodes[improving]] = edge[improving]
    for _ in range(n_nodes):
        reach_neg = (dist[dst] == NEG) & (dist[src] != NEG)
        if not reach_neg.any():
            break
        e = np.flatnonzero(reach_neg)
        # one edge per newly divergent source is enough for the witness chain
        u, first_idx = np.unique(src[e], return_index=True)
        dist[u] = NEG
        succ[u] = e[first_idx]
    return dist, succ, overflow


if numba is not None:
    _eval_numba = numba.njit(cache=True, nogil=True)(_eval_loop)
    _bf_numba = numba.njit(cache=True, nogil=True)(_bf_loop)
else:  # pragma: no cover
    _eval_numba = None
    _bf_numba = None


def evaluate_minplus(v, owner, const, vars_, n, limit, backend):
    if backend == "numba":
        return _eval_numba(v, owner, const, vars_, n, limit)
    return _eval_numpy(v, owner, const, vars_, n, limit)


def bellman_ford_minplus(n_nodes, src, dst, w, targets, limit, backend):
    if backend == "numba":
        return _bf_numba(n_nodes, src, dst, w, targets, limit)
    return _bf_numpy(n_nodes, src, dst, w, targets, limit)
