"""Directed Hamilton cycles in small or dense digraphs."""
from __future__ import annotations

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from .errors import ConstructionFailure


def is_hamilton_cycle(adj: np.ndarray, cycle) -> bool:
    cycle = list(cycle)
    n = adj.shape[0]
    if sorted(cycle) != list(range(n)):
        return False
    if n == 1:
        return True
    return all(adj[a, b] for a, b in zip(cycle, cycle[1:] + cycle[:1]))


def lexicographic_hamilton_cycle(adj: np.ndarray) -> list[int] | None:
    """Lexicographically first Hamilton cycle starting at 0, or None.

    Exact: a subset DP marks the (visited set, endpoint) states that can still
    be completed, and the greedy walk only steps into completable states.
    Intended for at most a dozen or so vertices.
    """
    n = adj.shape[0]
    if n == 1:
        return [0]
    if n == 2:
        return [0, 1] if adj[0, 1] and adj[1, 0] else None
    full = (1 << n) - 1
    A = adj.astype(bool)
    ok = np.zeros((1 << n, n), dtype=bool)
    ok[full] = A[:, 0]
    bits = 1 << np.arange(n)
    for mask in range(full - 1, 0, -1):
        if not mask & 1:
            continue
        missing = (mask & bits) == 0
        g = np.zeros(n, dtype=bool)
        idx = np.flatnonzero(missing)
        g[idx] = ok[mask | bits[idx], idx]
        ok[mask] = (A & g).any(axis=1)
    if not ok[1, 0]:
        return None
    cycle = [0]
    mask = 1
    v = 0
    while mask != full:
        for u in range(n):
            if not mask & (1 << u) and A[v, u] and ok[mask | (1 << u), u]:
                cycle.append(u)
                mask |= 1 << u
                v = u
                break
    return cycle


def _cycle_factor(adj: np.ndarray, rng: np.random.Generator) -> np.ndarray | None:
    """Random successor permutation whose arcs all lie in adj (None if none exists)."""
    n = adj.shape[0]
    rp = rng.permutation(n)
    cp = rng.permutation(n)
    M = csr_matrix(adj[np.ix_(rp, cp)])
    match = maximum_bipartite_matching(M, perm_type="column")
    if (match < 0).any():
        return None
    succ = np.empty(n, dtype=np.int64)
    succ[rp] = cp[match]
    return succ


def _cycles_of(succ: np.ndarray) -> np.ndarray:
    n = len(succ)
    label = np.full(n, -1, dtype=np.int64)
    c = 0
    for s in range(n):
        if label[s] < 0:
            v = s
            while label[v] < 0:
                label[v] = c
                v = succ[v]
            c += 1
    return label


def patched_hamilton_cycle(adj: np.ndarray, rng: np.random.Generator,
                           tries: int = 40) -> list[int] | None:
    """Hamilton cycle by merging the cycles of a random cycle factor.

    Two cycles through u and v merge when u -> succ(v) and v -> succ(u) are
    both arcs: swap the successors.  When no such pair exists the factor is
    redrawn.
    """
    n = adj.shape[0]
    if n == 1:
        return [0]
    A = adj.astype(bool)
    for _ in range(tries):
        succ = _cycle_factor(A, rng)
        if succ is None:
            return None
        while True:
            label = _cycles_of(succ)
            if label.max() == 0:
                cycle = [0]
                v = int(succ[0])
                while v != 0:
                    cycle.append(v)
                    v = int(succ[v])
                return cycle
            # u in the smallest cycle, v anywhere else
            sizes = np.bincount(label)
            small = int(np.argmin(sizes))
            us = np.flatnonzero(label == small)
            vs = np.flatnonzero(label != small)
            # ok[a, b]: u=us[a] -> succ(vs[b]) and vs[b] -> succ(us[a])
            ok = A[np.ix_(us, succ[vs])] & A[np.ix_(vs, succ[us])].T
            hits = np.argwhere(ok)
            if len(hits) == 0:
                break
            a, b = hits[rng.integers(len(hits))]
            u, v = int(us[a]), int(vs[b])
            succ[u], succ[v] = succ[v], succ[u]
    return None


def hamilton_cycle(adj: np.ndarray, rng: np.random.Generator | None = None,
                   exhaustive_limit: int = 12) -> list[int]:
    """Hamilton cycle of a digraph given by its adjacency matrix.

    Exact lexicographic search up to ``exhaustive_limit`` vertices, cycle
    factor patching above that with a bounded backtracking search as backup.
    """
    n = adj.shape[0]
    if n <= exhaustive_limit:
        cyc = lexicographic_hamilton_cycle(adj)
    else:
        rng = rng if rng is not None else np.random.default_rng(0)
        cyc = patched_hamilton_cycle(adj, rng)
        if cyc is None:
            cyc = dfs_hamilton_cycle(adj, rng)
    if cyc is None:
        raise ConstructionFailure("no Hamilton cycle found", stage="hamilton_cycle", order=n)
    return cyc


def dfs_hamilton_cycle(adj: np.ndarray, rng: np.random.Generator,
                       budget: int = 200_000) -> list[int] | None:
    """Backtracking search preferring successors with few unvisited out-neighbours."""
    n = adj.shape[0]
    if n == 1:
        return [0]
    A = adj.astype(bool)
    start = int(rng.integers(n))
    visited = np.zeros(n, dtype=bool)
    visited[start] = True
    path = [start]
    tie = rng.random(n)
    stack = [iter(_ranked(A, start, visited, tie))]
    steps = 0
    while stack and steps < budget:
        steps += 1
        nxt = next(stack[-1], None)
        if nxt is None:
            stack.pop()
            visited[path.pop()] = False
            continue
        if visited[nxt]:
            continue
        visited[nxt] = True
        path.append(nxt)
        if len(path) == n:
            if A[nxt, start]:
                return path
            visited[path.pop()] = False
            continue
        stack.append(iter(_ranked(A, nxt, visited, tie)))
    return None


def _ranked(A, v, visited, tie):
    cand = np.flatnonzero(A[v] & ~visited)
    if cand.size == 0:
        return []
    onward = (A[cand] & ~visited).sum(axis=1)
    return cand[np.lexsort((tie[cand], onward))].tolist()
