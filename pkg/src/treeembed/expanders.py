"""Expanders, equitable matchings, greedy covers and diamond gadgets."""
from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from .errors import ConstructionFailure, InvalidArgument
from .graph import Allocation, Digraph, OrientedTree, min_semidegree
from .hamilton import hamilton_cycle

EXHAUSTIVE_LIMIT = 22


def _adjacency(D) -> np.ndarray:
    return D.adj if isinstance(D, Digraph) else np.asarray(D, dtype=bool)


# ---------------------------------------------------------------------------
# expansion


def _neighbour_masks(A: np.ndarray) -> np.ndarray:
    """For every vertex subset (as a bitmask) the bitmask of its out-neighbourhood."""
    n = A.shape[0]
    rows = (A.astype(np.uint32) << np.arange(n, dtype=np.uint32)).sum(axis=1, dtype=np.uint32)
    nb = np.zeros(1 << n, dtype=np.uint32)
    for i in range(n):
        lo = 1 << i
        nb[lo:2 * lo] = nb[:lo] | rows[i]
    return nb


def expansion_violation(D, mode: str = "auto", trials: int = 10_000,
                        seed: int | None = 0):
    """A set S with |N+(S)| <= |S| or |N-(S)| <= |S|, as (side, S), or None."""
    A = _adjacency(D)
    n = A.shape[0]
    if mode == "auto":
        mode = "exhaustive" if n <= EXHAUSTIVE_LIMIT else "heuristic"
    if mode == "exhaustive":
        if n > EXHAUSTIVE_LIMIT:
            raise InvalidArgument(f"exhaustive expansion check limited to {EXHAUSTIVE_LIMIT} vertices")
        if n <= 1:
            return None
        size = np.bitwise_count(np.arange(1 << n, dtype=np.uint32))
        for side, M in (("out", A), ("in", A.T)):
            nb = np.bitwise_count(_neighbour_masks(M))
            bad = np.flatnonzero(nb[1:-1] <= size[1:-1])
            if bad.size:
                mask = int(bad[0]) + 1
                return side, [i for i in range(n) if mask >> i & 1]
        return None
    if mode != "heuristic":
        raise InvalidArgument(f"unknown mode {mode!r}")
    return _heuristic_violation(A, trials, np.random.default_rng(seed))


def _heuristic_violation(A: np.ndarray, trials: int, rng: np.random.Generator):
    n = A.shape[0]
    if n <= 1:
        return None
    for side, M in (("out", A), ("in", A.T)):
        Mf = M.astype(np.float32)
        deg = M.sum(axis=1)
        # singletons, then co-singletons (N(V - v) misses nobody)
        low = np.flatnonzero(deg <= 1)
        if low.size:
            return side, [int(low[0])]
        hit = M.sum(axis=0)
        for v in range(n):
            # N(V - v) = vertices with a neighbour other than v
            covered = int(((hit - M[v]) > 0).sum())
            if covered <= n - 1:
                return side, [u for u in range(n) if u != v]
        S = _greedy_bad_set(M, rng)
        if S is not None:
            return side, S
        sizes = range(2, n - 1) if n <= 64 else np.unique(
            np.geomspace(2, n - 2, 32).astype(int))
        for s in sizes:
            s = int(s)
            keys = rng.random((trials, n), dtype=np.float32)
            part = np.argpartition(keys, s - 1, axis=1)[:, :s]
            X = np.zeros((trials, n), dtype=np.float32)
            np.put_along_axis(X, part, 1.0, axis=1)
            reach = ((X @ Mf) > 0).sum(axis=1)
            bad = np.flatnonzero(reach <= s)
            if bad.size:
                return side, sorted(np.flatnonzero(X[bad[0]]).tolist())
    return None


def _greedy_bad_set(M: np.ndarray, rng: np.random.Generator, starts: int = 64):
    """Grow sets vertex by vertex, always adding the vertex that enlarges N(S) least."""
    n = M.shape[0]
    Mi = M.astype(np.int64)
    for start in rng.permutation(n)[:starts]:
        inS = np.zeros(n, dtype=bool)
        inS[start] = True
        covered = M[start].copy()
        for size in range(1, n - 1):
            gain = (Mi[:, ~covered]).sum(axis=1)
            gain[inS] = n + 1
            v = int(np.argmin(gain))
            inS[v] = True
            covered |= M[v]
            if covered.sum() <= size + 1:
                return sorted(np.flatnonzero(inS).tolist())
    return None


def is_expander(D, mode: str = "auto", trials: int = 10_000, seed: int | None = 0) -> bool:
    """|N+(S)| > |S| and |N-(S)| > |S| for every nonempty proper subset S.

    ``exhaustive`` checks every subset (at most 22 vertices).  ``heuristic``
    checks singletons, co-singletons, greedily grown sets and ``trials``
    random sets per size: a False answer is certain, a True answer is not.
    """
    return expansion_violation(D, mode, trials, seed) is None


# ---------------------------------------------------------------------------
# matchings


class _EdgeColouring:
    """Proper edge colouring of a simple graph, one colour per edge."""

    def __init__(self, n: int, palette: int):
        self.palette = palette
        self.at: list[dict[int, int]] = [dict() for _ in range(n)]

    def colour(self, u: int, v: int) -> int | None:
        for c, w in self.at[u].items():
            if w == v:
                return c
        return None

    def set(self, u: int, v: int, c: int) -> None:
        self.at[u][c] = v
        self.at[v][c] = u

    def clear(self, u: int, v: int) -> None:
        c = self.colour(u, v)
        if c is not None:
            del self.at[u][c]
            del self.at[v][c]

    def free(self, v: int) -> int:
        used = self.at[v]
        for c in range(self.palette):
            if c not in used:
                return c
        raise ConstructionFailure("palette exhausted", stage="edge_colouring")

    def is_free(self, v: int, c: int) -> bool:
        return c not in self.at[v]

    def add(self, u: int, v: int) -> None:
        """Misra-Gries step: colour uv with at most max degree + 1 colours."""
        fan = [v]
        seen = {v}
        grown = True
        while grown:
            grown = False
            last = fan[-1]
            for c, x in self.at[u].items():
                if x not in seen and self.is_free(last, c):
                    fan.append(x)
                    seen.add(x)
                    grown = True
                    break
        c = self.free(u)
        d = self.free(fan[-1])
        if c != d:
            self._invert(u, d, c)
        # longest fan prefix ending at a vertex where d is free
        stop = None
        for i, w in enumerate(fan):
            if i and not self.is_free(fan[i - 1], self.colour(u, w)):
                break
            if self.is_free(w, d):
                stop = i
                break
        if stop is None:
            raise ConstructionFailure("fan rotation failed", stage="edge_colouring")
        for j in range(stop):
            col = self.colour(u, fan[j + 1])
            self.clear(u, fan[j + 1])
            self.set(u, fan[j], col)
        self.set(u, fan[stop], d)

    def _invert(self, u: int, d: int, c: int) -> None:
        path = []
        cur, col = u, d
        while col in self.at[cur]:
            nxt = self.at[cur][col]
            path.append((cur, nxt, col))
            cur, col = nxt, (c if col == d else d)
        for a, b, _ in path:
            self.clear(a, b)
        for a, b, col in path:
            self.set(a, b, c if col == d else d)


def _is_matching(arcs) -> bool:
    ends = [x for a in arcs for x in a]
    return len(ends) == len(set(ends))


def _rebalance(M: list, N: list) -> tuple[list, list]:
    """Swap one alternating path with more M-arcs than N-arcs; sizes move by 1."""
    at: dict[int, list] = {}
    for tag, arcs in ((0, M), (1, N)):
        for a in arcs:
            for x in a:
                at.setdefault(x, []).append((tag, a))
    Mset = set(M)
    seen = set()
    for start in M:
        if start in seen:
            continue
        comp = []
        queue = deque([start])
        seen.add(start)
        while queue:
            a = queue.popleft()
            comp.append(a)
            for x in a:
                for _, b in at[x]:
                    if b not in seen:
                        seen.add(b)
                        queue.append(b)
        inM = {a for a in comp if a in Mset}
        if len(inM) > len(comp) - len(inM):
            Mnew = [a for a in M if a not in inM] + [a for a in comp if a not in inM]
            Nnew = [a for a in N if a not in comp] + sorted(inM)
            return Mnew, Nnew
    raise ConstructionFailure("no alternating path to swap", stage="equitable_matchings")


def equitable_matching_partition(arcs, n: int | None = None) -> list[list[tuple[int, int]]]:
    """Partition arcs into matchings (no shared endpoints) of near-equal size.

    Matchings are taken in the underlying graph.  Pairs u->v, v->u go to
    different classes.  The count is at most 2*max semidegree + 1 when no
    such antiparallel pair is present (Misra-Gries colouring); otherwise a
    spare colour is opened only if the repair step gets stuck.
    """
    arcs = sorted({(int(a), int(b)) for a, b in arcs})
    if not arcs:
        return []
    if n is None:
        n = 1 + max(max(a) for a in arcs)
    undirected: dict[tuple[int, int], list] = {}
    for a, b in arcs:
        undirected.setdefault((min(a, b), max(a, b)), []).append((a, b))
    deg = np.zeros(n, dtype=np.int64)
    for u, v in undirected:
        deg[u] += 1
        deg[v] += 1
    col = _EdgeColouring(n, int(deg.max()) + 1)
    for u, v in undirected:
        col.add(u, v)
    classes: dict[int, list] = {}
    for (u, v), pair in undirected.items():
        classes.setdefault(col.colour(u, v), []).append(pair[0])
    # second arcs of antiparallel pairs
    extra = [pair[1] for pair in undirected.values() if len(pair) == 2]
    out = [classes[c] for c in sorted(classes)]
    busy = [set(x for a in M for x in a) for M in out]
    for a in extra:
        for i, M in enumerate(out):
            if a[0] not in busy[i] and a[1] not in busy[i]:
                M.append(a)
                busy[i].update(a)
                break
        else:
            out.append([a])
            busy.append(set(a))
    while True:
        sizes = [len(M) for M in out]
        hi, lo = int(np.argmax(sizes)), int(np.argmin(sizes))
        if sizes[hi] - sizes[lo] <= 1:
            break
        out[hi], out[lo] = _rebalance(out[hi], out[lo])
    out = [sorted(M) for M in out if M]
    assert all(_is_matching(M) for M in out)
    assert max(map(len, out)) - min(map(len, out)) <= 2
    return out


def greedy_cover(B, eps: float, forbidden: Sequence | None = None,
                 load: np.ndarray | None = None) -> np.ndarray:
    """Pick one neighbour in W for every row v of the bipartite matrix B.

    Each v takes its allowed neighbour with the smallest current load (ties
    to the smallest index), so no w ends up with more than
    1 + |V|/(eps |W|) picks.  Returns the chosen column for every row.
    """
    B = np.asarray(B, dtype=bool)
    nv, nw = B.shape
    deg = B.sum(axis=1)
    short = np.flatnonzero(deg < eps * nw)
    if short.size:
        v = int(short[0])
        raise InvalidArgument(f"row {v} has degree {int(deg[v])} < eps*|W| = {eps * nw:g}",
                              vertex=v)
    load = np.zeros(nw, dtype=np.int64) if load is None else np.array(load, dtype=np.int64)
    choice = np.empty(nv, dtype=np.int64)
    for v in range(nv):
        allowed = B[v].copy()
        if forbidden is not None and forbidden[v] is not None:
            allowed[list(np.atleast_1d(forbidden[v]))] = False
        cand = np.flatnonzero(allowed)
        if cand.size == 0:
            raise ConstructionFailure(f"row {v} has no allowed neighbour", stage="greedy_cover")
        w = int(cand[np.argmin(load[cand])])
        choice[v] = w
        load[w] += 1
    return choice


# ---------------------------------------------------------------------------
# diamonds


@dataclass(frozen=True)
class Diamond:
    """Order-3 path a-b-c with its middle vertex b blown up into two copies.

    ``pattern`` is (a->b, b->c): True for a forward arc.  The branches are
    prefix, middle[i], suffix.
    """

    prefix: int
    middle: tuple[int, int]
    suffix: int
    pattern: tuple[bool, bool]

    @property
    def pattern_id(self) -> int:
        return 2 * int(self.pattern[0]) + int(self.pattern[1])

    def arcs(self) -> list[tuple[int, int]]:
        ab, bc = self.pattern
        out = []
        for x in self.middle:
            out.append((self.prefix, x) if ab else (x, self.prefix))
            out.append((x, self.suffix) if bc else (self.suffix, x))
        return out

    def is_valid_in(self, D) -> bool:
        A = _adjacency(D)
        verts = {self.prefix, self.suffix, *self.middle}
        return len(verts) == 4 and all(A[a, b] for a, b in self.arcs())

    def to_dict(self) -> dict:
        return {"prefix": self.prefix, "middle": list(self.middle),
                "suffix": self.suffix, "pattern": self.pattern_id}

    @classmethod
    def from_dict(cls, data: Mapping) -> "Diamond":
        p = int(data["pattern"])
        return cls(int(data["prefix"]), tuple(int(x) for x in data["middle"]),
                   int(data["suffix"]), (bool(p & 2), bool(p & 1)))


def diamonds_to_json(diamonds: Sequence[Diamond]) -> str:
    return json.dumps([d.to_dict() for d in diamonds])


def diamonds_from_json(text: str) -> list[Diamond]:
    return [Diamond.from_dict(d) for d in json.loads(text)]


def path_pattern(P) -> tuple[bool, bool]:
    """Pattern of a rooted order-3 path given as a tree, a string like '+-' or a pair."""
    if isinstance(P, OrientedTree):
        if P.n != 3:
            raise InvalidArgument("pattern path must have order 3")
        root = P.root
        if len(P.neighbours(root)) != 1:
            raise InvalidArgument("pattern path must be rooted at a leaf")
        b = P.neighbours(root)[0]
        c = next(x for x in P.neighbours(b) if x != root)
        return P.has_arc(root, b), P.has_arc(b, c)
    if isinstance(P, str):
        if len(P) != 2 or set(P) - {"+", "-"}:
            raise InvalidArgument("pattern string must be two of '+'/'-'")
        return P[0] == "+", P[1] == "+"
    a, b = P
    return bool(a), bool(b)


def diamond_candidates(A: np.ndarray, pattern, v: int, w: int) -> tuple[np.ndarray, np.ndarray]:
    """Possible prefixes and suffixes for a diamond with middle {v, w}."""
    ab, bc = pattern
    pre = (A[:, v] & A[:, w]) if ab else (A[v] & A[w])
    suf = (A[v] & A[w]) if bc else (A[:, v] & A[:, w])
    pre, suf = pre.copy(), suf.copy()
    pre[[v, w]] = False
    suf[[v, w]] = False
    return pre, suf


@dataclass
class PConnected:
    """Spanning union of diamonds whose middles chain through 0, 1, ..., n-1."""

    H: Digraph
    diamonds: list[Diamond]

    def diamond_path(self, u: int, v: int) -> list[int]:
        """Indices of the diamonds walked to get from u to v along the chain."""
        lo, hi = sorted((u, v))
        idx = list(range(lo, hi))
        return idx if u <= v else idx[::-1]


def p_connected_subgraph(D, P, alpha: float, seed: int | None = None,
                         check_degree: bool = True) -> PConnected:
    """n-1 diamonds with middles {i, i+1}, prefixes and suffixes spread greedily.

    Suffix picks count prefix picks as load and avoid the diamond's own
    prefix.  The construction is deterministic; ``seed`` is accepted so all
    constructions share one calling convention.
    """
    A = _adjacency(D)
    n = A.shape[0]
    pattern = path_pattern(P)
    if n < 4:
        raise InvalidArgument("need at least 4 vertices for a diamond")
    if check_degree and min_semidegree(Digraph.from_adjacency(A)) < (0.5 + alpha) * n:
        raise InvalidArgument("minimum semidegree below (1/2 + alpha) n")
    pre = np.zeros((n - 1, n), dtype=bool)
    suf = np.zeros((n - 1, n), dtype=bool)
    for i in range(n - 1):
        pre[i], suf[i] = diamond_candidates(A, pattern, i, i + 1)
    try:
        p = greedy_cover(pre, alpha)
        load = np.bincount(p, minlength=n)
        s = greedy_cover(suf, alpha, forbidden=[[int(x)] for x in p], load=load)
    except InvalidArgument as exc:
        raise ConstructionFailure(str(exc), stage="p_connected_subgraph") from exc
    diamonds = [Diamond(int(p[i]), (i, i + 1), int(s[i]), pattern) for i in range(n - 1)]
    H = np.zeros_like(A)
    for dmd in diamonds:
        for a, b in dmd.arcs():
            H[a, b] = True
    Hd = Digraph.from_adjacency(H, copy=False)
    top = max(int(Hd.out_degree().max()), int(Hd.in_degree().max()))
    if top > 4 / alpha:
        raise ConstructionFailure(f"max semidegree {top} exceeds 4/alpha",
                                  stage="p_connected_subgraph")
    return PConnected(Hd, diamonds)


def shift_weights(phi: Allocation, diamonds: Sequence[Diamond],
                  branch_index: Mapping[int, tuple[Sequence, Sequence]],
                  delta: Mapping[int, int] | Sequence[int],
                  T: OrientedTree | None = None, R: Digraph | None = None,
                  budget: int | None = None) -> Allocation:
    """Move single middle vertices across diamonds until loads change by delta.

    ``branch_index[i]`` lists the tree paths (a, b, c) currently sent along
    the first and second branch of diamond i.  A unit of weight travels
    from a vertex that must lose load to one that must gain it along the
    chain of diamonds, switching one path per diamond.  With T and R the
    changed arcs are re-verified.  A dict ``branch_index`` is updated in
    place to the final branch of every path.
    """
    k = phi.n_targets
    if isinstance(delta, Mapping):
        dv = np.zeros(k, dtype=np.int64)
        for v, x in delta.items():
            dv[int(v)] = int(x)
    else:
        dv = np.asarray(delta, dtype=np.int64).copy()
    if dv.sum() != 0:
        raise InvalidArgument("shift amounts must sum to zero")
    moves = int(np.abs(dv).sum()) // 2
    if budget is not None:
        if budget < moves:
            raise InvalidArgument(f"budget {budget} below the {moves} required moves")
        for i, pair in branch_index.items():
            for side in (0, 1):
                if len(pair[side]) < budget:
                    raise ConstructionFailure(f"diamond {i} branch {side} carries fewer than {budget} paths",
                                              stage="shift_weights", diamond=i, branch=side)
    if moves == 0:
        return phi.copy()
    stacks = {i: ([tuple(p) for p in pair[0]], [tuple(p) for p in pair[1]])
              for i, pair in branch_index.items()}
    if T is not None:
        deg = T.degrees()
        for pair in stacks.values():
            for a, b, c in pair[0] + pair[1]:
                if deg[b] != 2 or set(T.neighbours(b)) != {a, c}:
                    raise InvalidArgument(f"path middle {b} is not a degree-2 tree vertex")
    # graph on targets: diamond i joins its two middles
    links: dict[int, list[tuple[int, int, int]]] = {}
    for i, dmd in enumerate(diamonds):
        x, y = dmd.middle
        links.setdefault(x, []).append((y, i, 0))
        links.setdefault(y, []).append((x, i, 1))
    rho = phi.target.copy()
    changed: list[int] = []
    target_shift = dv.copy()
    while (dv != 0).any():
        src = int(np.flatnonzero(dv < 0)[0])
        dst = int(np.flatnonzero(dv > 0)[0])
        route = _chain_route(links, src, dst)
        if route is None:
            raise ConstructionFailure(f"no diamond path from {src} to {dst}", stage="shift_weights")
        for i, side in route:
            from_stack, to_stack = stacks[i][side], stacks[i][1 - side]
            if not from_stack:
                raise ConstructionFailure(f"diamond {i} branch {side} has no path left",
                                          stage="shift_weights", diamond=i, branch=side)
            a, b, c = from_stack.pop()
            if rho[b] != diamonds[i].middle[side]:
                raise InvalidArgument(f"path {(a, b, c)} is not on branch {side} of diamond {i}")
            rho[b] = diamonds[i].middle[1 - side]
            to_stack.append((a, b, c))
            changed.append(b)
        dv[src] += 1
        dv[dst] -= 1
    out = Allocation(rho, k)
    if T is not None and R is not None:
        touched = set(changed)
        bad = [arc for arc in T.arcs() if (arc[0] in touched or arc[1] in touched)
               and not R.adj[rho[arc[0]], rho[arc[1]]]]
        if bad:
            raise ConstructionFailure(f"shift broke arcs {bad[:5]}", stage="shift_weights")
    assert (out.loads == phi.loads + target_shift).all()
    if isinstance(branch_index, dict):
        for i, pair in stacks.items():
            branch_index[i] = pair
    return out


def _chain_route(links, src: int, dst: int):
    """BFS over diamonds; each step is (diamond index, side the weight leaves)."""
    prev = {src: None}
    queue = deque([src])
    while queue:
        x = queue.popleft()
        if x == dst:
            break
        for y, i, side in links.get(x, ()):
            if y not in prev:
                prev[y] = (x, i, side)
                queue.append(y)
    if dst not in prev:
        return None
    route = []
    y = dst
    while prev[y] is not None:
        x, i, side = prev[y]
        route.append((i, side))
        y = x
    return route[::-1]


# ---------------------------------------------------------------------------
# mixing


def mix_neighbours_witness(D, f) -> tuple[int, int, int]:
    """(u, x, y) with x, y in-neighbours of u and f(y) - f(x) >= (max f - min f)/(n-1).

    Sweeps the distinct values of f: across the widest gap between
    consecutive levels, the low part X and high part Y together have n
    vertices, so in an expander their out-neighbourhoods meet.
    """
    A = _adjacency(D)
    n = A.shape[0]
    f = np.asarray(f, dtype=float)
    if f.shape != (n,):
        raise InvalidArgument("f must give one value per vertex")
    if n < 3:
        raise InvalidArgument("need at least 3 vertices")
    levels = np.unique(f)
    M = levels[-1] - levels[0]
    if M <= 0:
        raise InvalidArgument("f is constant")
    need = M / (n - 1)
    gaps = np.diff(levels)
    for j in np.argsort(-gaps, kind="stable"):
        if gaps[j] < need - 1e-12:
            break
        low = f <= levels[j]
        both = A[low].any(axis=0) & A[~low].any(axis=0)
        if both.any():
            u = int(np.flatnonzero(both)[0])
            xs = np.flatnonzero(A[:, u] & low)
            ys = np.flatnonzero(A[:, u] & ~low)
            x = int(xs[np.argmin(f[xs])])
            y = int(ys[np.argmax(f[ys])])
            return u, x, y
    raise InvalidArgument("no witness: the digraph is not an expander")


# ---------------------------------------------------------------------------
# regular expander subdigraph


@dataclass
class RegularExpander:
    """Spanning regular subdigraph; iterable as (H, degree)."""

    H: Digraph
    degree: int
    mode: str
    layers: list[tuple[list[int], list[int]]] = field(default_factory=list)
    repairs: list[str] = field(default_factory=list)

    def __iter__(self):
        return iter((self.H, self.degree))


def _thin(Hp: np.ndarray, F: np.ndarray, limit: int, rng) -> np.ndarray:
    extra = np.argwhere(Hp & ~F)
    keep = max(0, limit - int(F.sum()))
    out = F.copy()
    if len(extra) > keep:
        extra = extra[rng.choice(len(extra), size=keep, replace=False)]
    out[extra[:, 0], extra[:, 1]] = True
    return out


def _chunks(matchings, cap: int) -> list[list[tuple[int, int]]]:
    out = []
    for M in matchings:
        parts = max(1, math.ceil(len(M) / cap))
        out.extend(M[j::parts] for j in range(parts))
    return [M for M in out if M]


def _cycle_through(avail: np.ndarray, M: list, rng, tries: int = 5):
    """u1 v1 z1 u2 v2 z2 ... closing at u1, midpoints fresh and lexicographic-first."""
    for t in range(tries):
        order = list(M) if t == 0 else [M[j] for j in rng.permutation(len(M))]
        used = np.zeros(avail.shape[0], dtype=bool)
        for u, v in order:
            used[u] = used[v] = True
        cycle = []
        ok = True
        for j, (u, v) in enumerate(order):
            nxt_u = order[(j + 1) % len(order)][0]
            cand = np.flatnonzero(avail[v] & avail[:, nxt_u] & ~used)
            if cand.size == 0:
                ok = False
                break
            z = int(cand[0])
            used[z] = True
            cycle += [u, v, z]
        if ok:
            return cycle
    return None


def _factor_containing(avail: np.ndarray, M: list, rng) -> np.ndarray | None:
    """Successor permutation using every arc of M plus available arcs."""
    n = avail.shape[0]
    succ = np.full(n, -1, dtype=np.int64)
    taken = np.zeros(n, dtype=bool)
    for u, v in M:
        succ[u] = v
        taken[v] = True
    tails = np.flatnonzero(succ < 0)
    heads = np.flatnonzero(~taken)
    if tails.size == 0:
        return succ
    rp, cp = rng.permutation(tails), rng.permutation(heads)
    B = csr_matrix(avail[np.ix_(rp, cp)])
    match = maximum_bipartite_matching(B, perm_type="column")
    if (match < 0).any():
        return None
    succ[rp] = cp[match]
    return succ


def _layers_midpoint(G: np.ndarray, Hprime: np.ndarray, classes, rng):
    """One cycle through each class plus a Hamilton cycle on the remaining vertices."""
    n = G.shape[0]
    avail = G & ~Hprime
    H = np.zeros_like(G)
    layers = []
    for i, M in enumerate(classes):
        cyc = _cycle_through(avail, M, rng)
        if cyc is None:
            raise ConstructionFailure(f"no midpoints for class {i}", stage="reg_expander", layer=i)
        rest = np.setdiff1d(np.arange(n), cyc)
        if rest.size == 1:
            raise ConstructionFailure(f"single vertex left beside class {i}", stage="reg_expander", layer=i)
        sub = avail[np.ix_(rest, rest)]
        if rest.size == 2 and not (sub[0, 1] and sub[1, 0]):
            raise ConstructionFailure(f"no 2-cycle beside class {i}", stage="reg_expander", layer=i)
        try:
            ham = rest[hamilton_cycle(sub, rng)].tolist() if rest.size else []
        except ConstructionFailure as exc:
            raise ConstructionFailure(f"no Hamilton cycle beside class {i}",
                                      stage="reg_expander", layer=i) from exc
        for c in (cyc, ham):
            for a, b in zip(c, c[1:] + c[:1]):
                H[a, b] = True
                avail[a, b] = False
        layers.append((cyc, ham))
    return H, layers


def _layers_factor(G: np.ndarray, Hprime: np.ndarray, classes, rng, min_layers: int):
    n = G.shape[0]
    avail = G & ~Hprime
    H = np.zeros_like(G)
    layers = []
    classes = list(classes) + [[] for _ in range(max(0, min_layers - len(classes)))]
    for i, M in enumerate(classes):
        succ = _factor_containing(avail, M, rng)
        if succ is None:
            raise ConstructionFailure(f"no 1-factor through class {i}", stage="reg_expander", layer=i)
        H[np.arange(n), succ] = True
        avail[np.arange(n), succ] = False
        layers.append((succ.tolist(), []))
    return H, layers


def regular_expander_subdigraph(G, F=None, alpha: float = 0.1, seed: int | None = None,
                                attempts: int = 8, check_trials: int = 2000) -> RegularExpander:
    """Spanning d-regular expander H of G containing F.

    Sparsify G at rate n^(-1/3), add F, split the arcs into matchings of
    size at most alpha*n/6, and cover every matching by one 1-regular
    layer: a cycle through the matching using fresh midpoints plus a
    Hamilton cycle on the vertices it misses.  Layers are arc-disjoint, so
    H is regular of degree equal to the number of classes.

    Small hosts leave too little room for this.  When every attempt fails,
    the layers are instead completed to arbitrary 1-factors by bipartite
    matching (mode "factor"), which keeps F inside H and regularity exact.
    """
    Gd = G if isinstance(G, Digraph) else Digraph.from_adjacency(G)
    A = Gd.adj
    n = Gd.n
    if n < 3:
        raise InvalidArgument("need at least 3 vertices")
    Fa = np.zeros_like(A) if F is None else _adjacency(F).copy()
    if Fa.shape != A.shape:
        raise InvalidArgument("F must be on the vertex set of G")
    if (Fa & ~A).any():
        raise InvalidArgument("F is not a subdigraph of G")
    fdeg = max(int(Fa.sum(axis=0).max()), int(Fa.sum(axis=1).max()))
    if fdeg > 5 * n ** (2 / 3):
        raise InvalidArgument(f"max semidegree of F is {fdeg} > 5 n^(2/3)")
    delta0 = min_semidegree(Gd)
    if delta0 < (0.5 + alpha) * n:
        raise InvalidArgument("minimum semidegree below (1/2 + alpha) n")
    rng = np.random.default_rng(seed)
    p = n ** (-1 / 3)
    cap = max(1, int(alpha * n / 6))
    layer_budget = max(1, delta0 - math.ceil(n / 2) - 3 * cap - 1)
    bound = 32 * n ** (2 / 3) / alpha
    repairs: list[str] = []
    exhaustive = n <= EXHAUSTIVE_LIMIT
    check_mode = "exhaustive" if exhaustive else "heuristic"

    def finish(H, layers, mode):
        Hd = Digraph.from_adjacency(H, copy=False)
        d = Hd.is_regular()
        assert d is not None and not (Fa & ~H).any()
        assert d <= bound, f"degree {d} above 32 n^(2/3)/alpha"
        return RegularExpander(Hd, int(d), mode, layers, repairs)

    for attempt in range(attempts):
        Hp = A & (rng.random(A.shape) < p)
        Hprime = _thin(Hp, Fa, layer_budget * cap, rng)
        if not Hprime.any():
            u, v = np.argwhere(A)[0]
            Hprime[u, v] = True
        classes = _chunks(equitable_matching_partition(np.argwhere(Hprime).tolist(), n), cap)
        try:
            H, layers = _layers_midpoint(A, Hprime, classes, rng)
        except ConstructionFailure as exc:
            repairs.append(f"attempt {attempt}: {exc}")
            continue
        if is_expander(H, check_mode, trials=check_trials, seed=attempt):
            return finish(H, layers, "cycles")
        repairs.append(f"attempt {attempt}: not an expander")
    # factor mode: only F is prescribed and the random 1-factors supply the
    # expansion; at least three layers, since 1- and 2-regular digraphs rarely expand
    classes = equitable_matching_partition(np.argwhere(Fa).tolist(), n)
    for attempt in range(attempts):
        try:
            H, layers = _layers_factor(A, Fa, classes, rng, 3)
        except ConstructionFailure as exc:
            repairs.append(f"factor attempt {attempt}: {exc}")
            continue
        if is_expander(H, check_mode, trials=check_trials, seed=attempt):
            return finish(H, layers, "factor")
        repairs.append(f"factor attempt {attempt}: not an expander")
    raise ConstructionFailure("no regular expander found", stage="reg_expander", log=repairs)
