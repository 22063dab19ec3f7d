"""Greedy embedding of an allocated tree into the clusters of a host digraph."""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from .allocation import LeavesAllocation, PathsAllocation
from .errors import EmbeddingFailure, Infeasible, InvalidArgument, ReservationFailure
from .graph import Allocation, Digraph, Embedding, OrientedTree, ParamHierarchy, verify_embedding
from .regularity import ClusterDecomposition
from .trees import AncestralOrder

RESERVE_FLOOR = 32
ANCHOR_POOL = 8


# ---------------------------------------------------------------------------
# perfect matchings with Hall certificates


def _maximum_matching(compat: np.ndarray) -> np.ndarray:
    """Row -> matched column (or -1) of a maximum matching."""
    if compat.size == 0:
        return np.full(compat.shape[0], -1, dtype=np.int64)
    return maximum_bipartite_matching(csr_matrix(compat.astype(np.int8)), perm_type="column")


def hall_violator(compat: np.ndarray, match: np.ndarray) -> np.ndarray:
    """Rows S with |N(S)| < |S|, grown by alternating search from one unmatched row."""
    free = np.flatnonzero(match < 0)
    if free.size == 0:
        return np.zeros(0, dtype=np.int64)
    col_owner = np.full(compat.shape[1], -1, dtype=np.int64)
    ok = match >= 0
    col_owner[match[ok]] = np.flatnonzero(ok)
    rows = {int(free[0])}
    seen_cols: set[int] = set()
    queue = deque([int(free[0])])
    while queue:
        r = queue.popleft()
        for c in np.flatnonzero(compat[r]).tolist():
            if c in seen_cols:
                continue
            seen_cols.add(c)
            owner = int(col_owner[c])
            if owner >= 0 and owner not in rows:
                rows.add(owner)
                queue.append(owner)
    S = np.asarray(sorted(rows), dtype=np.int64)
    assert compat[S].any(axis=0).sum() < len(S)
    return S


@dataclass
class MatchingResult:
    pairs: list[tuple[int, int]]

    def as_dict(self) -> dict[int, int]:
        return dict(self.pairs)


def perfect_matching_super_regular(U: Sequence[int], W: Sequence[int], arcs) -> MatchingResult:
    """Perfect matching from U to W along the given arcs.

    ``arcs`` is a host Digraph, a |U| x |W| boolean matrix, or an iterable of
    (u, w) pairs.  When no perfect matching exists, Infeasible is raised
    with a set S of U whose neighbourhood is smaller than S.
    """
    U = np.asarray(U, dtype=np.int64)
    W = np.asarray(W, dtype=np.int64)
    if len(U) != len(W):
        raise InvalidArgument(f"|U| = {len(U)} differs from |W| = {len(W)}")
    if isinstance(arcs, Digraph):
        compat = arcs.adj[np.ix_(U, W)]
    else:
        arr = np.asarray(arcs) if not isinstance(arcs, (set, frozenset)) else None
        if arr is not None and arr.dtype == bool and arr.shape == (len(U), len(W)):
            compat = arr
        else:
            ui = {int(u): i for i, u in enumerate(U)}
            wi = {int(w): i for i, w in enumerate(W)}
            compat = np.zeros((len(U), len(W)), dtype=bool)
            for u, w in arcs:
                if int(u) in ui and int(w) in wi:
                    compat[ui[int(u)], wi[int(w)]] = True
    match = _maximum_matching(compat)
    if (match < 0).any():
        S = hall_violator(compat, match)
        raise Infeasible(f"no perfect matching: {len(S)} vertices of U see fewer vertices of W",
                         certificate=U[S].tolist())
    return MatchingResult([(int(U[i]), int(W[match[i]])) for i in range(len(U))])


# ---------------------------------------------------------------------------
# good sets


@dataclass
class GoodSet:
    """Reserved vertices of one cluster for the children joined to a parent one way."""

    vertices: np.ndarray
    star: tuple
    beta: float
    gamma: float


def good_set_size(m: int, phi_degree: int, floor: int = RESERVE_FLOOR) -> int:
    """max(floor, 2 m^(1 - 1/Delta(phi)))."""
    return max(floor, int(2 * m ** (1 - 1 / max(1, phi_degree))))


def reserve_good_set(pool: Sequence[int], star, phi_degree: int, m: int, beta: float,
                     gamma: float, seed=None, floor: int = RESERVE_FLOOR,
                     limit: int | None = None) -> GoodSet:
    """Random subset of ``pool`` drawn at rate 1/(gamma m^(1/Delta(phi))).

    The size is capped at 2 m^(1 - 1/Delta(phi)) and raised to ``floor``
    (never beyond the pool).  Goodness itself is checked when a vertex is
    taken from the set, not here.
    """
    pool = np.asarray(pool, dtype=np.int64)
    if len(pool) < gamma * m / 2:
        raise ReservationFailure(f"pool of {len(pool)} below gamma m / 2 = {gamma * m / 2:g}",
                                 snapshot={"pool": len(pool), "m": m})
    rng = np.random.default_rng(seed)
    d = max(1, phi_degree)
    rate = min(1.0, 1 / (gamma * m ** (1 / d)))
    cap = 2 * m ** (1 - 1 / d)
    size = int(rng.binomial(len(pool), rate))
    size = min(size, int(cap))
    size = max(size, min(floor, len(pool)))
    if limit is not None:
        size = min(size, limit)
    chosen = np.sort(rng.choice(pool, size=size, replace=False)) if size else pool[:0]
    return GoodSet(chosen, tuple(star) if not isinstance(star, tuple) else star, beta, gamma)


# ---------------------------------------------------------------------------
# the greedy engine


@dataclass
class EmbedderState:
    """Everything the greedy embedder knows at clock ``clock``.

    ``owner[h]`` is -1 for a free host vertex, -2 once it is used, and
    otherwise the tree vertex whose reservation holds it.  ``groups[t]``
    maps (cluster, forward) to the GoodSet reserved for the unembedded
    children of t in that cluster joined to t by an out-arc (forward) or
    an in-arc.
    """

    owner: np.ndarray
    image: np.ndarray
    groups: dict = field(default_factory=dict)
    open_set: set = field(default_factory=set)
    clock: int = 0
    log: dict = field(default_factory=lambda: {"redraws": 0, "anchors": [], "reserved_peak": 0})

    @property
    def used(self) -> np.ndarray:
        return self.owner == -2

    def reserved_total(self) -> int:
        return int((self.owner >= 0).sum())

    def occupied(self, cluster_of: np.ndarray, k: int) -> list[np.ndarray]:
        return [np.flatnonzero((cluster_of == i) & self.used) for i in range(k)]


class _Engine:
    def __init__(self, G: Digraph, T: OrientedTree, order: Sequence[int], target: np.ndarray,
                 cluster_of: np.ndarray, k: int, fixed: dict[int, int], skip: np.ndarray,
                 beta: float, gamma: float, rng: np.random.Generator,
                 floor: int = RESERVE_FLOOR, anchor_pool: int = ANCHOR_POOL):
        self.G, self.A, self.T = G, G.adj, T
        self.order = [int(v) for v in order]
        self.target = target
        self.cluster_of = cluster_of
        self.k = k
        self.fixed = fixed
        self.skip = skip
        self.beta, self.gamma = beta, gamma
        self.rng = rng
        self.floor = floor
        self.in_cluster = [cluster_of == i for i in range(k)]
        self.sizes = np.asarray([int(c.sum()) for c in self.in_cluster])
        self.m = int(self.sizes.max())
        phi = Allocation(np.where(target < k, target, k), k + 1)
        self.phi_degree = max(1, phi.max_degree(T))
        self.state = EmbedderState(np.full(G.n, -1, dtype=np.int64),
                                   np.full(T.n, -1, dtype=np.int64))
        for v in fixed.values():
            self.state.owner[v] = -2
        ch = T.children
        self.children = ch
        self.pending = np.asarray([sum(1 for c in ch[t] if not skip[c]) for t in range(T.n)])
        self.size_cap = good_set_size(self.m, self.phi_degree, floor)
        self.reserve_bound = self.size_cap * max(1, T.max_degree()) * math.ceil(
            math.log2(max(2, T.n)) + 1)
        # anchored vertices: some child has a fixed image
        self.anchor_pool = anchor_pool
        self.anchors: dict[int, list[tuple[int, bool]]] = {}
        for c, h in fixed.items():
            p = int(T.parent[c])
            if p >= 0 and p not in fixed:
                # p -> c in T means p's image must be an in-neighbour of h
                self.anchors.setdefault(p, []).append((h, bool(T.down[c])))
        self.ypool: dict[int, np.ndarray] = {}
        for t in sorted(self.anchors):
            if skip[t]:
                continue
            live = self._anchor_mask(t) & self.in_cluster[int(target[t])] & (self.state.owner == -1)
            cand = np.flatnonzero(live)
            take = cand if len(cand) <= anchor_pool else np.sort(
                rng.choice(cand, size=anchor_pool, replace=False))
            self.ypool[t] = take
            self.state.owner[take] = T.n + t  # reserved for an anchor, not a group

    # -- masks

    def _anchor_mask(self, t: int) -> np.ndarray:
        mask = np.ones(self.G.n, dtype=bool)
        for h, t_to_h in self.anchors.get(t, ()):
            mask &= self.A[:, h] if t_to_h else self.A[h]
        return mask

    def _parent_mask(self, t: int) -> np.ndarray | None:
        p = int(self.T.parent[t])
        if p < 0 or self.state.image[p] < 0:
            return None
        x = int(self.state.image[p])
        return self.A[x] if self.T.down[t] else self.A[:, x]

    def _child_groups(self, t: int) -> dict[tuple[int, bool], int]:
        out: dict[tuple[int, bool], int] = {}
        for c in self.children[t]:
            if self.skip[c] or c in self.fixed:
                continue
            key = (int(self.target[c]), bool(self.T.down[c]))
            out[key] = out.get(key, 0) + 1
        return out

    def _meets(self, cand: np.ndarray, t: int) -> np.ndarray:
        """Candidates with enough free neighbours for every group of t's children."""
        ok = np.ones(len(cand), dtype=bool)
        if not len(cand):
            return ok
        free = self.state.owner == -1
        for (c, fwd), cnt in self._child_groups(t).items():
            pool = np.flatnonzero(free & self.in_cluster[c])
            need = min(self.gamma * len(pool), cnt)
            sub = self.A[np.ix_(cand, pool)] if fwd else self.A[np.ix_(pool, cand)].T
            ok &= sub.sum(axis=1) >= need
        return ok

    def _fail(self, t: int, why: str) -> EmbeddingFailure:
        st = self.state
        free = st.owner == -1
        p = int(self.T.parent[t])
        snap = {
            "clock": st.clock, "tree_vertex": t, "cluster": int(self.target[t]),
            "parent": p, "parent_image": int(st.image[p]) if p >= 0 else None,
            "pool_sizes": [int((free & c).sum()) for c in self.in_cluster],
            "reserved_total": st.reserved_total(), "open": len(st.open_set), "reason": why,
        }
        return EmbeddingFailure(f"cannot embed tree vertex {t}: {why}", snapshot=snap)

    # -- one step

    def _place(self, t: int, v: int) -> None:
        st = self.state
        holder = int(st.owner[v])
        st.owner[v] = -2
        st.image[t] = v
        if 0 <= holder < self.T.n:
            for gs in st.groups.get(holder, {}).values():
                gs.vertices = gs.vertices[gs.vertices != v]
        elif holder >= self.T.n and holder - self.T.n in self.ypool:
            y = holder - self.T.n
            self.ypool[y] = self.ypool[y][self.ypool[y] != v]
        if t in self.ypool:
            rest = self.ypool.pop(t)
            rest = rest[st.owner[rest] == self.T.n + t]
            st.owner[rest] = -1
            st.log["anchors"].append((t, v, bool(holder == self.T.n + t)))
        p = int(self.T.parent[t])
        if p >= 0 and not self.skip[t]:
            self.pending[p] -= 1
            if self.pending[p] == 0:
                self._release(p)

    def _release(self, t: int) -> None:
        st = self.state
        for gs in st.groups.pop(t, {}).values():
            mine = gs.vertices[st.owner[gs.vertices] == t]
            st.owner[mine] = -1
        st.open_set.discard(t)

    def _reserve(self, t: int) -> None:
        st = self.state
        v = int(st.image[t])
        groups = self._child_groups(t)
        if self.pending[t] > 0:
            st.open_set.add(t)
        if not groups:
            return
        free = st.owner == -1
        res = {}
        open_on = {}
        for other in st.groups.values():
            for (c, _f) in other:
                open_on[c] = open_on.get(c, 0) + 1
        for (c, fwd), cnt in sorted(groups.items()):
            nb = self.A[v] if fwd else self.A[:, v]
            live = np.flatnonzero(free & self.in_cluster[c] & nb)
            pool_size = int((free & self.in_cluster[c]).sum())
            share = max(cnt, pool_size // (4 + 2 * open_on.get(c, 0)))
            limit = min(self.size_cap, share)
            if len(live) == 0:
                continue
            try:
                gs = reserve_good_set(live, (t, c, fwd, cnt), self.phi_degree, self.m, self.beta,
                                      self.gamma, seed=self.rng, floor=self.floor, limit=limit)
            except ReservationFailure:
                take = live if len(live) <= limit else np.sort(
                    self.rng.choice(live, size=limit, replace=False))
                gs = GoodSet(take, (t, c, fwd, cnt), self.beta, self.gamma)
            st.owner[gs.vertices] = t
            free[gs.vertices] = False
            res[(c, fwd)] = gs
        st.groups[t] = res
        total = st.reserved_total()
        st.log["reserved_peak"] = max(st.log["reserved_peak"], total)
        assert total <= self.reserve_bound + self.anchor_pool * len(self.anchors), (
            f"reserved {total} vertices, bound {self.reserve_bound}")

    def _choose(self, t: int) -> int:
        st = self.state
        c = int(self.target[t])
        pmask = self._parent_mask(t)
        amask = self._anchor_mask(t) if t in self.anchors else None
        base = self.in_cluster[c].copy()
        if pmask is not None:
            base &= pmask
        if amask is not None:
            base &= amask
        p = int(self.T.parent[t])
        # the anchor pool first, then the parent's reservation
        first: list[np.ndarray] = []
        if t in self.ypool:
            first.append(self.ypool[t])
        if p >= 0 and p in st.groups:
            gs = st.groups[p].get((c, bool(self.T.down[t])))
            if gs is not None:
                first.append(gs.vertices)
        for cand in first:
            cand = cand[base[cand] & (st.owner[cand] != -2)]
            ok = self._meets(cand, t)
            if ok.any():
                return int(cand[ok][0])
        if first:
            st.log["redraws"] += 1
        own = (st.owner == -1) | (st.owner == p) | (st.owner == self.T.n + t)
        cand = np.flatnonzero(base & own)
        ok = self._meets(cand, t)
        if ok.any():
            return int(cand[ok][0])
        # last resort: a vertex another open vertex reserved but has not used
        others = np.flatnonzero(base & (st.owner >= 0) & ~own)
        ok = self._meets(others, t)
        if ok.any():
            st.log["steals"] = st.log.get("steals", 0) + 1
            return int(others[ok][0])
        raise self._fail(t, "no candidate meets the degree conditions"
                         if len(cand) + len(others) else "no free neighbour in the allocated cluster")

    def run(self) -> EmbedderState:
        st = self.state
        for t in self.order:
            st.clock += 1
            if self.skip[t]:
                continue
            if t in self.fixed:
                v = self.fixed[t]
                pm = self._parent_mask(t)
                if pm is not None and not pm[v]:
                    raise self._fail(t, "fixed image is not joined to the parent's image")
                st.owner[v] = -1
                self._place(t, v)
            else:
                v = self._choose(t)
                if self.target[t] < self.k:
                    assert self.cluster_of[v] == self.target[t]
                self._place(t, v)
            self._reserve(t)
        return st

    def complete_skipped(self) -> dict:
        """Match every skipped tree vertex to a free vertex of its cluster."""
        st = self.state
        T, A = self.T, self.A
        report = {}
        skipped = np.flatnonzero(self.skip)
        for c in range(self.k):
            rows = [int(s) for s in skipped if self.target[s] == c]
            free = np.flatnonzero(self.in_cluster[c] & (st.owner != -2))
            if len(rows) != len(free):
                raise EmbeddingFailure(
                    f"cluster {c}: {len(rows)} skipped vertices but {len(free)} free vertices",
                    snapshot={"cluster": c, "skipped": len(rows), "free": len(free)})
            if not rows:
                continue
            compat = np.ones((len(rows), len(free)), dtype=bool)
            n_in, n_out = set(), set()
            for i, s in enumerate(rows):
                p = int(T.parent[s])
                x = int(st.image[p])
                compat[i] &= A[x, free] if T.down[s] else A[free, x]
                n_in.add(x)
                for ch in self.children[s]:
                    y = int(st.image[ch])
                    compat[i] &= A[free, y] if T.down[ch] else A[y, free]
                    n_out.add(y)
            match = _maximum_matching(compat)
            swaps = 0
            while (match < 0).any() and swaps < len(rows):
                moved = self._switch(c, rows, free, compat, match)
                if moved is None:
                    break
                free, compat = moved
                match = _maximum_matching(compat)
                swaps += 1
            st.log["switches"] = st.log.get("switches", 0) + swaps
            if (match < 0).any():
                S = hall_violator(compat, match)
                raise EmbeddingFailure(
                    f"cluster {c}: skipped vertices cannot be matched",
                    snapshot={"cluster": c, "hall_violator": [rows[i] for i in S.tolist()],
                              "free": free.tolist()})
            for i, s in enumerate(rows):
                st.image[s] = int(free[match[i]])
                st.owner[free[match[i]]] = -2
            report[c] = {"skipped": len(rows), "free": len(free),
                         "parents": len(n_in), "children": len(n_out), "switches": swaps}
        return report

    def _compat_row(self, s: int, cand: np.ndarray) -> np.ndarray:
        A, T, img = self.A, self.T, self.state.image
        x = int(img[T.parent[s]])
        ok = A[x, cand] if T.down[s] else A[cand, x]
        for ch in self.children[s]:
            y = int(img[ch])
            ok = ok & (A[cand, y] if T.down[ch] else A[y, cand])
        return ok

    def _fits(self, y: int, z: int) -> bool:
        """Whether tree vertex y could be re-embedded at host vertex z."""
        A, T, img = self.A, self.T, self.state.image
        p = int(T.parent[y])
        if p >= 0 and not (A[img[p], z] if T.down[y] else A[z, img[p]]):
            return False
        for ch in self.children[y]:
            if not (A[z, img[ch]] if T.down[ch] else A[img[ch], z]):
                return False
        return True

    def _switch(self, c, rows, free, compat, match):
        """Swap one embedded vertex onto an unmatched free vertex.

        The freed image must suit an unmatched skipped vertex, so the maximum
        matching grows by one.  Returns the new (free, compat) or None.
        """
        st, T = self.state, self.T
        loose_rows = np.flatnonzero(match < 0)
        used_cols = set(match[match >= 0].tolist())
        loose_cols = [j for j in range(len(free)) if j not in used_cols]
        movable = [t for t in range(T.n)
                   if self.target[t] == c and not self.skip[t] and t not in self.fixed
                   and t != T.root and st.image[t] >= 0
                   and not self.skip[T.parent[t]]
                   and not any(self.skip[ch] for ch in self.children[t])]
        if not movable:
            return None
        here = np.asarray([st.image[t] for t in movable])
        for i in loose_rows:
            good = self._compat_row(rows[i], here)
            for a in np.flatnonzero(good)[self.rng.permutation(int(good.sum()))]:
                y = movable[a]
                for j in loose_cols:
                    z = int(free[j])
                    if self._fits(y, z):
                        w = int(st.image[y])
                        st.image[y] = z
                        st.owner[z], st.owner[w] = -2, -1
                        free = free.copy()
                        free[j] = w
                        compat = compat.copy()
                        compat[:, j] = [self._compat_row(s, np.asarray([w]))[0] for s in rows]
                        return free, compat
        return None


# ---------------------------------------------------------------------------
# public entry points


def _cluster_map(n: int, clusters: Sequence[np.ndarray], exceptional=()) -> np.ndarray:
    where = np.full(n, -1, dtype=np.int64)
    for i, c in enumerate(clusters):
        where[np.asarray(c, dtype=np.int64)] = i
    for j, v in enumerate(np.asarray(exceptional, dtype=np.int64).tolist()):
        where[v] = len(clusters) + j
    return where


def embed(T: OrientedTree, order: AncestralOrder | None, phi: Allocation, G: Digraph,
          clusters: Sequence[np.ndarray], v1: int | None = None, beta: float = 0.1,
          gamma: float = 0.05, seed=None, alpha: float | None = None,
          core: Digraph | None = None) -> Embedding:
    """Embed T vertex by vertex, each x inside the cluster phi(x).

    At every step the image of x is taken from the set its parent reserved
    for it (the lexicographically first member with enough free neighbours
    in each cluster its own children go to), with one redraw from the
    parent's whole free neighbourhood, and the children of x then get
    fresh disjoint reservations in the neighbourhood of its image.
    """
    k = len(clusters)
    if phi.n_targets < k or (phi.target >= k).any() or (phi.target < 0).any():
        raise InvalidArgument("phi must map into the k clusters")
    order = order if order is not None else AncestralOrder(T.bfs_order())
    if not order.is_ancestral(T):
        raise InvalidArgument("order is not ancestral")
    sizes = np.asarray([len(c) for c in clusters])
    loads = np.bincount(phi.target, minlength=k)[:k]
    cap = sizes if alpha is None else np.floor((1 + alpha / 2) * sizes / (1 + alpha) + 1e-9)
    if (loads > cap).any():
        i = int(np.argmax(loads - cap))
        raise InvalidArgument(f"cluster {i} receives {loads[i]} tree vertices, limit {int(cap[i])}")
    if core is not None:
        core_phi = Allocation(phi.target, k)
        if not core_phi.is_homomorphism(T, core):
            raise InvalidArgument("some tree arc does not ride an arc of the reduced digraph")
    rng = np.random.default_rng(seed)
    where = _cluster_map(G.n, clusters)
    eng = _Engine(G, T, order.order, phi.target, where, k, {}, np.zeros(T.n, dtype=bool),
                  beta, gamma, rng)
    if v1 is not None:
        if where[v1] != phi.target[T.root]:
            raise InvalidArgument("v1 is not in the root's cluster")
        eng.fixed = {T.root: int(v1)}
    st = eng.run()
    emb = Embedding(st.image.copy(), log=dict(st.log))
    verdict = verify_embedding(G, T, emb)
    if not verdict:
        raise EmbeddingFailure("internal error: embedding does not verify",
                               snapshot={"diagnostics": verdict.diagnostics[:10]})
    return emb


def _fixed_images(phi: Allocation, k: int, dec: ClusterDecomposition) -> dict[int, int]:
    out = {}
    for t in np.flatnonzero(phi.target >= k).tolist():
        out[t] = int(dec.exceptional[phi.target[t] - k])
    return out


def _spanning(T: OrientedTree, order: AncestralOrder, phi: Allocation, skipped: Sequence[int],
              G: Digraph, dec: ClusterDecomposition, params: ParamHierarchy, seed) -> Embedding:
    if T.n != G.n:
        raise InvalidArgument(f"spanning embedding needs |T| = |G|, got {T.n} and {G.n}")
    k = dec.k
    loads = phi.loads
    if not (loads[:k] == dec.m).all() or not (loads[k:] == 1).all():
        raise InvalidArgument("allocation is not exactly balanced on the decomposition")
    rng = np.random.default_rng(seed)
    where = _cluster_map(G.n, dec.clusters, dec.exceptional)
    skip = np.zeros(T.n, dtype=bool)
    skip[list(skipped)] = True
    fixed = _fixed_images(phi, k, dec)
    eng = _Engine(G, T, order.order, phi.target, where, k, fixed, skip,
                  params.beta, params.gamma, rng)
    st = eng.run()
    report = eng.complete_skipped()
    log = dict(st.log)
    log["matching"] = report
    emb = Embedding(st.image.copy(), log=log)
    verdict = verify_embedding(G, T, emb)
    if not verdict:
        raise EmbeddingFailure("internal error: spanning embedding does not verify",
                               snapshot={"diagnostics": verdict.diagnostics[:10]})
    return emb


def embed_spanning_many_paths(alloc: PathsAllocation, G: Digraph, dec: ClusterDecomposition,
                              params: ParamHierarchy, seed=None) -> Embedding:
    """Spanning embedding from a many-paths allocation.

    Centres of PH are left out of the greedy pass.  Centres of P0 are
    pinned to their exceptional vertex, and the vertex before each of them
    draws its image from a small pool inside the exceptional vertex's
    neighbourhood set aside at the start.  The free vertices left in each
    cluster are then matched to the skipped centres.
    """
    return _spanning(alloc.tree, alloc.order, alloc.phi, alloc.skipped, G, dec, params, seed)


def embed_spanning_many_leaves(alloc: LeavesAllocation, G: Digraph, dec: ClusterDecomposition,
                               params: ParamHierarchy, seed=None) -> Embedding:
    """Spanning embedding from a many-leaves allocation.

    Leaves sent to exceptional vertices are pinned there and their stems
    draw from pools in the exceptional vertex's neighbourhood; leaves whose
    edge rides an arc of H are skipped and matched at the end.
    """
    return _spanning(alloc.tree, alloc.order, alloc.phi, alloc.skipped, G, dec, params, seed)
