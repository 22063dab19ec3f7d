"""Allocating tree vertices to clusters: random walks on expanders and balancing."""
from __future__ import annotations

import math
from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConstructionFailure, InvalidArgument
from .expanders import (Diamond, greedy_cover, p_connected_subgraph, path_pattern,
                        regular_expander_subdigraph, shift_weights)
from .graph import Allocation, Digraph, OrientedTree, ParamHierarchy, min_semidegree
from .regularity import ReducedDigraph
from .trees import (AncestralOrder, BarePath, LeafEdge, TreeSplit, contract_bare_paths,
                    disjoint_bare_paths, disjoint_leaf_edges, split_tree, tidy_order)

# Share of the tree that must sit in bare paths or leaf edges before a
# spanning route is attempted.
MIN_STRUCTURE_SHARE = 0.01


# ---------------------------------------------------------------------------
# neighbour tables and the random sibling-class allocation


@dataclass
class _Tables:
    out_tab: np.ndarray
    out_deg: np.ndarray
    in_tab: np.ndarray
    in_deg: np.ndarray

    @classmethod
    def of(cls, A: np.ndarray) -> "_Tables":
        def pad(M):
            deg = M.sum(axis=1)
            width = max(1, int(deg.max()))
            tab = np.zeros((M.shape[0], width), dtype=np.int64)
            for v in range(M.shape[0]):
                nb = np.flatnonzero(M[v])
                tab[v, :nb.size] = nb
            return tab, deg.astype(np.int64)

        o, od = pad(A)
        i, idg = pad(A.T)
        return cls(o, od, i, idg)

    def draw(self, x: np.ndarray, forward: np.ndarray, u_out: np.ndarray,
             u_in: np.ndarray) -> np.ndarray:
        io = (u_out * self.out_deg[x]).astype(np.int64)
        ii = (u_in * self.in_deg[x]).astype(np.int64)
        return np.where(forward, self.out_tab[x, io], self.in_tab[x, ii])


def _check_semidegree(A: np.ndarray) -> None:
    if min(A.sum(axis=0).min(), A.sum(axis=1).min()) < 1:
        raise InvalidArgument("the allocation digraph needs minimum semidegree at least 1")


def _levels(T: OrientedTree) -> list[np.ndarray]:
    depth = T.depths()
    order = np.argsort(depth, kind="stable")
    bounds = np.searchsorted(depth[order], np.arange(0, int(depth.max()) + 2))
    return [order[a:b] for a, b in zip(bounds[:-1], bounds[1:])]


def allocate(T: OrientedTree, order: AncestralOrder | None, D, x1: int,
             seed=None) -> Allocation:
    """Random homomorphism: map the root to x1 and every sibling class to one random neighbour.

    When the first child of t is reached, x+ is drawn uniformly from the
    out-neighbours of phi(t) and x- from its in-neighbours; all out-children
    of t go to x+ and all in-children to x-.  Both draws are made per parent,
    so the law of the output does not depend on the ancestral order, and the
    work is done one depth level at a time.
    """
    A = D.adj if isinstance(D, Digraph) else np.asarray(D, dtype=bool)
    _check_semidegree(A)
    if not 0 <= x1 < A.shape[0]:
        raise InvalidArgument(f"x1={x1} is not a vertex of D")
    if order is not None and not order.is_ancestral(T):
        raise InvalidArgument("order is not ancestral for T")
    rng = np.random.default_rng(seed)
    img = np.empty(T.n, dtype=np.int64)
    img[T.root] = x1
    if T.n > 1:
        tables = _Tables.of(A)
        u = rng.random((T.n, 2))
        ot, od, it, idg = (x.tolist() for x in (tables.out_tab, tables.out_deg,
                                                tables.in_tab, tables.in_deg))
        parent, down = T.parent.tolist(), T.down.tolist()
        for level in _levels(T)[1:]:
            if level.size == 1:
                # numpy overhead dominates on long thin stretches such as paths
                v = int(level[0])
                p = parent[v]
                x = int(img[p])
                if down[v]:
                    img[v] = ot[x][int(u[p, 1] * od[x])]
                else:
                    img[v] = it[x][int(u[p, 0] * idg[x])]
                continue
            p = T.parent[level]
            img[level] = tables.draw(img[p], T.down[level], u[p, 1], u[p, 0])
    phi = Allocation(img, A.shape[0])
    assert phi.is_homomorphism(T, Digraph.from_adjacency(A, copy=False))
    return phi


# ---------------------------------------------------------------------------
# random P-walks


def _orientation(P, length: int | None = None) -> np.ndarray:
    """Edge orientations of a path: True for a forward step."""
    if isinstance(P, OrientedTree):
        if P.max_degree() > 2:
            raise InvalidArgument("P must be a path")
        walk = [P.root]
        if len(P.neighbours(P.root)) > 1:
            raise InvalidArgument("P must be rooted at an end")
        prev = -1
        while True:
            nxt = [x for x in P.neighbours(walk[-1]) if x != prev]
            if not nxt:
                break
            prev = walk[-1]
            walk.append(nxt[0])
        return np.array([P.has_arc(a, b) for a, b in zip(walk, walk[1:])], dtype=bool)
    if isinstance(P, str):
        if set(P) - {"+", "-"}:
            raise InvalidArgument("path strings use '+' and '-'")
        return np.array([c == "+" for c in P], dtype=bool)
    if isinstance(P, (int, np.integer)):
        return np.ones(int(P), dtype=bool)
    return np.asarray(P, dtype=bool)


def directed_pattern(length: int) -> str:
    return "+" * length


def antidirected_pattern(length: int) -> str:
    return "".join("+-"[i % 2] for i in range(length))


def random_p_walk(D, P, v0: int, seed=None) -> list[int]:
    """X_0 = v0, then each step to a uniform out- or in-neighbour as P dictates."""
    A = D.adj if isinstance(D, Digraph) else np.asarray(D, dtype=bool)
    _check_semidegree(A)
    steps = _orientation(P)
    rng = np.random.default_rng(seed)
    walk = [int(v0)]
    for fwd in steps:
        nb = np.flatnonzero(A[walk[-1]] if fwd else A[:, walk[-1]])
        walk.append(int(nb[rng.integers(nb.size)]))
    return walk


def sample_p_walks(D, P, v0: int, samples: int, seed=None) -> np.ndarray:
    """Many independent random P-walks from v0 at once; row j is walk j."""
    A = D.adj if isinstance(D, Digraph) else np.asarray(D, dtype=bool)
    _check_semidegree(A)
    if samples < 0:
        raise InvalidArgument("samples must be non-negative")
    steps = _orientation(P)
    tabs = _Tables.of(A)
    rng = np.random.default_rng(seed)
    out = np.empty((samples, steps.size + 1), dtype=np.int64)
    out[:, 0] = v0
    for i, fwd in enumerate(steps):
        u = rng.random(samples)
        f = np.full(samples, bool(fwd))
        out[:, i + 1] = tabs.draw(out[:, i], f, u, u)
    return out


@dataclass
class WalkDistribution:
    """Exact law of X_0, ..., X_r for a random P-walk; ``probs[i]`` is the law of X_i."""

    probs: np.ndarray

    @property
    def k(self) -> int:
        return self.probs.shape[1]

    def m_values(self) -> np.ndarray:
        """m(X_i) = sum_x (P(X_i = x) - 1/k)^2 for every step."""
        return ((self.probs - 1 / self.k) ** 2).sum(axis=1)

    def max_sq_deviation(self) -> np.ndarray:
        return ((self.probs - 1 / self.k) ** 2).max(axis=1)

    def final(self) -> np.ndarray:
        return self.probs[-1]


def mixing_bound(k: int, steps: int) -> float:
    return (1 - 1 / (2 * k ** 3)) ** steps


def walk_distribution(D, P, v0) -> WalkDistribution:
    """Push the point mass at v0 (or a start vector) through the walk's step operators."""
    A = D.adj if isinstance(D, Digraph) else np.asarray(D, dtype=bool)
    k = A.shape[0]
    deg = Digraph.from_adjacency(A).is_regular() if isinstance(D, np.ndarray) else D.is_regular()
    if not deg:
        raise InvalidArgument("walk_distribution needs a regular digraph")
    steps = _orientation(P)
    W = A.astype(float) / deg
    p = np.zeros(k)
    if np.ndim(v0) == 0:
        p[int(v0)] = 1.0
    else:
        p = np.asarray(v0, dtype=float).copy()
    out = np.empty((len(steps) + 1, k))
    out[0] = p
    for i, fwd in enumerate(steps):
        # forward: P(X = x) = sum_{y -> x} p_y / deg
        p = p @ W if fwd else W @ p
        out[i + 1] = p
    assert np.allclose(out.sum(axis=1), 1.0, atol=1e-9) and (out >= -1e-15).all()
    return WalkDistribution(out)


# ---------------------------------------------------------------------------
# conditional resampling


class _Resampler:
    """Redraws the image of one sibling class and everything below it.

    Given the rest of the allocation, the law of the redrawn part is the
    one ``allocate`` gives it, so homomorphism and the phi-degree bound
    are kept.  ``group`` (t, forward) means the children of t
    joined to it by out-arcs (forward) or in-arcs.
    """

    def __init__(self, T: OrientedTree, A: np.ndarray, img: np.ndarray, frozen=None):
        self.T, self.A, self.img = T, A, img
        self.tables = _Tables.of(A)
        tin = np.empty(T.n, dtype=np.int64)
        pre = []
        stack = [T.root]
        ch = T.children
        while stack:
            u = stack.pop()
            tin[u] = len(pre)
            pre.append(u)
            stack.extend(reversed(ch[u]))
        self.pre = np.asarray(pre, dtype=np.int64)
        self.tin = tin
        self.size = T.subtree_sizes()
        frozen = np.zeros(T.n, dtype=bool) if frozen is None else frozen
        groups = []
        for t in range(T.n):
            for fwd in (True, False):
                kids = [c for c in ch[t] if bool(T.down[c]) == fwd]
                if kids:
                    verts = np.concatenate([self.pre[tin[c]:tin[c] + self.size[c]] for c in kids])
                    if not frozen[verts].any():
                        groups.append((t, fwd, verts))
        self.groups = groups

    def propose(self, g: int, rng: np.random.Generator) -> np.ndarray:
        t, fwd, verts = self.groups[g]
        T, tab, img = self.T, self.tables, self.img
        new = {}
        x = img[t]
        deg = tab.out_deg[x] if fwd else tab.in_deg[x]
        row = tab.out_tab[x] if fwd else tab.in_tab[x]
        shared = {(int(t), fwd): int(row[rng.integers(deg)])}
        out = np.empty(len(verts), dtype=np.int64)
        for j, v in enumerate(verts.tolist()):
            p = int(T.parent[v])
            f = bool(T.down[v])
            key = (p, f)
            if key not in shared:
                y = new[p]
                d = tab.out_deg[y] if f else tab.in_deg[y]
                r = tab.out_tab[y] if f else tab.in_tab[y]
                shared[key] = int(r[rng.integers(d)])
            new[v] = shared[key]
            out[j] = new[v]
        return out


def rebalance_by_resampling(T: OrientedTree, A: np.ndarray, img: np.ndarray,
                            project: np.ndarray, target: np.ndarray, tolerance: int = 0,
                            frozen: np.ndarray | None = None, rng=None,
                            max_size: int = 64, max_proposals: int | None = None) -> np.ndarray:
    """Hill-climb the projected loads towards ``target`` by conditional resampling.

    ``img`` maps T into the digraph with adjacency A; ``project`` sends
    vertices of A to the counted classes.  A proposal redraws one sibling
    class of at most ``max_size`` vertices below it and is kept when the
    total deviation sum |load - target| drops.  Stops once half that
    deviation is at most ``tolerance``.  Returns the new image array.
    """
    rng = np.random.default_rng(rng)
    img = img.copy()
    ncls = len(target)
    loads = np.bincount(project[img], minlength=ncls)
    dev = int(np.abs(loads - target).sum())
    if dev // 2 <= tolerance:
        return img
    res = _Resampler(T, A, img, frozen)
    small = [g for g, (_, _, verts) in enumerate(res.groups) if len(verts) <= max_size]
    if not small:
        return img
    budget = max_proposals if max_proposals is not None else 60 * T.n + 20_000
    for _ in range(budget):
        g = small[int(rng.integers(len(small)))]
        verts = res.groups[g][2]
        new = res.propose(g, rng)
        change = (np.bincount(project[new], minlength=ncls)
                  - np.bincount(project[img[verts]], minlength=ncls))
        nd = int(np.abs(loads + change - target).sum())
        if nd < dev:
            img[verts] = new
            res.img = img
            loads += change
            dev = nd
            if dev // 2 <= tolerance:
                break
    return img


# ---------------------------------------------------------------------------
# blow-up allocation


def largest_remainder(shares: np.ndarray, total: int) -> np.ndarray:
    """Integers proportional to ``shares`` summing to ``total``."""
    shares = np.clip(np.asarray(shares, dtype=float), 0, None)
    if shares.sum() <= 0:
        raise InvalidArgument("shares must have positive sum")
    raw = shares / shares.sum() * total
    base = np.floor(raw).astype(np.int64)
    rest = total - int(base.sum())
    order = np.lexsort((np.arange(len(raw)), -(raw - base)))
    base[order[:rest]] += 1
    return base


def default_blowup_scale(n2: int, k: int) -> int:
    """max(8k, ceil(log log log n2) k) copies in total."""
    lll = math.log(math.log(math.log(max(n2, 16))))
    return max(8 * k, math.ceil(lll) * k)


@dataclass
class BlowupAllocation:
    phi: Allocation
    owner: np.ndarray
    counts: np.ndarray
    expander: Digraph
    blowup_image: np.ndarray

    def __iter__(self):
        return iter((self.phi,))


def blowup_digraph(core: np.ndarray, counts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Replace vertex i by counts[i] independent copies; returns (adjacency, owner)."""
    owner = np.repeat(np.arange(len(counts)), counts)
    return core[np.ix_(owner, owner)], owner


def blowup_allocate(T2: OrientedTree, R_core, weights, root_target: int, seed=None,
                    scale: int | None = None, eta: float | None = None,
                    return_details: bool = False):
    """Allocate T2 on a regular expander inside a weighted blow-up of the core.

    Integer ``weights`` are used as copy counts directly; otherwise they are
    shares, turned into counts summing to ``scale`` (default
    ``default_blowup_scale``).  The root's cluster keeps at least one copy.
    Each copy receives about the same number of tree vertices, so cluster
    i receives about counts[i] / sum(counts) of T2.
    """
    A = R_core.adj if isinstance(R_core, Digraph) else np.asarray(R_core, dtype=bool)
    k = A.shape[0]
    w = np.asarray(weights, dtype=float)
    if w.shape != (k,) or (w < 0).any():
        raise InvalidArgument("need one nonnegative weight per core vertex")
    rng = np.random.default_rng(seed)
    integral = np.allclose(w, np.round(w)) and scale is None
    if integral:
        counts = np.round(w).astype(np.int64)
    else:
        counts = largest_remainder(w, scale or default_blowup_scale(T2.n, k))
    if counts[root_target] == 0:
        counts[root_target] = 1
    B, owner = blowup_digraph(A, counts)
    size = len(owner)
    d0 = min_semidegree(Digraph.from_adjacency(B, copy=False)) if size > 1 else 0
    need = (0.5 + (eta or 0) / 2) * size
    if d0 < need or 2 * d0 <= size:
        raise ConstructionFailure(f"blow-up semidegree {d0} below {need:.1f}",
                                  stage="blowup_allocate", counts=counts.tolist())
    alpha_b = d0 / size - 0.5 - 1e-9
    try:
        J = regular_expander_subdigraph(B, alpha=alpha_b, seed=int(rng.integers(2**63)))
    except (ConstructionFailure, InvalidArgument) as exc:
        raise ConstructionFailure(f"no expander in the blow-up: {exc}",
                                  stage="blowup_allocate") from exc
    copies = np.flatnonzero(owner == root_target)
    start = int(copies[rng.integers(copies.size)])
    sub = allocate(T2, None, J.H, start, seed=int(rng.integers(2**63)))
    phi = Allocation(owner[sub.target], k)
    assert phi.is_homomorphism(T2, Digraph.from_adjacency(A, copy=False))
    res = BlowupAllocation(phi, owner, counts, J.H, sub.target)
    return res if return_details else phi


# ---------------------------------------------------------------------------
# shared helpers for the spanning allocations


def _piece(T: OrientedTree, vertices: np.ndarray, root: int) -> tuple[OrientedTree, np.ndarray]:
    """The subtree of T on ``vertices`` with local labels; returns (tree, local -> global)."""
    glob = np.sort(np.asarray(vertices, dtype=np.int64))
    local = np.full(T.n, -1, dtype=np.int64)
    local[glob] = np.arange(len(glob))
    arcs = []
    for v in glob.tolist():
        p = int(T.parent[v])
        if p >= 0 and local[p] >= 0:
            arcs.append((local[p], local[v]) if T.down[v] else (local[v], local[p]))
    return OrientedTree.from_arcs(len(glob), arcs, int(local[root])), glob


def _common_neighbour(A: np.ndarray, x: int, x_to_c: bool, y: int, c_to_y: bool,
                      load: np.ndarray) -> int:
    cand = (A[x] if x_to_c else A[:, x]) & (A[:, y] if c_to_y else A[y])
    idx = np.flatnonzero(cand)
    if idx.size == 0:
        raise ConstructionFailure(f"no common neighbour of {x} and {y}", stage="first pass")
    c = int(idx[np.argmin(load[idx])])
    load[c] += 1
    return c


def _core_alpha(core: np.ndarray) -> float:
    k = core.shape[0]
    d0 = min(core.sum(axis=0).min(), core.sum(axis=1).min())
    a = d0 / k - 0.5
    if a <= 0:
        raise InvalidArgument("core semidegree must exceed k/2")
    return float(a) - 1e-9


def _core_expander(core: np.ndarray, rng) -> Digraph:
    return regular_expander_subdigraph(core, alpha=_core_alpha(core),
                                       seed=int(rng.integers(2**63))).H


def _second_pass(Tr: OrientedTree, second: np.ndarray, root_cluster: int, core: np.ndarray,
            target2: np.ndarray, tolerance: int, rng, scale: int | None, log: dict):
    """Blow-up allocation of the second piece plus conditional resampling."""
    T2, glob = _piece(Tr, second, Tr.root)
    k = core.shape[0]
    if T2.n == 1:
        return glob, np.array([root_cluster])
    if (target2 < 0).any():
        raise ConstructionFailure("first piece overfills a cluster", stage="second pass",
                                  targets=target2.tolist())
    bl = blowup_allocate(T2, core, target2 / target2.sum(), root_cluster,
                         seed=int(rng.integers(2**63)),
                         scale=scale or default_blowup_scale(T2.n, k), return_details=True)
    before = np.abs(bl.phi.loads - target2).sum() // 2
    frozen = np.zeros(T2.n, dtype=bool)
    frozen[T2.root] = True
    img = rebalance_by_resampling(T2, bl.expander.adj, bl.blowup_image, bl.owner, target2,
                                  tolerance=tolerance, frozen=frozen, rng=rng)
    proj = bl.owner[img]
    log["second_pass"] = {"counts": bl.counts.tolist(), "moves_before": int(before),
                     "moves_after": int(np.abs(np.bincount(proj, minlength=k) - target2).sum() // 2)}
    return glob, proj


# ---------------------------------------------------------------------------
# many bare paths


@dataclass
class PathsAllocation:
    """Output of the many-paths allocation; iterates as (order, P0, PH, phi)."""

    tree: OrientedTree
    order: AncestralOrder
    P0: list[BarePath]
    PH: list[BarePath]
    Pdiamond: list[BarePath]
    phi: Allocation
    diamonds: list[Diamond]
    pattern: tuple[bool, bool]
    split: TreeSplit
    branches: dict = field(default_factory=dict)
    log: dict = field(default_factory=dict)

    def __iter__(self):
        return iter((self.order, self.P0, self.PH, self.phi))

    @property
    def skipped(self) -> list[int]:
        """Tree vertices left for the final matchings: the centres of PH."""
        return [p.centre for p in self.PH]


def _normalise(Tr: OrientedTree, p: BarePath) -> BarePath:
    vs = p.vertices
    if Tr.parent[vs[0]] == vs[1]:
        vs = vs[::-1]
    return BarePath(tuple(vs))


def _middle_pattern(Tr: OrientedTree, p: BarePath) -> tuple[bool, bool]:
    a, b, c = p.vertices[2:5]
    return Tr.has_arc(a, b), Tr.has_arc(b, c)


def allocate_spanning_many_paths(T: OrientedTree, paths: Sequence[BarePath] | None,
                                 R: ReducedDigraph, H: Sequence[int] | None,
                                 params: ParamHierarchy, seed=None,
                                 scale: int | None = None) -> PathsAllocation:
    """Exactly balanced allocation of T to R* using order-7 bare paths as adjusters.

    The tree is split at a vertex r into a small piece T1 holding many of
    the paths and a larger piece T2.  Setup: the paths inside T1 are cut
    into P0 (one per exceptional vertex, centre mapped onto it), PH (centre
    sections along the Hamilton cycle H, equally many centres per cluster)
    and Pd (centre sections on the branches of diamonds of one common
    pattern).  The first pass allocates T1 with every path contracted to a vertex
    on a regular expander of the core.  The second pass allocates T2 on an
    expander inside a weighted blow-up of the core and then repairs the
    remaining imbalance by conditional resampling.  The balancing pass moves centres
    of Pd between diamond branches until every cluster load is exact.
    """
    rng = np.random.default_rng(seed)
    k = R.k
    n = T.n
    s0 = len(R.v0)
    core = R.core.adj
    if H is None:
        H = R.cycle or list(range(k))
    H = [int(h) for h in H]
    if sorted(H) != list(range(k)) or not all(core[a, b] for a, b in zip(H, H[1:] + H[:1])):
        raise InvalidArgument("H is not a Hamilton cycle of the core")
    pos = np.empty(k, dtype=np.int64)
    pos[H] = np.arange(k)
    succ = np.asarray([H[(pos[i] + 1) % k] for i in range(k)])
    pred = np.asarray([H[(pos[i] - 1) % k] for i in range(k)])
    if (n - s0) % k:
        raise InvalidArgument(f"n - |V0| = {n - s0} is not divisible by k = {k}")
    m = (n - s0) // k
    if paths is None:
        paths = disjoint_bare_paths(T, 7)
    paths = list(paths)
    if any(len(p) != 7 or not p.is_bare(T) for p in paths):
        raise InvalidArgument("every path must be a bare path of order 7")
    if len(paths) < MIN_STRUCTURE_SHARE * n:
        raise InvalidArgument(f"{len(paths)} bare paths, need at least {MIN_STRUCTURE_SHARE * n:g}")
    log: dict = {}

    # Setup: split, reroot at the shared vertex, choose P0, PH, Pd inside T1
    split = split_tree(T, [p.centre for p in paths])
    r = split.shared
    Tr = T.rerooted(r)
    order = tidy_order(Tr, split)
    in_first = np.zeros(n, dtype=bool)
    in_first[split.first] = True
    inside = [_normalise(Tr, p) for p in paths
              if in_first[list(p.vertices)].all() and r not in p.vertices]
    pats = Counter(_middle_pattern(Tr, p) for p in inside)
    if not pats:
        raise ConstructionFailure("no bare path inside the first piece", stage="setup")
    pattern = min(pats, key=lambda q: (-pats[q], 2 * q[0] + q[1]))
    ref = [p for p in inside if _middle_pattern(Tr, p) == pattern]
    other = [p for p in inside if _middle_pattern(Tr, p) != pattern]
    unit = 2 * (k - 1)
    per_branch = max(1, len(ref) // (2 * unit))
    if len(ref) < unit:
        raise ConstructionFailure(f"{len(ref)} paths of the common pattern, need {unit}",
                                  stage="setup")
    Pd = ref[:unit * per_branch]
    rest = other + ref[unit * per_branch:]
    if len(rest) < s0 + k:
        raise ConstructionFailure(f"{len(rest)} paths left for P0 and PH, need {s0 + k}",
                                  stage="setup")
    P0 = rest[:s0]
    rest = rest[s0:]
    PH = rest[:k * (len(rest) // k)]
    log["setup"] = {"paths": len(paths), "inside": len(inside), "P0": len(P0),
                    "PH": len(PH), "Pd": len(Pd), "per_branch": per_branch,
                    "pattern": "".join("+" if b else "-" for b in pattern)}

    # contracted first piece on a regular expander of the core
    T1, glob1 = _piece(Tr, split.first, r)
    local1 = np.full(n, -1, dtype=np.int64)
    local1[glob1] = np.arange(len(glob1))
    con = contract_bare_paths(T1, [BarePath(tuple(int(local1[v]) for v in p.vertices))
                                   for p in P0 + PH + Pd])
    J = _core_expander(core, rng)
    x_root = int(rng.integers(k))
    small = allocate(con.tree, None, J, x_root, seed=int(rng.integers(2**63)))
    target = np.full(n, -1, dtype=np.int64)
    target[glob1] = small.target[con.forward]
    diamonds = _core_diamonds(core, pattern)
    link_load = np.zeros(k, dtype=np.int64)
    mid_load = np.zeros(k, dtype=np.int64)

    def finish_path(p: BarePath, v3: int, v4: int, v5: int) -> None:
        vs = p.vertices
        x = int(target[vs[0]])
        target[vs[2]], target[vs[3]], target[vs[4]] = v3, v4, v5
        target[vs[1]] = _common_neighbour(core, x, Tr.has_arc(vs[0], vs[1]),
                                          v3, Tr.has_arc(vs[1], vs[2]), mid_load)
        target[vs[5]] = _common_neighbour(core, v5, Tr.has_arc(vs[4], vs[5]),
                                          x, Tr.has_arc(vs[5], vs[6]), mid_load)
        target[vs[6]] = x

    full = R.full().adj
    if s0:
        B3 = np.zeros((s0, k), dtype=bool)
        B5 = np.zeros((s0, k), dtype=bool)
        for j, p in enumerate(P0):
            a, b, c = p.vertices[2:5]
            B3[j] = full[:k, k + j] if Tr.has_arc(a, b) else full[k + j, :k]
            B5[j] = full[k + j, :k] if Tr.has_arc(b, c) else full[:k, k + j]
        c3 = greedy_cover(B3, 0.0, load=link_load)
        link_load += np.bincount(c3, minlength=k)
        c5 = greedy_cover(B5, 0.0, load=link_load)
        link_load += np.bincount(c5, minlength=k)
        for j, p in enumerate(P0):
            finish_path(p, int(c3[j]), k + j, int(c5[j]))
    for t, p in enumerate(PH):
        c = H[t % k]
        ab, bc = _middle_pattern(Tr, p)
        finish_path(p, int(pred[c] if ab else succ[c]), c, int(succ[c] if bc else pred[c]))
    branches: dict[int, tuple[list, list]] = {i: ([], []) for i in range(len(diamonds))}
    for t, p in enumerate(Pd):
        i = (t // 2) % len(diamonds)
        side = t % 2
        dmd = diamonds[i]
        finish_path(p, dmd.prefix, dmd.middle[side], dmd.suffix)
        branches[i][side].append(tuple(int(v) for v in p.vertices[2:5]))
    log["first_pass"] = {"root_cluster": x_root, "first_piece": int(len(glob1))}

    # the second piece on a weighted blow-up
    load1 = np.bincount(target[glob1], minlength=k + s0)[:k]
    target2 = m - load1
    target2[x_root] += 1
    glob2, proj = _second_pass(Tr, split.second, x_root, core, target2, per_branch, rng, scale, log)
    target[glob2] = proj
    phi = Allocation(target, k + s0)

    # exact balance by moving centres across diamonds
    delta = np.zeros(k + s0, dtype=np.int64)
    delta[:k] = m - phi.loads[:k]
    moves = int(np.abs(delta).sum()) // 2
    log["balancing"] = {"moves": moves}
    if moves:
        phi = shift_weights(phi, diamonds, branches, delta, T=Tr, R=Digraph.from_adjacency(full),
                            budget=moves)
    res = PathsAllocation(Tr, order, P0, PH, Pd, phi, list(diamonds), pattern, split,
                          branches, log)
    problems = check_paths_allocation(res, R, H, params)
    if problems:
        raise ConstructionFailure(f"allocation postconditions failed: {problems}",
                                  stage="allocate_spanning_many_paths", problems=problems)
    return res


def _core_diamonds(core: np.ndarray, pattern) -> list[Diamond]:
    return p_connected_subgraph(core, pattern, _core_alpha(core), check_degree=False).diamonds


def check_paths_allocation(res: PathsAllocation, R: ReducedDigraph, H: Sequence[int],
                           params: ParamHierarchy) -> dict[str, str]:
    """Properties (i)-(vii) of the many-paths allocation; returns the failures."""
    T, phi = res.tree, res.phi
    k, s0, n = R.k, len(R.v0), T.n
    full = R.full()
    problems: dict[str, str] = {}
    if not phi.is_homomorphism(T, full):
        problems["hom"] = f"arcs not preserved: {phi.bad_arcs(T, full)[:5]}"
    if phi.max_degree(T) > 4:
        problems["i"] = f"phi-degree {phi.max_degree(T)} > 4"
    centres = sorted(int(phi.target[p.centre]) for p in res.P0)
    if centres != list(range(k, k + s0)):
        problems["ii"] = "centres of P0 do not biject onto V0"
    loads = phi.loads
    if s0 and not (loads[k:] == 1).all():
        problems["iii"] = f"V0 loads {loads[k:].tolist()} are not all 1"
    per = np.bincount([phi.target[c] for c in res.skipped], minlength=k)[:k]
    need = params.lam * n / (48 * k)
    if len(res.PH) and per.min() < need:
        problems["iv"] = f"only {per.min()} PH centres in some cluster, need {need:.2f}"
    if not len(res.PH):
        problems["iv"] = "PH is empty"
    nb = np.zeros(k, dtype=np.int64)
    for p in res.P0:
        for v in (p.vertices[2], p.vertices[4]):
            nb[phi.target[v]] += 1
    cap = 2 * params.eps * n / (params.alpha * k)
    if nb.max(initial=0) > cap:
        problems["v"] = f"{nb.max()} V0-neighbour images in one cluster > {cap:.1f}"
    Hset = {(int(a), int(b)) for a, b in zip(H, list(H[1:]) + list(H[:1]))}
    for p in res.PH:
        for a, b in zip(p.vertices[2:4], p.vertices[3:5]):
            u, v = (a, b) if T.has_arc(a, b) else (b, a)
            if (int(phi.target[u]), int(phi.target[v])) not in Hset:
                problems["vi"] = f"PH path {p.vertices} leaves H"
                break
    if len(set(loads[:k].tolist())) != 1:
        problems["vii"] = f"cluster loads {loads[:k].tolist()} not equal"
    return problems


# ---------------------------------------------------------------------------
# many leaves


@dataclass
class LeavesAllocation:
    """Output of the many-leaves allocation; iterates as (phi, edges)."""

    tree: OrientedTree
    order: AncestralOrder
    phi: Allocation
    edges: list[LeafEdge]
    outward: bool
    exceptional_leaves: dict[int, int]
    split: TreeSplit
    H: list[int]
    log: dict = field(default_factory=dict)

    def __iter__(self):
        return iter((self.phi, self.edges))

    @property
    def skipped(self) -> list[int]:
        """Leaves of the edges that ride an arc of H, left for the final matchings."""
        k = len(self.H)
        Hset = {(a, b) for a, b in zip(self.H, self.H[1:] + self.H[:1])}
        out = []
        tgt = self.phi.target
        for e in self.edges:
            if e.leaf in self.exceptional_leaves:
                continue
            a, b = int(tgt[e.tail]), int(tgt[e.head])
            if a < k and b < k and (a, b) in Hset:
                out.append(e.leaf)
        return out


def allocate_spanning_many_leaves(T: OrientedTree, R: ReducedDigraph,
                                  H: Sequence[int] | None, params: ParamHierarchy,
                                  seed=None, scale: int | None = None) -> LeavesAllocation:
    """Exactly balanced allocation of T to R* using leaf edges as adjusters.

    The majority orientation of a maximum set of disjoint leaf edges is
    kept.  The tree is split so the small piece T1 holds at least a third
    of those edges; T1 without their leaves is allocated on a regular
    expander of the core.  One leaf goes to each exceptional vertex whose
    link contains its stem's cluster; the other leaves follow H.  T2 is
    handled as in the many-paths case.  Finally single leaves move to
    another neighbour of their stem's cluster, chaining moves by a
    breadth-first search over clusters, until every load is exact.
    """
    rng = np.random.default_rng(seed)
    k = R.k
    n = T.n
    s0 = len(R.v0)
    core = R.core.adj
    if H is None:
        H = R.cycle or list(range(k))
    H = [int(h) for h in H]
    if sorted(H) != list(range(k)) or not all(core[a, b] for a, b in zip(H, H[1:] + H[:1])):
        raise InvalidArgument("H is not a Hamilton cycle of the core")
    pos = np.empty(k, dtype=np.int64)
    pos[H] = np.arange(k)
    succ = np.asarray([H[(pos[i] + 1) % k] for i in range(k)])
    pred = np.asarray([H[(pos[i] - 1) % k] for i in range(k)])
    if (n - s0) % k:
        raise InvalidArgument(f"n - |V0| = {n - s0} is not divisible by k = {k}")
    m = (n - s0) // k
    edges = disjoint_leaf_edges(T) if n >= 2 else []
    if len(edges) < MIN_STRUCTURE_SHARE * n:
        raise InvalidArgument(f"{len(edges)} disjoint leaf edges, need at least "
                              f"{MIN_STRUCTURE_SHARE * n:g}")
    n_out = sum(e.outward for e in edges)
    outward = n_out >= len(edges) - n_out
    edges = [e for e in edges if e.outward == outward]
    log: dict = {"setup": {"leaf_edges": len(edges), "outward": outward}}

    split = split_tree(T, [e.stem for e in edges])
    r = split.shared
    Tr = T.rerooted(r)
    order = tidy_order(Tr, split)
    in_first = np.zeros(n, dtype=bool)
    in_first[split.first] = True
    E1 = [e for e in edges if in_first[e.leaf] and in_first[e.stem] and r not in (e.leaf, e.stem)]
    if len(E1) < s0 + k:
        raise ConstructionFailure(f"{len(E1)} leaf edges in the first piece, need {s0 + k}",
                                  stage="setup")
    leaves1 = np.zeros(n, dtype=bool)
    leaves1[[e.leaf for e in E1]] = True

    # first piece without its leaves
    rest = np.flatnonzero(in_first & ~leaves1)
    T1, glob1 = _piece(Tr, rest, r)
    J = _core_expander(core, rng)
    x_root = int(rng.integers(k))
    small = allocate(T1, None, J, x_root, seed=int(rng.integers(2**63)))
    target = np.full(n, -1, dtype=np.int64)
    target[glob1] = small.target
    full = R.full().adj
    exceptional: dict[int, int] = {}
    used = np.zeros(len(E1), dtype=bool)
    link_load = np.zeros(k, dtype=np.int64)
    stem_img = np.asarray([target[e.stem] for e in E1], dtype=np.int64)
    for j in range(s0):
        ok = full[:k, k + j] if outward else full[k + j, :k]
        cand = np.flatnonzero(ok[stem_img] & ~used)
        if cand.size == 0:
            raise ConstructionFailure(f"no leaf edge can reach exceptional vertex {j}",
                                      stage="first pass")
        best = cand[np.lexsort((cand, link_load[stem_img[cand]]))[0]]
        used[best] = True
        link_load[stem_img[best]] += 1
        target[E1[best].leaf] = k + j
        exceptional[E1[best].leaf] = j
    for i, e in enumerate(E1):
        if not used[i]:
            target[e.leaf] = succ[stem_img[i]] if outward else pred[stem_img[i]]
    log["first_pass"] = {"root_cluster": x_root, "first_piece": int(in_first.sum()),
                     "E1": len(E1)}

    # second piece
    glob_first = np.flatnonzero(in_first)
    load1 = np.bincount(target[glob_first], minlength=k + s0)[:k]
    target2 = m - load1
    target2[x_root] += 1
    movable = [e for i, e in enumerate(E1) if not used[i]]
    glob2, proj = _second_pass(Tr, split.second, x_root, core, target2,
                          min(k, len(movable) // (4 * k)), rng, scale, log)
    target[glob2] = proj

    # move single leaves between neighbours of their stem's cluster
    delta = m - np.bincount(target, minlength=k + s0)[:k]
    log["balancing"] = {"moves": int(np.abs(delta).sum()) // 2}
    _shift_leaves(target, movable, core, outward, delta)
    phi = Allocation(target, k + s0)
    res = LeavesAllocation(Tr, order, phi, E1, outward, exceptional, split, H, log)
    problems = check_leaves_allocation(res, R, params)
    if problems:
        raise ConstructionFailure(f"allocation postconditions failed: {problems}",
                                  stage="allocate_spanning_many_leaves", problems=problems)
    return res


def _shift_leaves(target: np.ndarray, movable: list[LeafEdge], core: np.ndarray,
                  outward: bool, delta: np.ndarray) -> None:
    """Re-target leaves until cluster loads change by delta; moves in place."""
    k = core.shape[0]
    delta = delta.copy()
    if delta.sum() != 0:
        raise InvalidArgument("shift amounts must sum to zero")
    moved = np.zeros(len(movable), dtype=bool)
    while (delta != 0).any():
        src = int(np.flatnonzero(delta < 0)[0])
        # BFS from src: x -> y if an unmoved leaf at x can go to y
        by_cluster: dict[int, list[int]] = {}
        for i, e in enumerate(movable):
            if not moved[i]:
                by_cluster.setdefault(int(target[e.leaf]), []).append(i)
        prev = {src: None}
        queue = deque([src])
        hit = None
        while queue and hit is None:
            x = queue.popleft()
            for i in by_cluster.get(x, ()):
                s = int(target[movable[i].stem])
                nbrs = np.flatnonzero(core[s] if outward else core[:, s])
                for y in nbrs.tolist():
                    if y not in prev:
                        prev[y] = (x, i)
                        if delta[y] > 0:
                            hit = y
                            break
                        queue.append(y)
                if hit is not None:
                    break
        if hit is None:
            raise ConstructionFailure(f"no leaf can carry weight out of cluster {src}",
                                      stage="balancing", cluster=src)
        y = hit
        while prev[y] is not None:
            x, i = prev[y]
            target[movable[i].leaf] = y
            moved[i] = True
            y = x
        delta[src] += 1
        delta[hit] -= 1


def check_leaves_allocation(res: LeavesAllocation, R: ReducedDigraph,
                            params: ParamHierarchy) -> dict[str, str]:
    """Properties (i)-(iv) of the many-leaves allocation; returns the failures."""
    T, phi = res.tree, res.phi
    k, s0, n = R.k, len(R.v0), T.n
    full = R.full()
    problems: dict[str, str] = {}
    if not phi.is_homomorphism(T, full):
        problems["hom"] = f"arcs not preserved: {phi.bad_arcs(T, full)[:5]}"
    if len({e.outward for e in res.edges}) > 1:
        problems["i"] = "leaf edges are not uniformly oriented"
    loads = phi.loads
    leaf_set = {e.leaf for e in res.edges}
    pre = [np.flatnonzero(phi.target == k + j) for j in range(s0)]
    if any(len(p) != 1 or int(p[0]) not in leaf_set for p in pre):
        problems["ii"] = "some exceptional vertex does not receive exactly one leaf"
    tgt = phi.target
    count = Counter((int(tgt[e.tail]), int(tgt[e.head])) for e in res.edges)
    need = params.lam * n / (32 * k)
    Hs = res.H
    worst = min(count.get((a, b), 0) for a, b in zip(Hs, Hs[1:] + Hs[:1]))
    if worst < need:
        problems["iii"] = f"an arc of H carries {worst} leaf edges, need {need:.2f}"
    if len(set(loads[:k].tolist())) != 1:
        problems["iv"] = f"cluster loads {loads[:k].tolist()} not equal"
    return problems
