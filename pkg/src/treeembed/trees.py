"""Structural operations on oriented trees and random tree generators."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .errors import ConstructionFailure, InvalidArgument
from .graph import OrientedTree


# ----------------------------------------------------------------- small trees

def path_tree(n: int, pattern: str | None = None) -> OrientedTree:
    """Path 0-1-...-(n-1) rooted at 0.

    ``pattern`` is a string of '+' (i -> i+1) and '-' (i+1 -> i) of length
    n - 1; the default is a directed path.
    """
    pattern = pattern if pattern is not None else "+" * (n - 1)
    if len(pattern) != max(0, n - 1):
        raise InvalidArgument("pattern length must be n - 1")
    parent = np.arange(-1, n - 1)
    down = np.array([True] + [c == "+" for c in pattern])
    return OrientedTree(parent, down, 0)


def star_tree(leaves: int, out: bool = True) -> OrientedTree:
    parent = np.zeros(leaves + 1, dtype=np.int64)
    parent[0] = -1
    return OrientedTree(parent, np.full(leaves + 1, out), 0)


def spider_tree(legs: int, length: int, out: bool = True) -> OrientedTree:
    """Centre 0 with ``legs`` directed legs of ``length`` edges each."""
    n = 1 + legs * length
    parent = np.empty(n, dtype=np.int64)
    parent[0] = -1
    for leg in range(legs):
        start = 1 + leg * length
        parent[start] = 0
        parent[start + 1:start + length] = np.arange(start, start + length - 1)
    return OrientedTree(parent, np.full(n, out), 0)


def complete_binary_tree(order: int) -> OrientedTree:
    """Heap-ordered binary tree on ``order`` vertices, all edges pointing down."""
    parent = (np.arange(order) - 1) // 2
    parent[0] = -1
    return OrientedTree(parent, np.ones(order, dtype=bool), 0)


def leaf_is_out(T: OrientedTree, leaf: int) -> bool:
    """True for an out-leaf (its single edge points at it)."""
    p = int(T.parent[leaf])
    if p >= 0:
        return bool(T.down[leaf])
    (c,) = T.children[leaf]
    return not bool(T.down[c])


# ------------------------------------------------------------- tree partitions

@dataclass
class TreeSplit:
    """Two subtrees sharing exactly one vertex and covering every edge."""

    first: np.ndarray
    second: np.ndarray
    shared: int

    def sizes(self) -> tuple[int, int]:
        return len(self.first), len(self.second)


def is_tree_partition(T: OrientedTree, parts: Sequence[Sequence[int]]) -> bool:
    """Edge-disjoint subtrees whose vertex and edge sets cover T."""
    membership = np.zeros((len(parts), T.n), dtype=bool)
    for i, p in enumerate(parts):
        membership[i, np.asarray(p, dtype=np.int64)] = True
    if not membership.any(axis=0).all():
        return False
    edge_owner = np.zeros(T.n, dtype=np.int64)
    child = np.flatnonzero(T.parent >= 0)
    par = T.parent[child]
    for i in range(len(parts)):
        edge_owner[child] += membership[i, child] & membership[i, par]
    if (edge_owner[child] != 1).any():
        return False
    for i in range(len(parts)):
        verts = membership[i].sum()
        edges = (membership[i, child] & membership[i, par]).sum()
        if verts and edges != verts - 1:
            return False
    return True


def split_tree(T: OrientedTree, L: Sequence[int]) -> TreeSplit:
    """Tree-partition into two pieces each holding at least |L|/3 vertices of L.

    Walks from the root into any child subtree holding more than 2|L|/3 of
    L, then packs the branches at the stopping vertex into two groups.
    A one-vertex tree yields the degenerate pair (T, T).
    """
    L = np.unique(np.asarray(L, dtype=np.int64))
    if L.size == 0:
        raise InvalidArgument("L must be nonempty")
    if T.n == 1:
        v = np.array([0])
        return TreeSplit(v, v.copy(), 0)
    in_L = np.zeros(T.n, dtype=np.int64)
    in_L[L] = 1
    order = T.bfs_order()
    cnt = in_L.copy()
    for v in reversed(order[1:]):
        cnt[T.parent[v]] += cnt[v]
    total = int(L.size)
    v = T.root
    while True:
        heavy = [c for c in T.children[v] if 3 * cnt[c] > 2 * total]
        if not heavy:
            break
        v = heavy[0]
    # branches at v: child subtrees and (unless v is the root) the part above
    branches: list[tuple[int, int]] = [(int(cnt[c]), c) for c in T.children[v]]
    if v != T.root:
        branches.append((total - int(cnt[v]), -1))
    branches.sort(key=lambda b: (-b[0], b[1]))
    own = int(in_L[v])
    need = total / 3
    first_keys: list[int] = []
    acc = own
    for c_cnt, key in branches:
        if acc >= need and first_keys:
            break
        first_keys.append(key)
        acc += c_cnt
    second_keys = [key for _, key in branches if key not in first_keys]

    sub = _subtree_masks(T, order)

    def collect(keys: list[int]) -> np.ndarray:
        mask = np.zeros(T.n, dtype=bool)
        for key in keys:
            if key == -1:
                mask |= ~sub(v)
            else:
                mask |= sub(key)
        mask[v] = True
        return np.flatnonzero(mask)

    first, second = collect(first_keys), collect(second_keys)
    if len(first) > len(second):
        first, second = second, first
    result = TreeSplit(first, second, int(v))
    c1, c2 = in_L[first].sum(), in_L[second].sum()
    if 3 * c1 < total or 3 * c2 < total:
        raise ConstructionFailure("split did not balance L", stage="split_tree",
                                  counts=(int(c1), int(c2)))
    return result


def _subtree_masks(T: OrientedTree, order: list[int]):
    tin, tout = euler_intervals(T)
    pos_to_vertex = np.empty(T.n, dtype=np.int64)
    pos_to_vertex[tin] = np.arange(T.n)

    def sub(u: int) -> np.ndarray:
        mask = np.zeros(T.n, dtype=bool)
        mask[pos_to_vertex[tin[u]:tout[u]]] = True
        return mask

    return sub


def euler_intervals(T: OrientedTree) -> tuple[np.ndarray, np.ndarray]:
    """Pre-order entry times; the subtree of u occupies positions [tin[u], tout[u])."""
    tin = np.empty(T.n, dtype=np.int64)
    size = T.subtree_sizes()
    t = 0
    stack = [T.root]
    ch = T.children
    while stack:
        u = stack.pop()
        tin[u] = t
        t += 1
        stack.extend(reversed(ch[u]))
    return tin, tin + size


# -------------------------------------------------------------- ancestral order

@dataclass
class AncestralOrder:
    order: np.ndarray
    tidy: bool = False
    position: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.order = np.asarray(self.order, dtype=np.int64)
        self.position = np.empty(len(self.order), dtype=np.int64)
        self.position[self.order] = np.arange(len(self.order))

    def __len__(self) -> int:
        return len(self.order)

    def __iter__(self):
        return iter(self.order.tolist())

    def is_ancestral(self, T: OrientedTree) -> bool:
        if len(self.order) != T.n or self.order[0] != T.root:
            return False
        if not np.array_equal(np.sort(self.order), np.arange(T.n)):
            return False
        nonroot = np.flatnonzero(T.parent >= 0)
        return bool((self.position[T.parent[nonroot]] < self.position[nonroot]).all())

    def open_counts(self, T: OrientedTree) -> np.ndarray:
        """Entry i: vertices among the first i+1 with a child outside that prefix."""
        # vertex v is open on prefixes [pos(v), last child position)
        last_child = np.full(T.n, -1, dtype=np.int64)
        nonroot = np.flatnonzero(T.parent >= 0)
        np.maximum.at(last_child, T.parent[nonroot], self.position[nonroot])
        delta = np.zeros(T.n + 1, dtype=np.int64)
        has = last_child >= 0
        np.add.at(delta, self.position[has], 1)
        np.add.at(delta, last_child[has], -1)
        return np.cumsum(delta)[:T.n]

    def max_open(self, T: OrientedTree) -> int:
        return int(self.open_counts(T).max())


def _smallest_first_dfs(T: OrientedTree, start: int, allowed: np.ndarray | None,
                        size: np.ndarray) -> list[int]:
    out = []
    stack = [start]
    ch = T.children
    while stack:
        u = stack.pop()
        out.append(u)
        kids = ch[u] if allowed is None else [c for c in ch[u] if allowed[c]]
        kids = sorted(kids, key=lambda c: (size[c], c))
        stack.extend(reversed(kids))
    return out


def tidy_order(T: OrientedTree, split: TreeSplit | None = None) -> AncestralOrder:
    """Depth-first order visiting smaller child subtrees first.

    Every prefix then has at most log2 n open vertices.  With ``split`` whose
    shared vertex is the root, all of the smaller piece comes first.
    """
    size = T.subtree_sizes()
    if split is None:
        return AncestralOrder(_smallest_first_dfs(T, T.root, None, size), tidy=True)
    if split.shared != T.root:
        raise InvalidArgument("the split must share exactly the root")
    first, second = split.first, split.second
    if len(first) > len(second):
        first, second = second, first
    if not is_tree_partition(T, [first, second]) or len(np.intersect1d(first, second)) != 1:
        raise InvalidArgument("not a tree-partition sharing one vertex")
    in_first = np.zeros(T.n, dtype=bool)
    in_first[first] = True
    in_second = np.zeros(T.n, dtype=bool)
    in_second[second] = True
    part1 = _smallest_first_dfs(T, T.root, in_first, _restricted_sizes(T, in_first))
    part2 = _smallest_first_dfs(T, T.root, in_second, _restricted_sizes(T, in_second))
    return AncestralOrder(part1 + part2[1:], tidy=True)


def _restricted_sizes(T: OrientedTree, mask: np.ndarray) -> np.ndarray:
    size = mask.astype(np.int64)
    for v in reversed(T.bfs_order()[1:]):
        if mask[v]:
            size[T.parent[v]] += size[v]
    return size


# ------------------------------------------------------------------ bare paths

@dataclass(frozen=True)
class BarePath:
    vertices: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.vertices)

    def __iter__(self):
        return iter(self.vertices)

    def __getitem__(self, i):
        return self.vertices[i]

    @property
    def centre(self) -> int:
        return self.vertices[len(self.vertices) // 2]

    def is_bare(self, T: OrientedTree) -> bool:
        deg = T.degrees()
        vs = self.vertices
        if len(set(vs)) != len(vs):
            return False
        adjacent = all(T.parent[a] == b or T.parent[b] == a for a, b in zip(vs, vs[1:]))
        return adjacent and all(deg[v] == 2 for v in vs[1:-1])


def bare_path_decomposition(T: OrientedTree) -> list[BarePath]:
    """The maximal bare paths: cut at every vertex whose degree is not 2."""
    if T.n < 2:
        raise InvalidArgument("need at least two vertices")
    deg = T.degrees()
    nbrs = T.adjacency_lists()
    start = T.root if deg[T.root] != 2 else int(np.flatnonzero(deg == 1)[0])
    paths: list[BarePath] = []
    seen_edge_from = np.zeros(T.n, dtype=bool)  # marks visited non-start vertices
    seen_edge_from[start] = True
    stack = [start]
    while stack:
        u = stack.pop()
        for w in nbrs[u]:
            if seen_edge_from[w]:
                continue
            seq = [u, w]
            prev, cur = u, w
            seen_edge_from[cur] = True
            while deg[cur] == 2:
                nxt = nbrs[cur][0] if nbrs[cur][0] != prev else nbrs[cur][1]
                prev, cur = cur, nxt
                seen_edge_from[cur] = True
                seq.append(cur)
            paths.append(BarePath(tuple(int(x) for x in seq)))
            stack.append(cur)
    return paths


def disjoint_bare_paths(T: OrientedTree, order_len: int = 7) -> list[BarePath]:
    """Vertex-disjoint bare paths of exactly ``order_len`` vertices.

    A maximal bare segment with L edges yields floor((L-1)/(order_len+1))
    paths, drawn from its interior with a one-vertex gap after each.
    """
    if order_len < 3:
        raise InvalidArgument("order_len must be at least 3")
    if T.n < 2:
        return []
    out = []
    step = order_len + 1
    for seg in bare_path_decomposition(T):
        L = len(seg) - 1
        for j in range((L - 1) // step):
            s = 1 + j * step
            out.append(BarePath(seg.vertices[s:s + order_len]))
    return out


class LeafEdge(NamedTuple):
    tail: int
    head: int
    leaf: int

    @property
    def outward(self) -> bool:
        """True when the arc points at the leaf."""
        return self.head == self.leaf

    @property
    def stem(self) -> int:
        return self.tail if self.head == self.leaf else self.head


def disjoint_leaf_edges(T: OrientedTree) -> list[LeafEdge]:
    """A maximum set of vertex-disjoint leaf edges: one per leaf-bearing vertex."""
    if T.n < 2:
        raise InvalidArgument("need at least two vertices")
    deg = T.degrees()
    if T.n == 2:
        (u, v), = T.arcs()
        return [LeafEdge(u, v, v)]
    chosen: dict[int, int] = {}
    for leaf in np.flatnonzero(deg == 1).tolist():
        (stem,) = T.neighbours(leaf)
        if stem not in chosen:
            chosen[stem] = leaf
    out = []
    for stem in sorted(chosen):
        leaf = chosen[stem]
        if T.has_arc(stem, leaf):
            out.append(LeafEdge(stem, leaf, leaf))
        else:
            out.append(LeafEdge(leaf, stem, leaf))
    return out


# --------------------------------------------------------- far-apart families

@dataclass
class FarApartFamily:
    sets: list[np.ndarray]
    anchors: list[int]
    min_distance: int

    def covered(self) -> int:
        return int(sum(len(s) for s in self.sets))


def degree_budget(n: int, K: float) -> float:
    """n^{1/sqrt(K ln n)}."""
    return n ** (1 / math.sqrt(K * math.log(n)))


def far_apart_distance(n: int, K: float, const: float = 13.0) -> float:
    return K * math.log(degree_budget(n, K)) / const


def far_apart_families(T: OrientedTree, K: float, const: float = 13.0,
                       check_degree: bool = True) -> FarApartFamily:
    """Disjoint vertex sets, each hanging far below its own anchor vertex.

    Post-order sweep keeping, for every vertex, the still-unassigned part of
    its subtree.  When that part would exceed n^{2/3}, its child branches are
    packed into groups of at most n^{2/3}; each full group becomes a set
    anchored at the current vertex, keeping only vertices at distance
    >= D from the anchor (nearer ones are discarded).  Sets are indexed in
    reverse creation order so that later sets never sit between an earlier
    set and its anchor.
    """
    n = T.n
    if n < 3:
        raise InvalidArgument("far-apart families need n >= 3")
    if check_degree and T.max_degree() > degree_budget(n, K):
        raise InvalidArgument(
            f"max degree {T.max_degree()} exceeds n^(1/sqrt(K log n)) = {degree_budget(n, K):.3f}")
    D = max(0, math.ceil(far_apart_distance(n, K, const) - 1e-12))
    cap = int(n ** (2 / 3))
    depth = T.depths()
    ch = T.children
    residual: dict[int, list[int]] = {}
    created: list[tuple[int, np.ndarray]] = []

    def emit(anchor: int, members: list[int]) -> None:
        arr = np.asarray(members, dtype=np.int64)
        keep = arr[depth[arr] - depth[anchor] >= D]
        keep = keep[keep != anchor] if D > 0 else keep
        if keep.size:
            created.append((anchor, np.sort(keep)))

    for v in reversed(T.bfs_order()):
        branches = [residual.pop(c) for c in ch[v]]
        total = 1 + sum(len(b) for b in branches)
        if total <= cap:
            merged = [v]
            for b in branches:
                merged.extend(b)
            residual[v] = merged
            continue
        # first-fit decreasing into bins of capacity cap
        branches.sort(key=len, reverse=True)
        bins: list[list[int]] = []
        loads: list[int] = []
        for b in branches:
            for i, load in enumerate(loads):
                if load + len(b) <= cap:
                    bins[i].extend(b)
                    loads[i] += len(b)
                    break
            else:
                bins.append(list(b))
                loads.append(len(b))
        keep_idx = int(np.argmin(loads))
        if loads[keep_idx] + 1 > cap:
            keep_idx = -1
        merged = [v]
        for i, b in enumerate(bins):
            if i == keep_idx:
                merged.extend(b)
            else:
                emit(v, b)
        residual[v] = merged
    emit(T.root, residual.pop(T.root))
    created.reverse()
    fam = FarApartFamily([s for _, s in created], [a for a, _ in created], D)
    bound = n - n ** (5 / 12)
    if fam.covered() < bound:
        raise ConstructionFailure(
            f"far-apart sets cover {fam.covered()} < n - n^(5/12) = {bound:.1f}",
            stage="far_apart_families", coverage=fam.covered())
    return fam


def check_far_apart(T: OrientedTree, fam: FarApartFamily, K: float,
                    const: float = 13.0) -> list[str]:
    """Return every violated property of a far-apart family (empty when valid)."""
    n = T.n
    problems = []
    cover = fam.covered()
    allv = np.concatenate(fam.sets) if fam.sets else np.zeros(0, dtype=np.int64)
    if len(np.unique(allv)) != len(allv):
        problems.append("sets are not pairwise disjoint")
    if cover < n - n ** (5 / 12):
        problems.append(f"(i) coverage {cover} < n - n^(5/12)")
    big = [i for i, s in enumerate(fam.sets) if len(s) > n ** (2 / 3)]
    if big:
        problems.append(f"(ii) sets {big[:5]} exceed n^(2/3)")
    tin, tout = euler_intervals(T)
    depth = T.depths()
    need = far_apart_distance(n, K, const)
    earlier = np.zeros(n + 1, dtype=np.int64)  # by pre-order position
    child_towards = _child_towards_map(T, tin, tout)
    for i, (anchor, s) in enumerate(zip(fam.anchors, fam.sets)):
        inside = (tin[s] >= tin[anchor]) & (tin[s] < tout[anchor])
        if not inside.all():
            problems.append(f"(iii) set {i} leaves the subtree of its anchor")
            continue
        if (depth[s] - depth[anchor] < need - 1e-9).any():
            problems.append(f"(iv) set {i} comes closer than {need:.3f} to its anchor")
        prefix = np.concatenate([[0], np.cumsum(earlier[:n])])
        branches = {child_towards(anchor, int(y)) for y in s if y != anchor}
        for c in branches:
            if prefix[tout[c]] - prefix[tin[c]] > 0:
                problems.append(f"(iii) an earlier set reaches set {i} avoiding its anchor")
                break
        earlier[tin[s]] = 1
    return problems


def _child_towards_map(T, tin, tout):
    ch = T.children

    def child_towards(anchor: int, y: int) -> int:
        kids = ch[anchor]
        starts = [tin[c] for c in kids]
        j = int(np.searchsorted(starts, tin[y], side="right")) - 1
        return kids[j]

    # children lists are in increasing vertex id, but pre-order positions
    # follow the same order, so tin is increasing along each children list
    return child_towards


# ---------------------------------------------------------------- contraction

@dataclass
class Contraction:
    tree: OrientedTree
    groups: list[tuple[int, ...]]
    forward: np.ndarray
    inner_arcs: list[tuple[int, int]]
    original_root: int

    def expand(self) -> OrientedTree:
        """Rebuild the original tree from the contracted one."""
        n = len(self.forward)
        arcs = list(self.inner_arcs)
        for a, b in self.tree.arcs():
            arcs.append(self.outer_arcs[(a, b)])
        return OrientedTree.from_arcs(n, arcs, self.original_root)

    outer_arcs: dict = field(default_factory=dict)


def contract_bare_paths(T: OrientedTree, paths: Sequence[BarePath]) -> Contraction:
    """Collapse each path to one vertex; other vertices keep their relative order."""
    forward = np.full(T.n, -1, dtype=np.int64)
    in_path = np.full(T.n, -1, dtype=np.int64)
    for i, p in enumerate(paths):
        vs = np.asarray(p.vertices, dtype=np.int64)
        if (in_path[vs] >= 0).any():
            raise InvalidArgument("paths overlap")
        if not p.is_bare(T):
            raise InvalidArgument(f"path {i} is not a bare path of T")
        in_path[vs] = i
    groups: list[tuple[int, ...]] = []
    path_label: dict[int, int] = {}
    for v in range(T.n):
        if in_path[v] < 0:
            forward[v] = len(groups)
            groups.append((v,))
        elif in_path[v] not in path_label:
            path_label[int(in_path[v])] = len(groups)
            forward[v] = len(groups)
            groups.append(tuple(paths[int(in_path[v])].vertices))
        else:
            forward[v] = path_label[int(in_path[v])]
    inner, outer = [], {}
    new_arcs = []
    for u, v in T.arcs():
        a, b = int(forward[u]), int(forward[v])
        if a == b:
            inner.append((u, v))
        else:
            new_arcs.append((a, b))
            outer[(a, b)] = (u, v)
    tree = OrientedTree.from_arcs(len(groups), new_arcs, int(forward[T.root]))
    return Contraction(tree, groups, forward, inner, T.root, outer)


# ------------------------------------------------------------------ generators

def _prufer_parents(seq: np.ndarray, n: int) -> np.ndarray:
    """Linear-time Prufer decoding; the tree comes out rooted at n - 1.

    Each removed leaf is attached to the current sequence entry, which is
    exactly its parent once the last surviving vertex n - 1 is the root.
    """
    parent = np.full(n, -1, dtype=np.int64)
    degree = np.bincount(seq, minlength=n) + 1
    seq_l = seq.tolist()
    deg = degree.tolist()
    par = parent.tolist()
    ptr = deg.index(1)
    leaf = ptr
    for v in seq_l:
        par[leaf] = v
        deg[v] -= 1
        if v < ptr and deg[v] == 1:
            leaf = v
        else:
            ptr += 1
            while deg[ptr] != 1:
                ptr += 1
            leaf = ptr
    par[leaf] = n - 1
    par[n - 1] = -1
    return np.asarray(par, dtype=np.int64)


def _prufer_to_tree(seq: np.ndarray, n: int, rng: np.random.Generator) -> OrientedTree:
    if n == 1:
        return OrientedTree.single_vertex()
    parent = _prufer_parents(seq, n)
    return OrientedTree(parent, rng.random(n) < 0.5, n - 1)


def _capped_prufer(n: int, max_degree: int, rng: np.random.Generator,
                   sweeps: int = 3) -> np.ndarray:
    """Prufer sequence in which no label appears max_degree times or more.

    Sequential draws give a valid starting point; Metropolis single-site
    updates with a uniform proposal then leave the uniform law on valid
    sequences invariant.
    """
    length = n - 2
    cap = max_degree - 1
    count = np.zeros(n, dtype=np.int64)
    seq = np.empty(length, dtype=np.int64)
    proposals = rng.integers(0, n, size=4 * length + 16)
    pi = 0
    for i in range(length):
        while True:
            if pi == len(proposals):
                proposals = rng.integers(0, n, size=4 * length + 16)
                pi = 0
            c = proposals[pi]
            pi += 1
            if count[c] < cap:
                break
        seq[i] = c
        count[c] += 1
    steps = sweeps * length
    pos = rng.integers(0, length, size=steps)
    lab = rng.integers(0, n, size=steps)
    seq_l = seq.tolist()
    cnt_l = count.tolist()
    for p, c in zip(pos.tolist(), lab.tolist()):
        if cnt_l[c] < cap:
            old = seq_l[p]
            cnt_l[old] -= 1
            cnt_l[c] += 1
            seq_l[p] = c
    return np.asarray(seq_l, dtype=np.int64)


def uniform_tree(n: int, max_degree: int | None, rng: np.random.Generator,
                 rejection_tries: int = 50) -> OrientedTree:
    if n <= 2:
        return _prufer_to_tree(np.zeros(0, dtype=np.int64), n, rng)
    for _ in range(rejection_tries if max_degree is not None else 1):
        seq = rng.integers(0, n, size=n - 2)
        if max_degree is None or np.bincount(seq, minlength=n).max() + 1 <= max_degree:
            return _prufer_to_tree(seq, n, rng)
    return _prufer_to_tree(_capped_prufer(n, max_degree, rng), n, rng)


def _subdivided_skeleton(n: int, seg_len: int, max_degree: int,
                         rng: np.random.Generator) -> OrientedTree:
    edges_total = n - 1
    segments = max(1, edges_total // seg_len)
    skeleton = uniform_tree(segments + 1, max(2, max_degree), rng)
    lengths = np.full(segments, edges_total // segments)
    lengths[: edges_total - lengths.sum()] += 1
    arcs = []
    nxt = segments + 1
    for (u, v), L in zip(skeleton.arcs(), lengths.tolist()):
        chain = [u] + list(range(nxt, nxt + L - 1)) + [v]
        nxt += L - 1
        if rng.random() < 0.5:
            chain.reverse()
        arcs.extend(zip(chain, chain[1:]))
    return OrientedTree.from_arcs(n, arcs, 0)


def _pendant_leaves(n: int, max_degree: int, rng: np.random.Generator,
                    leaf_share: float = 0.4) -> OrientedTree:
    pendants = max(1, int(leaf_share * n))
    core_n = n - pendants
    core = uniform_tree(core_n, max(2, max_degree - 1), rng)
    hosts = rng.permutation(core_n)
    arcs = core.arcs()
    for j in range(pendants):
        stem = int(hosts[j % core_n])
        leaf = core_n + j
        arcs.append((stem, leaf) if rng.random() < 0.5 else (leaf, stem))
    return OrientedTree.from_arcs(n, arcs, 0)


def relabel(T: OrientedTree, perm: np.ndarray) -> OrientedTree:
    """Rename vertex v to perm[v]."""
    arcs = [(int(perm[u]), int(perm[v])) for u, v in T.arcs()]
    return OrientedTree.from_arcs(T.n, arcs, int(perm[T.root]))


def random_tree(n: int, max_degree: int | None = None, family: str = "uniform",
                seed: int | np.random.Generator | None = None) -> OrientedTree:
    """Random rooted oriented tree.

    ``uniform``: uniform labelled tree via Prufer codes, each edge oriented by
    a fair coin.  ``path-rich``: a bounded-degree skeleton whose edges are
    replaced by directed paths of about 25 edges.  ``leaf-rich``: a
    uniform bounded-degree core with 40% of the vertices hung on it as
    pendant leaves.  The two structured families are relabelled at random.
    """
    if n < 1:
        raise InvalidArgument("n must be positive")
    if max_degree is not None and max_degree < 2 and n >= 3:
        raise InvalidArgument("a tree on 3 or more vertices needs max degree >= 2")
    if max_degree is not None and n >= 3 and max_degree == 2 and family == "leaf-rich":
        raise InvalidArgument("leaf-rich trees need max degree >= 3")
    rng = np.random.default_rng(seed)
    if n == 1:
        return OrientedTree.single_vertex()
    if family == "uniform":
        return uniform_tree(n, max_degree, rng)
    if family == "path-rich":
        if n <= 50:
            return relabel(path_tree(n, "".join(rng.choice(["+", "-"], size=n - 1))),
                           rng.permutation(n))
        T = _subdivided_skeleton(n, 25, max_degree or 4, rng)
        return relabel(T, rng.permutation(n))
    if family == "leaf-rich":
        if n < 8 and (max_degree is None or max_degree >= n - 1):
            return star_tree(n - 1, out=bool(rng.random() < 0.5))
        T = _pendant_leaves(n, max_degree or 5, rng)
        return relabel(T, rng.permutation(n))
    raise InvalidArgument(f"unknown tree family {family!r}")
