"""Digraphs, rooted oriented trees, the constant hierarchy and the embedding check.

Vertices are dense integers ``0..n-1``.  A :class:`Digraph` keeps a boolean
adjacency matrix (O(1) arc queries, vectorised degree counts) and builds sorted
neighbour arrays lazily.  Everything here is immutable after construction.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import InvalidArgument


class Digraph:
    """Simple digraph: no loops, at most one arc per ordered pair."""

    __slots__ = ("adj", "_out", "_in", "_outdeg", "_indeg")

    def __init__(self, n: int, arcs: Iterable[tuple[int, int]] = ()):
        if n < 0:
            raise InvalidArgument("vertex count must be non-negative")
        adj = np.zeros((n, n), dtype=bool)
        arr = np.asarray(list(arcs), dtype=np.int64).reshape(-1, 2)
        if arr.size:
            if arr.min() < 0 or arr.max() >= n:
                raise InvalidArgument("arc endpoint out of range")
            adj[arr[:, 0], arr[:, 1]] = True
        self._setup(adj)

    def _setup(self, adj: np.ndarray) -> None:
        if adj.shape[0] and adj.diagonal().any():
            raise InvalidArgument("self-loops are not allowed")
        adj.flags.writeable = False
        self.adj = adj
        self._out: list[np.ndarray] | None = None
        self._in: list[np.ndarray] | None = None
        self._outdeg = adj.sum(axis=1)
        self._indeg = adj.sum(axis=0)

    @classmethod
    def from_adjacency(cls, adj: np.ndarray, copy: bool = True) -> "Digraph":
        a = np.array(adj, dtype=bool, copy=copy)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise InvalidArgument("adjacency must be square")
        g = cls.__new__(cls)
        g._setup(a)
        return g

    @property
    def n(self) -> int:
        return self.adj.shape[0]

    vertex_count = n

    def __len__(self) -> int:
        return self.n

    def has_arc(self, u: int, v: int) -> bool:
        return bool(self.adj[u, v])

    def _build_lists(self) -> None:
        self._out = [np.flatnonzero(row) for row in self.adj]
        self._in = [np.flatnonzero(col) for col in self.adj.T]

    def out_neighbours(self, v: int) -> np.ndarray:
        if self._out is None:
            self._build_lists()
        return self._out[v]

    def in_neighbours(self, v: int) -> np.ndarray:
        if self._in is None:
            self._build_lists()
        return self._in[v]

    def out_degree(self, v: int | None = None):
        return self._outdeg if v is None else int(self._outdeg[v])

    def in_degree(self, v: int | None = None):
        return self._indeg if v is None else int(self._indeg[v])

    def arcs(self) -> list[tuple[int, int]]:
        us, vs = np.nonzero(self.adj)
        return list(zip(us.tolist(), vs.tolist()))

    @property
    def arc_count(self) -> int:
        return int(self._outdeg.sum())

    def is_oriented(self) -> bool:
        return not (self.adj & self.adj.T).any()

    def underlying_degree(self, v: int) -> int:
        return int((self.adj[v] | self.adj[:, v]).sum())

    def induced(self, vertices: Sequence[int]) -> "Digraph":
        idx = np.asarray(vertices, dtype=np.int64)
        return Digraph.from_adjacency(self.adj[np.ix_(idx, idx)])

    def with_arcs(self, arcs: Iterable[tuple[int, int]]) -> "Digraph":
        a = self.adj.copy()
        for u, v in arcs:
            a[u, v] = True
        return Digraph.from_adjacency(a, copy=False)

    def contains(self, other: "Digraph") -> bool:
        return other.n == self.n and not (other.adj & ~self.adj).any()

    def is_regular(self) -> int | None:
        """Common in/out degree if the digraph is regular, else None."""
        if self.n == 0:
            return 0
        d = int(self._outdeg[0])
        if (self._outdeg == d).all() and (self._indeg == d).all():
            return d
        return None

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Digraph) and np.array_equal(self.adj, other.adj)

    def __hash__(self) -> int:
        return hash((self.n, np.packbits(self.adj).tobytes()))

    def __repr__(self) -> str:
        return f"Digraph(n={self.n}, arcs={self.arc_count})"

    @classmethod
    def complete(cls, n: int) -> "Digraph":
        a = np.ones((n, n), dtype=bool)
        np.fill_diagonal(a, False)
        return cls.from_adjacency(a, copy=False)

    @classmethod
    def cycle(cls, n: int) -> "Digraph":
        return cls(n, [(i, (i + 1) % n) for i in range(n)])


def _check_vertex(G: Digraph, v: int) -> None:
    if not 0 <= v < G.n:
        raise InvalidArgument(f"vertex {v} out of range for digraph of order {G.n}")


def semidegree(G: Digraph, v: int) -> int:
    _check_vertex(G, v)
    return min(G.in_degree(v), G.out_degree(v))


def min_semidegree(G: Digraph) -> int:
    if G.n == 0:
        raise InvalidArgument("minimum semidegree of the empty digraph is undefined")
    return int(min(G.in_degree().min(), G.out_degree().min()))


class OrientedTree:
    """Rooted oriented tree stored as a parent array.

    ``down[v]`` is True when the tree edge between ``v`` and its parent is
    oriented parent -> v.  The root has parent -1 and its ``down`` entry is
    meaningless.
    """

    def __init__(self, parent: Sequence[int], down: Sequence[bool], root: int):
        self.parent = np.asarray(parent, dtype=np.int64).copy()
        self.down = np.asarray(down, dtype=bool).copy()
        n = len(self.parent)
        if n == 0:
            raise InvalidArgument("a tree needs at least one vertex")
        if len(self.down) != n or not 0 <= root < n:
            raise InvalidArgument("malformed tree arrays")
        if self.parent[root] != -1 or (self.parent == -1).sum() != 1:
            raise InvalidArgument("the root must be the only vertex without a parent")
        self.root = int(root)
        self.parent.flags.writeable = False
        self.down.flags.writeable = False
        self._children: list[list[int]] | None = None
        order = self.bfs_order()
        if len(order) != n:
            raise InvalidArgument("parent links do not form a tree rooted at root")

    @property
    def n(self) -> int:
        return len(self.parent)

    vertex_count = n

    def __len__(self) -> int:
        return self.n

    @property
    def children(self) -> list[list[int]]:
        if self._children is None:
            par = self.parent
            if ((par < -1) | (par >= self.n)).any():
                raise InvalidArgument("parent index out of range")
            nonroot = np.flatnonzero(par >= 0)
            order = nonroot[np.argsort(par[nonroot], kind="stable")]
            counts = np.bincount(par[nonroot], minlength=self.n)
            bounds = np.concatenate([[0], np.cumsum(counts)]).tolist()
            flat = order.tolist()
            self._children = [flat[bounds[v]:bounds[v + 1]] for v in range(self.n)]
        return self._children

    def out_children(self, v: int) -> list[int]:
        return [c for c in self.children[v] if self.down[c]]

    def in_children(self, v: int) -> list[int]:
        return [c for c in self.children[v] if not self.down[c]]

    def bfs_order(self) -> list[int]:
        order = [self.root]
        seen = np.zeros(self.n, dtype=bool)
        seen[self.root] = True
        i = 0
        ch = self.children
        while i < len(order):
            for c in ch[order[i]]:
                if seen[c]:
                    raise InvalidArgument("cycle in parent links")
                seen[c] = True
                order.append(c)
            i += 1
        return order

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n, dtype=np.int64)
        nonroot = self.parent >= 0
        deg[nonroot] += 1
        np.add.at(deg, self.parent[nonroot], 1)
        return deg

    def max_degree(self) -> int:
        return int(self.degrees().max()) if self.n > 1 else 0

    def leaves(self) -> list[int]:
        return np.flatnonzero(self.degrees() == 1).tolist()

    def neighbours(self, v: int) -> list[int]:
        p = int(self.parent[v])
        return ([p] if p >= 0 else []) + self.children[v]

    def has_arc(self, u: int, v: int) -> bool:
        """True iff ``u -> v`` is an arc of the tree."""
        if self.parent[v] == u:
            return bool(self.down[v])
        if self.parent[u] == v:
            return not bool(self.down[u])
        return False

    def arcs(self) -> list[tuple[int, int]]:
        out = []
        for v in range(self.n):
            p = int(self.parent[v])
            if p >= 0:
                out.append((p, v) if self.down[v] else (v, p))
        return out

    def edges(self) -> list[tuple[int, int]]:
        """(parent, child) pairs."""
        return [(int(p), v) for v, p in enumerate(self.parent.tolist()) if p >= 0]

    def depths(self) -> np.ndarray:
        d = np.zeros(self.n, dtype=np.int64)
        for v in self.bfs_order()[1:]:
            d[v] = d[self.parent[v]] + 1
        return d

    def subtree_sizes(self) -> np.ndarray:
        size = np.ones(self.n, dtype=np.int64)
        for v in reversed(self.bfs_order()[1:]):
            size[self.parent[v]] += size[v]
        return size

    def rerooted(self, r: int) -> "OrientedTree":
        return OrientedTree.from_arcs(self.n, self.arcs(), r)

    def adjacency_lists(self) -> list[list[int]]:
        return [self.neighbours(v) for v in range(self.n)]

    @classmethod
    def from_arcs(cls, n: int, arcs: Iterable[tuple[int, int]], root: int = 0) -> "OrientedTree":
        """Build from directed edges ``(tail, head)`` of an oriented tree."""
        nbrs: list[list[tuple[int, bool]]] = [[] for _ in range(n)]
        count = 0
        for u, v in arcs:
            if not (0 <= u < n and 0 <= v < n) or u == v:
                raise InvalidArgument(f"bad tree arc ({u}, {v})")
            nbrs[u].append((v, True))
            nbrs[v].append((u, False))
            count += 1
        if count != n - 1:
            raise InvalidArgument(f"a tree on {n} vertices has {n - 1} edges, got {count}")
        parent = np.full(n, -1, dtype=np.int64)
        down = np.zeros(n, dtype=bool)
        seen = np.zeros(n, dtype=bool)
        seen[root] = True
        stack = [root]
        while stack:
            u = stack.pop()
            for v, forward in nbrs[u]:
                if not seen[v]:
                    seen[v] = True
                    parent[v] = u
                    down[v] = forward
                    stack.append(v)
        if not seen.all():
            raise InvalidArgument("edges do not form a connected tree")
        return cls(parent, down, root)

    @classmethod
    def single_vertex(cls) -> "OrientedTree":
        return cls([-1], [False], 0)

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, OrientedTree)
            and self.root == other.root
            and np.array_equal(self.parent, other.parent)
            and np.array_equal(self.down[self.parent >= 0], other.down[other.parent >= 0])
        )

    def __repr__(self) -> str:
        return f"OrientedTree(n={self.n}, root={self.root})"


RootedOrientedTree = OrientedTree


@dataclass
class EmbeddingVerdict:
    ok: bool
    collisions: list[tuple[int, int, int]] = field(default_factory=list)
    bad_arcs: list[tuple[int, int]] = field(default_factory=list)
    unmapped: list[int] = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.ok

    @property
    def diagnostics(self) -> list[str]:
        out = [f"collision: tree vertices {a} and {b} both map to {h}" for a, b, h in self.collisions]
        out += [f"arc {u}->{v} not preserved" for u, v in self.bad_arcs]
        out += [f"vertex {v} unmapped or out of range" for v in self.unmapped]
        return out


def _image_array(T: OrientedTree, image) -> np.ndarray:
    if isinstance(image, Embedding):
        image = image.image
    if isinstance(image, Mapping):
        arr = np.full(T.n, -1, dtype=np.int64)
        for t, v in image.items():
            if 0 <= int(t) < T.n:
                arr[int(t)] = int(v)
        return arr
    arr = np.asarray(image, dtype=np.int64)
    if arr.shape != (T.n,):
        out = np.full(T.n, -1, dtype=np.int64)
        m = min(T.n, arr.size)
        out[:m] = arr.reshape(-1)[:m]
        return out
    return arr


def verify_embedding(G: Digraph, T: OrientedTree, image) -> EmbeddingVerdict:
    """Check that ``image`` is injective and maps every arc of T onto an arc of G."""
    img = _image_array(T, image)
    unmapped = [t for t in range(T.n) if not 0 <= img[t] < G.n]
    first: dict[int, int] = {}
    collisions = []
    for t in range(T.n):
        h = int(img[t])
        if h in first and 0 <= h < G.n:
            collisions.append((first[h], t, h))
        else:
            first.setdefault(h, t)
    bad = []
    bad_set = set(unmapped)
    for u, v in T.arcs():
        if u in bad_set or v in bad_set or not G.adj[img[u], img[v]]:
            bad.append((u, v))
    ok = not (unmapped or collisions or bad)
    return EmbeddingVerdict(ok, collisions, bad, unmapped)


@dataclass
class Embedding:
    image: np.ndarray
    log: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        self.image = np.asarray(self.image, dtype=np.int64)

    def to_json(self) -> str:
        return json.dumps({"image": {str(t): int(v) for t, v in enumerate(self.image)}})

    @classmethod
    def from_json(cls, text: str) -> "Embedding":
        data = json.loads(text)["image"]
        n = len(data)
        arr = np.full(n, -1, dtype=np.int64)
        for t, v in data.items():
            arr[int(t)] = int(v)
        return cls(arr)


@dataclass
class ParamHierarchy:
    """Concrete values for the constants of the hierarchy.

    The required ordering is
    ``1/n < 1/K < 1/k < eps < gamma < beta <= d < lam_prime < lam < eta < alpha``.
    With ``strict=True`` (the default) a violation raises; otherwise the
    violated links are listed in ``violations`` and the record is still usable.
    """

    n: int
    K: int
    k: int
    eps: float
    gamma: float
    beta: float
    d: float
    lam_prime: float
    lam: float
    eta: float
    alpha: float
    zeta: float = 1 / 3
    m: int = 0
    strict: bool = True
    violations: list[str] = field(default_factory=list, compare=False)

    def __post_init__(self):
        if self.m == 0 and self.k > 0:
            self.m = self.n // self.k
        for name in ("eps", "gamma", "beta", "d", "lam_prime", "lam", "eta", "alpha", "zeta"):
            val = getattr(self, name)
            if not 0 < val <= 1:
                raise InvalidArgument(f"{name}={val} must lie in (0, 1]")
        self.violations = self.chain_violations()
        if self.strict and self.violations:
            raise InvalidArgument("constant hierarchy violated: " + "; ".join(self.violations))

    def chain_violations(self) -> list[str]:
        chain = [
            ("1/n", 1 / self.n, "<"),
            ("1/K", 1 / self.K, "<"),
            ("1/k", 1 / self.k, "<"),
            ("eps", self.eps, "<"),
            ("gamma", self.gamma, "<"),
            ("beta", self.beta, "<="),
            ("d", self.d, "<"),
            ("lam_prime", self.lam_prime, "<"),
            ("lam", self.lam, "<"),
            ("eta", self.eta, "<"),
            ("alpha", self.alpha, None),
        ]
        bad = []
        for (a, x, op), (b, y, _) in zip(chain, chain[1:]):
            if (op == "<" and not x < y) or (op == "<=" and not x <= y):
                bad.append(f"{a}={x:.4g} {op} {b}={y:.4g}")
        return bad

    def degree_budget(self) -> float:
        """Largest tree degree the hierarchy tolerates: n^{(K log n)^{-1/2}}."""
        ln = math.log(self.n)
        return self.n ** (1 / math.sqrt(self.K * ln))

    def replace(self, **changes) -> "ParamHierarchy":
        vals = {f.name: getattr(self, f.name) for f in fields(self) if f.name != "violations"}
        vals.update(changes)
        if "k" in changes or "n" in changes:
            vals.setdefault("m", 0)
            if "m" not in changes:
                vals["m"] = 0
        return ParamHierarchy(**vals)

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def default_for(cls, n: int, alpha: float, k: int | None = None) -> "ParamHierarchy":
        """One consistent assignment of the hierarchy for a host of order ``n``.

        ``k`` defaults to 8 (4 below n = 1000), raised until 1/k < alpha and
        until a core digraph on k vertices can have semidegree at least
        (1/2 + eta) k.  The seven constants between 1/k and alpha are spaced
        evenly:

        ======  =========================
        eps     1/k + 1/8 (alpha - 1/k)
        gamma   1/k + 2/8 (alpha - 1/k)
        beta    1/k + 3/8 (alpha - 1/k)
        d       1/k + 4/8 (alpha - 1/k)
        lam'    1/k + 5/8 (alpha - 1/k)
        lam     1/k + 6/8 (alpha - 1/k)
        eta     1/k + 7/8 (alpha - 1/k)
        ======  =========================

        and K = max(k + 1, floor(sqrt n)).
        """
        if not 0 < alpha < 0.5:
            raise InvalidArgument("alpha must lie in (0, 1/2)")
        if k is None:
            k = 8 if n >= 1000 else 4
            k = max(k, math.floor(1 / alpha) + 2)
            while k < n and math.ceil((0.5 + 1 / k + 7 / 8 * (alpha - 1 / k)) * k - 1e-9) > k - 1:
                k += 1
        if 1 / k >= alpha:
            raise InvalidArgument(f"no consistent hierarchy: 1/k={1 / k:.3g} >= alpha={alpha}")
        K = max(k + 1, math.isqrt(n))
        if K >= n:
            raise InvalidArgument(f"n={n} too small for k={k}")
        step = (alpha - 1 / k) / 8
        t = [1 / k + j * step for j in range(1, 8)]
        return cls(
            n=n, K=K, k=k, eps=t[0], gamma=t[1], beta=t[2], d=t[3],
            lam_prime=t[4], lam=t[5], eta=t[6], alpha=alpha,
        )


# ---------------------------------------------------------------- file formats

def digraph_to_edgelist(G: Digraph) -> str:
    lines = [str(G.n)] + [f"{u} {v}" for u, v in G.arcs()]
    return "\n".join(lines) + "\n"


def digraph_from_edgelist(text: str) -> Digraph:
    rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    if not rows:
        raise InvalidArgument("empty edge list")
    n = int(rows[0][0])
    return Digraph(n, [(int(a), int(b)) for a, b in rows[1:]])


def digraph_to_json(G: Digraph) -> str:
    return json.dumps({"n": G.n, "arcs": [list(a) for a in G.arcs()]})


def digraph_from_json(text: str) -> Digraph:
    data = json.loads(text)
    return Digraph(int(data["n"]), [tuple(a) for a in data["arcs"]])


def tree_to_text(T: OrientedTree) -> str:
    lines = [f"{T.n} {T.root}"]
    for p, c in T.edges():
        lines.append(f"{c} {p} {'+' if T.down[c] else '-'}")
    return "\n".join(lines) + "\n"


def tree_from_text(text: str) -> OrientedTree:
    rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    if not rows:
        raise InvalidArgument("empty tree file")
    n, root = int(rows[0][0]), int(rows[0][1])
    parent = np.full(n, -1, dtype=np.int64)
    down = np.zeros(n, dtype=bool)
    for c, p, d in rows[1:]:
        if d not in "+-":
            raise InvalidArgument(f"direction must be + or -, got {d!r}")
        parent[int(c)] = int(p)
        down[int(c)] = d == "+"
    return OrientedTree(parent, down, root)


def tree_to_json(T: OrientedTree) -> str:
    return json.dumps({
        "n": T.n,
        "root": T.root,
        "edges": [[c, p, "+" if T.down[c] else "-"] for p, c in T.edges()],
    })


def tree_from_json(text: str) -> OrientedTree:
    data = json.loads(text)
    n = int(data["n"])
    parent = np.full(n, -1, dtype=np.int64)
    down = np.zeros(n, dtype=bool)
    for c, p, d in data["edges"]:
        parent[int(c)] = int(p)
        down[int(c)] = d == "+"
    return OrientedTree(parent, down, int(data["root"]))


@dataclass
class Allocation:
    """Homomorphism candidate from a tree to a digraph with ``n_targets`` vertices."""

    target: np.ndarray
    n_targets: int

    def __post_init__(self):
        self.target = np.asarray(self.target, dtype=np.int64)

    @property
    def loads(self) -> np.ndarray:
        return np.bincount(self.target, minlength=self.n_targets)

    def copy(self) -> "Allocation":
        return Allocation(self.target.copy(), self.n_targets)

    def bad_arcs(self, T: OrientedTree, R: Digraph) -> list[tuple[int, int]]:
        arcs = np.asarray(T.arcs(), dtype=np.int64).reshape(-1, 2)
        if not len(arcs):
            return []
        ok = R.adj[self.target[arcs[:, 0]], self.target[arcs[:, 1]]]
        return [tuple(a) for a in arcs[~ok].tolist()]

    def is_homomorphism(self, T: OrientedTree, R: Digraph) -> bool:
        return not self.bad_arcs(T, R)

    def degrees(self, T: OrientedTree) -> np.ndarray:
        """phi-degree of every tree vertex: |phi(N^-(v))| + |phi(N^+(v))|."""
        arcs = np.asarray(T.arcs(), dtype=np.int64).reshape(-1, 2)
        if not len(arcs):
            return np.zeros(T.n, dtype=np.int64)
        tails, heads = arcs[:, 0], arcs[:, 1]
        K = self.n_targets
        # key = vertex * 2K + direction * K + image
        keys = np.concatenate([tails * 2 * K + K + self.target[heads],
                               heads * 2 * K + self.target[tails]])
        uniq = np.unique(keys)
        return np.bincount(uniq // (2 * K), minlength=T.n)

    def max_degree(self, T: OrientedTree) -> int:
        return int(self.degrees(T).max()) if T.n > 1 else 0

    def to_json(self) -> str:
        return json.dumps({
            "target": {str(t): int(v) for t, v in enumerate(self.target)},
            "loads": self.loads.tolist(),
        })

    @classmethod
    def from_json(cls, text: str, n_targets: int | None = None) -> "Allocation":
        data = json.loads(text)
        tgt = data["target"]
        arr = np.empty(len(tgt), dtype=np.int64)
        for t, v in tgt.items():
            arr[int(t)] = int(v)
        return cls(arr, n_targets if n_targets is not None else len(data["loads"]))
