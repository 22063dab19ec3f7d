"""Regular pairs, the cluster decomposition of a dense host and its reduced digraph.

The decomposition is built directly: an equitable random partition of the
host, followed by explicit verification of every pair and eviction of
vertices with atypical degrees along the cluster cycle.  Sampled regularity
checks are one-sided: a failure comes with a witness, a pass is only
evidence.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConstructionFailure, InvalidArgument
from .graph import Digraph, ParamHierarchy, min_semidegree
from .hamilton import hamilton_cycle, is_hamilton_cycle


def _as_index(S) -> np.ndarray:
    return np.asarray(list(S) if not isinstance(S, np.ndarray) else S, dtype=np.int64)


def pair_density(G: Digraph, X, Y) -> float:
    """e(G[X -> Y]) / (|X| |Y|)."""
    X, Y = _as_index(X), _as_index(Y)
    if X.size == 0 or Y.size == 0:
        raise InvalidArgument("both sides must be nonempty")
    if np.intersect1d(X, Y).size:
        raise InvalidArgument("X and Y must be disjoint")
    return float(G.adj[np.ix_(X, Y)].sum()) / (X.size * Y.size)


@dataclass
class RegularityVerdict:
    passed: bool
    min_density: float
    max_density: float
    density: float
    witness: tuple | None = None
    reason: str = ""

    def __bool__(self) -> bool:
        return self.passed


def _verdict(d, eps, at_least, lo, hi, full, lo_w, hi_w) -> RegularityVerdict:
    if at_least:
        # (d', eps)-regular for some d' >= d  <=>  hi - lo <= 2 eps and lo + eps >= d
        if lo + eps < d:
            return RegularityVerdict(False, lo, hi, full, lo_w, f"subpair density {lo:.4f} < d - eps")
        if hi - lo > 2 * eps + 1e-12:
            w = hi_w if hi - full >= full - lo else lo_w
            return RegularityVerdict(False, lo, hi, full, w, f"density spread {hi - lo:.4f} > 2 eps")
        return RegularityVerdict(True, lo, hi, full)
    if lo < d - eps - 1e-12 or hi > d + eps + 1e-12:
        w = hi_w if hi - d >= d - lo else lo_w
        return RegularityVerdict(False, lo, hi, full, w, "subpair density outside d +- eps")
    return RegularityVerdict(True, lo, hi, full)


def _exhaustive(A: np.ndarray, eps: float):
    nx_, ny = A.shape
    sx, sy = math.ceil(eps * nx_ - 1e-12), math.ceil(eps * ny - 1e-12)
    sx, sy = max(sx, 1), max(sy, 1)
    lo, hi = np.inf, -np.inf
    lo_w = hi_w = None
    Ai = A.astype(np.int64)
    for mask in range(1, 1 << nx_):
        rows = [i for i in range(nx_) if mask >> i & 1]
        if len(rows) < sx:
            continue
        col = Ai[rows].sum(axis=0)
        order = np.argsort(col, kind="stable")
        asc = np.cumsum(col[order])
        desc = np.cumsum(col[order[::-1]])
        for t in range(sy, ny + 1):
            dmin = asc[t - 1] / (len(rows) * t)
            dmax = desc[t - 1] / (len(rows) * t)
            if dmin < lo:
                lo, lo_w = dmin, (tuple(rows), tuple(order[:t].tolist()))
            if dmax > hi:
                hi, hi_w = dmax, (tuple(rows), tuple(order[::-1][:t].tolist()))
    return lo, hi, lo_w, hi_w


def _random_subsets(rng, trials: int, n: int, size: int) -> np.ndarray:
    keys = rng.random((trials, n))
    idx = np.argpartition(keys, size - 1, axis=1)[:, :size]
    ind = np.zeros((trials, n), dtype=np.float32)
    np.put_along_axis(ind, idx, 1.0, axis=1)
    return ind


def _sampled(A: np.ndarray, eps: float, trials: int, rng: np.random.Generator):
    nx_, ny = A.shape
    Af = A.astype(np.float32)
    candidates = []  # (density, X-indicator-or-rows, Y-rows)
    full = float(Af.mean())
    lo = hi = full
    lo_w = hi_w = (tuple(range(nx_)), tuple(range(ny)))
    sizes = [(max(1, math.ceil(eps * nx_ - 1e-12)), max(1, math.ceil(eps * ny - 1e-12))),
             (math.ceil(nx_ / 2), math.ceil(ny / 2))]
    # degree-ordered witnesses catch lopsided pairs deterministically
    outdeg = Af.sum(axis=1)
    indeg = Af.sum(axis=0)
    xo = np.argsort(-outdeg, kind="stable")
    yo = np.argsort(-indeg, kind="stable")
    for sx, sy in reversed(sizes):
        for xs in (xo[:sx], xo[::-1][:sx]):
            candidates.append((xs, np.arange(ny)))
        for ys in (yo[:sy], yo[::-1][:sy]):
            candidates.append((np.arange(nx_), ys))
    for xs, ys in candidates:
        dens = float(Af[np.ix_(xs, ys)].mean())
        if dens < lo - 1e-12:
            lo, lo_w = dens, (tuple(sorted(xs.tolist())), tuple(sorted(ys.tolist())))
        if dens > hi + 1e-12:
            hi, hi_w = dens, (tuple(sorted(xs.tolist())), tuple(sorted(ys.tolist())))
    per_class = max(1, trials // 2)
    chunk = 500
    for sx, sy in sizes:
        done = 0
        while done < per_class:
            t = min(chunk, per_class - done)
            done += t
            Ix = _random_subsets(rng, t, nx_, sx)
            Iy = _random_subsets(rng, t, ny, sy)
            dens = ((Ix @ Af) * Iy).sum(axis=1) / (sx * sy)
            a, b = int(np.argmin(dens)), int(np.argmax(dens))
            if dens[a] < lo - 1e-9:
                lo = float(dens[a])
                lo_w = (tuple(np.flatnonzero(Ix[a]).tolist()), tuple(np.flatnonzero(Iy[a]).tolist()))
            if dens[b] > hi + 1e-9:
                hi = float(dens[b])
                hi_w = (tuple(np.flatnonzero(Ix[b]).tolist()), tuple(np.flatnonzero(Iy[b]).tolist()))
    return lo, hi, lo_w, hi_w, full


def check_regular_pair(G: Digraph, X, Y, d: float, eps: float, mode: str = "sampled",
                       trials: int = 2000, seed=None, at_least: bool = False) -> RegularityVerdict:
    """Test whether G[X -> Y] is (d, eps)-regular.

    With ``at_least=True`` the test is for (d', eps)-regularity with some
    d' >= d.  Witnesses are reported as tuples of host vertex ids.
    ``mode='exhaustive'`` enumerates every subset pair (sides of at most 16).
    """
    X, Y = _as_index(X), _as_index(Y)
    if not 0 < eps < 1:
        raise InvalidArgument("eps must lie in (0, 1)")
    if min(X.size, Y.size) < 1 / eps - 1e-9:
        raise InvalidArgument(f"sides must have at least 1/eps = {1 / eps:.1f} vertices")
    if np.intersect1d(X, Y).size:
        raise InvalidArgument("X and Y must be disjoint")
    A = G.adj[np.ix_(X, Y)]
    if mode == "exhaustive":
        if max(X.size, Y.size) > 16:
            raise InvalidArgument("exhaustive mode is limited to sides of at most 16")
        lo, hi, lo_w, hi_w = _exhaustive(A, eps)
        full = float(A.mean())
    elif mode == "sampled":
        lo, hi, lo_w, hi_w, full = _sampled(A, eps, trials, np.random.default_rng(seed))
    else:
        raise InvalidArgument(f"unknown mode {mode!r}")

    def to_host(w):
        return None if w is None else (tuple(X[list(w[0])].tolist()), tuple(Y[list(w[1])].tolist()))

    v = _verdict(d, eps, at_least, lo, hi, full, to_host(lo_w), to_host(hi_w))
    return v


def check_super_regular(G: Digraph, X, Y, d: float, eps: float, mode: str = "sampled",
                        trials: int = 2000, seed=None) -> RegularityVerdict:
    """(d_>=, eps)-regular plus minimum degree (d - eps) times the other side."""
    X, Y = _as_index(X), _as_index(Y)
    A = G.adj[np.ix_(X, Y)]
    out_deg = A.sum(axis=1)
    in_deg = A.sum(axis=0)
    low_x = np.flatnonzero(out_deg < (d - eps) * Y.size - 1e-9)
    low_y = np.flatnonzero(in_deg < (d - eps) * X.size - 1e-9)
    reg = check_regular_pair(G, X, Y, d, eps, mode, trials, seed, at_least=True)
    if low_x.size:
        return RegularityVerdict(False, reg.min_density, reg.max_density, reg.density,
                                 ("X", int(X[low_x[0]])), "vertex of X with low out-degree")
    if low_y.size:
        return RegularityVerdict(False, reg.min_density, reg.max_density, reg.density,
                                 ("Y", int(Y[low_y[0]])), "vertex of Y with low in-degree")
    return reg


def generate_super_regular_pair(mX: int, mY: int, d: float, seed=None,
                                eps: float = 0.05) -> Digraph:
    """Random bipartite arcs X -> Y at rate d with degree repair.

    X is ``0..mX-1`` and Y is ``mX..mX+mY-1``.  Any vertex below
    (d - eps/2) times the other side gets random extra arcs up to that quota.
    """
    if not 0 < d <= 1:
        raise InvalidArgument("d must lie in (0, 1]")
    rng = np.random.default_rng(seed)
    B = rng.random((mX, mY)) < d
    quota_x = math.ceil((d - eps / 2) * mY)
    quota_y = math.ceil((d - eps / 2) * mX)
    for x in np.flatnonzero(B.sum(axis=1) < quota_x):
        free = np.flatnonzero(~B[x])
        need = quota_x - int(B[x].sum())
        B[x, rng.choice(free, size=need, replace=False)] = True
    for y in np.flatnonzero(B.sum(axis=0) < quota_y):
        free = np.flatnonzero(~B[:, y])
        need = quota_y - int(B[:, y].sum())
        B[rng.choice(free, size=need, replace=False), y] = True
    adj = np.zeros((mX + mY, mX + mY), dtype=bool)
    adj[:mX, mX:] = B
    return Digraph.from_adjacency(adj, copy=False)


# ------------------------------------------------------------ decomposition

@dataclass
class ClusterDecomposition:
    exceptional: np.ndarray
    clusters: list[np.ndarray]
    m: int

    @property
    def k(self) -> int:
        return len(self.clusters)

    def assignment(self, n: int) -> np.ndarray:
        """Host vertex -> reduced-digraph vertex (cluster index, or k + position in V0)."""
        a = np.full(n, -1, dtype=np.int64)
        for i, c in enumerate(self.clusters):
            a[c] = i
        a[self.exceptional] = self.k + np.arange(len(self.exceptional))
        return a


@dataclass
class ReducedDigraph:
    core: Digraph
    v0: np.ndarray
    v0_out: list[np.ndarray]
    v0_in: list[np.ndarray]
    density: np.ndarray
    cycle: list[int] = field(default_factory=list)

    @property
    def k(self) -> int:
        return self.core.n

    def full(self) -> Digraph:
        """R* on k + |V0| vertices; V0 member j is vertex k + j."""
        k, s = self.k, len(self.v0)
        adj = np.zeros((k + s, k + s), dtype=bool)
        adj[:k, :k] = self.core.adj
        for j in range(s):
            adj[k + j, self.v0_out[j]] = True
            adj[self.v0_in[j], k + j] = True
        return Digraph.from_adjacency(adj, copy=False)

    def to_dict(self) -> dict:
        return {
            "arcs": [list(a) for a in self.core.arcs()],
            "cycle": list(self.cycle),
            "v0_links": {
                str(int(v)): {"out": self.v0_out[j].tolist(), "in": self.v0_in[j].tolist()}
                for j, v in enumerate(self.v0)
            },
            "density": self.density.round(6).tolist(),
        }


def decomposition_to_json(dec: ClusterDecomposition, red: ReducedDigraph) -> str:
    return json.dumps({
        "V0": dec.exceptional.tolist(),
        "clusters": [c.tolist() for c in dec.clusters],
        "m": dec.m,
        "reduced": red.to_dict(),
    })


def decomposition_from_json(text: str) -> tuple[ClusterDecomposition, ReducedDigraph]:
    data = json.loads(text)
    clusters = [np.asarray(c, dtype=np.int64) for c in data["clusters"]]
    k = len(clusters)
    dec = ClusterDecomposition(np.asarray(data["V0"], dtype=np.int64), clusters, int(data["m"]))
    r = data["reduced"]
    v0 = dec.exceptional
    links = r["v0_links"]
    red = ReducedDigraph(
        Digraph(k, [tuple(a) for a in r["arcs"]]),
        v0,
        [np.asarray(links[str(int(v))]["out"], dtype=np.int64) for v in v0],
        [np.asarray(links[str(int(v))]["in"], dtype=np.int64) for v in v0],
        np.asarray(r["density"], dtype=float),
        list(r.get("cycle", [])),
    )
    return dec, red


def hamilton_cycle_core(R: ReducedDigraph | Digraph, seed=None) -> list[int]:
    """Directed Hamilton cycle of the core, lexicographically first for k <= 12."""
    core = R.core if isinstance(R, ReducedDigraph) else R
    cyc = hamilton_cycle(core.adj, np.random.default_rng(seed))
    assert is_hamilton_cycle(core.adj, cyc)
    return cyc


def _v0_links(G: Digraph, v0: np.ndarray, clusters, m: int, eta: float):
    thr = (0.5 + eta) * m
    outs, ins = [], []
    for v in v0.tolist():
        out_deg = np.array([G.adj[v, c].sum() for c in clusters])
        in_deg = np.array([G.adj[c, v].sum() for c in clusters])
        outs.append(np.flatnonzero(out_deg >= thr - 1e-9))
        ins.append(np.flatnonzero(in_deg >= thr - 1e-9))
    return outs, ins


def _core(G, clusters, d, eps, mode, trials, rng):
    k = len(clusters)
    adj = np.zeros((k, k), dtype=bool)
    dens = np.zeros((k, k))
    for i in range(k):
        for j in range(k):
            if i == j:
                continue
            v = check_regular_pair(G, clusters[i], clusters[j], d, eps, mode, trials,
                                   int(rng.integers(2**63)), at_least=True)
            adj[i, j] = v.passed
            dens[i, j] = v.density
    return Digraph.from_adjacency(adj, copy=False), dens


def build_cluster_partition(G: Digraph, params: ParamHierarchy, seed=None,
                            mode: str = "sampled", trials: int = 2000,
                            forced_exceptional: Sequence[int] = (),
                            max_attempts: int = 10
                            ) -> tuple[ClusterDecomposition, ReducedDigraph]:
    """Partition V(G) into V0 and k equal clusters and build the reduced digraph.

    Each attempt: random equitable partition, regularity check of every
    ordered pair, Hamilton cycle in the core (clusters are renumbered along
    it), iterated eviction to V0 of vertices with fewer than (d - eps) times
    the neighbouring cluster size of out-neighbours in the next cluster or
    in-neighbours in the previous one, trimming to a common cluster size,
    then the V0 links.  Properties (a)-(g) are verified before returning.
    """
    n, k = G.n, params.k
    alpha, eps, d, eta = params.alpha, params.eps, params.d, params.eta
    if min_semidegree(G) < (0.5 + alpha) * n - 1e-9:
        raise InvalidArgument(
            f"minimum semidegree {min_semidegree(G)} < (1/2 + alpha) n = {(0.5 + alpha) * n:.1f}")
    if k < 1 or n // k < 1:
        raise InvalidArgument("need 1 <= k <= n")
    rng = np.random.default_rng(seed)
    forced = np.unique(np.asarray(list(forced_exceptional), dtype=np.int64))
    failures = []
    for attempt in range(max_attempts):
        try:
            dec, red = _attempt(G, params, rng, mode, trials, forced)
        except ConstructionFailure as exc:
            failures.append(exc.details.get("property", exc.stage))
            continue
        problems = check_decomposition(G, dec, red, params, mode=mode, trials=trials,
                                       seed=int(rng.integers(2**63)))
        if not problems:
            return dec, red
        failures.append(next(iter(problems)))
    raise ConstructionFailure(
        f"cluster partition failed after {max_attempts} attempts: {failures}",
        stage="build_cluster_partition", property=failures[-1] if failures else None)


def equitable_split(n: int, k: int, eps: float, rng: np.random.Generator,
                    forced: Sequence[int] = ()) -> tuple[list[np.ndarray], np.ndarray]:
    """Random k clusters of equal size; the forced vertices and the remainder form V0.

    Guarantees |V0| < eps n and k | (n - |V0|), or raises.
    """
    forced = np.unique(np.asarray(list(forced), dtype=np.int64))
    free = np.setdiff1d(np.arange(n), forced)
    perm = rng.permutation(free)
    m0 = len(perm) // k
    if m0 < 1:
        raise InvalidArgument("fewer free vertices than clusters")
    clusters = [np.sort(perm[i * m0:(i + 1) * m0]) for i in range(k)]
    v0 = np.sort(np.concatenate([forced, perm[k * m0:]]).astype(np.int64))
    if len(v0) >= eps * n:
        raise ConstructionFailure(f"|V0| = {len(v0)} >= eps n", stage="partition", property="a")
    assert (n - len(v0)) % k == 0
    return clusters, v0


def _attempt(G, params, rng, mode, trials, forced):
    n, k = G.n, params.k
    eps, d, eta, alpha = params.eps, params.d, params.eta, params.alpha
    clusters, v0_arr = equitable_split(n, k, eps, rng, forced)
    v0 = v0_arr.tolist()
    core, dens = _core(G, clusters, d, eps, mode, trials, rng)
    if min_semidegree(core) < (0.5 + eta) * k - 1e-9:
        raise ConstructionFailure("core semidegree too small", stage="partition", property="f")
    cyc = hamilton_cycle_core(core, seed=int(rng.integers(2**63)))
    clusters = [clusters[i] for i in cyc]
    dens = dens[np.ix_(cyc, cyc)]
    core = Digraph.from_adjacency(core.adj[np.ix_(cyc, cyc)])
    # eviction along the cycle, iterated to a fixed point
    while True:
        evicted = False
        for i in range(k):
            nxt, prv = clusters[(i + 1) % k], clusters[(i - 1) % k]
            c = clusters[i]
            out_deg = G.adj[np.ix_(c, nxt)].sum(axis=1)
            in_deg = G.adj[np.ix_(prv, c)].sum(axis=0)
            bad = (out_deg < (d - eps) * len(nxt) - 1e-9) | (in_deg < (d - eps) * len(prv) - 1e-9)
            if bad.any():
                v0.extend(c[bad].tolist())
                clusters[i] = c[~bad]
                evicted = True
        m = min(len(c) for c in clusters)
        for i in range(k):
            if len(clusters[i]) > m:
                extra = rng.choice(len(clusters[i]), size=len(clusters[i]) - m, replace=False)
                keep = np.ones(len(clusters[i]), dtype=bool)
                keep[extra] = False
                v0.extend(clusters[i][~keep].tolist())
                clusters[i] = clusters[i][keep]
                evicted = True
        if not evicted:
            break
    v0 = np.asarray(sorted(v0), dtype=np.int64)
    if len(v0) >= eps * n:
        raise ConstructionFailure(f"|V0| = {len(v0)} >= eps n", stage="partition", property="a")
    outs, ins = _v0_links(G, v0, clusters, m, eta)
    red = ReducedDigraph(core, v0, outs, ins, dens, list(range(k)))
    return ClusterDecomposition(v0, clusters, m), red


def check_decomposition(G: Digraph, dec: ClusterDecomposition, red: ReducedDigraph,
                        params: ParamHierarchy, mode: str = "sampled", trials: int = 2000,
                        seed=None, recheck_core: bool = True) -> dict[str, str]:
    """Verify properties (a)-(g); returns {property: problem} for each failure."""
    n, k, m = G.n, dec.k, dec.m
    eps, d, eta, alpha = params.eps, params.d, params.eta, params.alpha
    rng = np.random.default_rng(seed)
    problems: dict[str, str] = {}
    parts = np.concatenate([dec.exceptional] + list(dec.clusters))
    if len(parts) != n or len(np.unique(parts)) != n:
        problems["a"] = "sets do not partition V(G)"
    if len(dec.exceptional) >= eps * n:
        problems["a"] = f"|V0| = {len(dec.exceptional)} >= eps n"
    if any(len(c) != m for c in dec.clusters) or (n - len(dec.exceptional)) % k:
        problems["a"] = "clusters are not all of size m"
    for i in range(k):
        j = (i + 1) % k
        v = check_super_regular(G, dec.clusters[i], dec.clusters[j], d, eps, mode, trials,
                                int(rng.integers(2**63)))
        if not v:
            problems["b"] = f"pair ({i},{j}) not super-regular: {v.reason}"
            problems["c"] = problems["b"]
            break
    if recheck_core:
        for i in range(k):
            for j in range(k):
                if i == j:
                    continue
                v = check_regular_pair(G, dec.clusters[i], dec.clusters[j], d, eps, mode, trials,
                                       int(rng.integers(2**63)), at_least=True)
                if v.passed != red.core.has_arc(i, j):
                    problems["d"] = f"core arc ({i},{j}) disagrees with the regularity check"
    outs, ins = _v0_links(G, dec.exceptional, dec.clusters, m, eta)
    for j in range(len(dec.exceptional)):
        if not (np.array_equal(outs[j], red.v0_out[j]) and np.array_equal(ins[j], red.v0_in[j])):
            problems["e"] = f"V0 links of {int(dec.exceptional[j])} are wrong"
    if k > 1 and min_semidegree(red.core) < (0.5 + eta) * k - 1e-9:
        problems["f"] = "core semidegree below (1/2 + eta) k"
    for j in range(len(dec.exceptional)):
        if min(len(red.v0_out[j]), len(red.v0_in[j])) <= alpha * k:
            problems["g"] = f"V0 vertex {int(dec.exceptional[j])} has semidegree <= alpha k into the core"
            break
    return problems
