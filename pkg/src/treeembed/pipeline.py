"""End-to-end embedding, host generators and the batch experiment harness."""
from __future__ import annotations

import csv
import io
import json
import math
import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .allocation import (
    _core_expander,
    allocate,
    allocate_spanning_many_leaves,
    allocate_spanning_many_paths,
    check_leaves_allocation,
    check_paths_allocation,
    largest_remainder,
    rebalance_by_resampling,
)
from .embedding import embed, embed_spanning_many_leaves, embed_spanning_many_paths
from .errors import (
    ConstructionFailure,
    Infeasible,
    InvalidArgument,
    TreeEmbedError,
    VerificationMismatch,
)
from .graph import Allocation, Digraph, Embedding, OrientedTree, ParamHierarchy, \
    min_semidegree, verify_embedding
from .regularity import ClusterDecomposition, ReducedDigraph, build_cluster_partition
from .trees import AncestralOrder, disjoint_bare_paths, disjoint_leaf_edges, random_tree, \
    tidy_order

CSV_VERSION = 1
CSV_FIELDS = ["csv_version", "seed", "outcome", "stage", "route", "wall_time",
              "balance", "verified", "message"]
MODES = ("approx", "spanning-auto", "spanning-paths", "spanning-leaves")
HOST_MODELS = ("independent-arcs", "planted-minimum")
LEAF_THRESHOLD = 0.05
PATH_THRESHOLD = 0.01


# ---------------------------------------------------------------------------
# hosts


def generate_host(n: int, alpha: float, model: str = "independent-arcs", seed=None,
                  noise: float = 0.05) -> Digraph:
    """Random host digraph with minimum semidegree at least (1/2 + alpha) n.

    ``independent-arcs`` keeps each ordered pair with probability
    1/2 + 2 alpha, then tops up every deficient vertex with arcs to (or from)
    random non-neighbours.  ``planted-minimum`` is the circulant
    i -> i + 1, ..., i + ceil((1/2 + alpha) n) plus random arcs that avoid one
    vertex, randomly relabelled, so the minimum semidegree is attained exactly.
    """
    if not 0 < alpha < 0.5:
        raise InvalidArgument("alpha must lie in (0, 1/2)")
    if model not in HOST_MODELS:
        raise InvalidArgument(f"unknown host model {model!r}; choose from {HOST_MODELS}")
    need = math.ceil((0.5 + alpha) * n - 1e-9)
    if n < 2 or need > n - 1:
        raise InvalidArgument(f"no digraph on {n} vertices has semidegree {need}")
    rng = np.random.default_rng(seed)
    if model == "independent-arcs":
        A = rng.random((n, n)) < min(1.0, 0.5 + 2 * alpha)
        np.fill_diagonal(A, False)
        for v in range(n):
            for outgoing in (True, False):
                row = A[v] if outgoing else A[:, v]
                short = need - int(row.sum())
                if short > 0:
                    pool = np.flatnonzero(~row)
                    pool = pool[pool != v]
                    pick = rng.choice(pool, size=short, replace=False)
                    if outgoing:
                        A[v, pick] = True
                    else:
                        A[pick, v] = True
    else:
        idx = np.arange(n)
        A = np.zeros((n, n), dtype=bool)
        for j in range(1, need + 1):
            A[idx, (idx + j) % n] = True
        extra = rng.random((n, n)) < noise
        extra[0, :] = False
        extra[:, 0] = False
        np.fill_diagonal(extra, False)
        A |= extra
        perm = rng.permutation(n)
        A = A[np.ix_(perm, perm)]
    G = Digraph.from_adjacency(A, copy=False)
    assert min_semidegree(G) >= need
    return G


# ---------------------------------------------------------------------------
# shared plumbing


def default_degree_cap(n: int) -> int:
    """Largest tree degree the pipelines accept by default: ceil(n^(1/3))."""
    return max(3, math.ceil(n ** (1 / 3) - 1e-9))


@contextmanager
def _stage(name: str, times: dict):
    start = time.perf_counter()
    try:
        yield
    except TreeEmbedError as exc:
        if not getattr(exc, "pipeline_stage", None):
            exc.pipeline_stage = name
        raise
    finally:
        times[name] = round(time.perf_counter() - start, 4)


def host_hierarchy(G: Digraph, cap: float = 0.45) -> ParamHierarchy:
    """Default constants for partitioning G, from its own ratio delta0(G)/|G| - 1/2."""
    a = min(cap, min_semidegree(G) / G.n - 0.5 - 1e-9)
    if a <= 0:
        raise InvalidArgument("host semidegree must exceed |G|/2")
    return ParamHierarchy.default_for(G.n, a)


def _check_common(G: Digraph, T: OrientedTree, alpha: float, max_degree: int | None) -> None:
    if not 0 < alpha < 0.5:
        raise InvalidArgument("alpha must lie in (0, 1/2)")
    cap = default_degree_cap(G.n) if max_degree is None else max_degree
    if T.max_degree() > cap:
        raise InvalidArgument(f"tree max degree {T.max_degree()} exceeds the cap {cap}")
    need = (0.5 + alpha) * T.n
    if min_semidegree(G) < need - 1e-9:
        raise InvalidArgument(f"minimum semidegree {min_semidegree(G)} < (1/2 + alpha)|T| = {need:.1f}")


def _verified(G: Digraph, T: OrientedTree, emb: Embedding) -> Embedding:
    verdict = verify_embedding(G, T, emb)
    if not verdict:
        raise VerificationMismatch("returned map is not an embedding",
                                   diagnostics=verdict.diagnostics[:10])
    return emb


def _tag(exc: TreeEmbedError, stage: str):
    if not getattr(exc, "pipeline_stage", None):
        exc.pipeline_stage = stage
    return exc


# ---------------------------------------------------------------------------
# almost spanning


def allocate_almost_spanning(T: OrientedTree, dec: ClusterDecomposition, red: ReducedDigraph,
                             seed=None) -> tuple[AncestralOrder, Allocation, float]:
    """Random homomorphism of T into a regular expander of the core, rebalanced.

    Returns the tidy order, the allocation and the slack s with k m = (1 + s)|T|;
    every cluster load is at most (1 + s/2) m / (1 + s).
    """
    rng = np.random.default_rng(seed)
    k, m = dec.k, dec.m
    slack = k * m / T.n - 1
    if slack <= 0:
        raise _tag(InvalidArgument(f"clusters hold {k * m} vertices, fewer than |T| = {T.n}"),
                   "precondition")
    cap = math.floor((1 + slack / 2) * m / (1 + slack) + 1e-9)
    target = largest_remainder(np.full(k, 1 / k), T.n)
    J = _core_expander(red.core.adj, rng)
    order = tidy_order(T)
    phi = allocate(T, order, J, int(rng.integers(k)), seed=int(rng.integers(2**63)))
    frozen = np.zeros(T.n, dtype=bool)
    frozen[T.root] = True
    img = rebalance_by_resampling(T, J.adj, phi.target, np.arange(k), target,
                                  tolerance=max(0, cap - int(target.max())),
                                  frozen=frozen, rng=rng)
    phi = Allocation(img, k)
    if (phi.loads > cap).any():
        raise ConstructionFailure(f"cluster loads {phi.loads.tolist()} exceed {cap}",
                                  stage="allocation")
    return order, phi, slack


def embed_almost_spanning(G: Digraph, T: OrientedTree, alpha: float, seed=None,
                          params: ParamHierarchy | None = None,
                          max_degree: int | None = None) -> Embedding:
    """Embed T into a host with |G| >= (1 + alpha)|T| and semidegree >= (1/2 + alpha)|T|.

    Cluster partition, a regular expander inside the reduced digraph, a
    random homomorphism of T into it rebalanced to near-equal cluster loads,
    then the reservation-based greedy embedding.
    """
    _check_common(G, T, alpha, max_degree)
    if G.n < (1 + alpha) * T.n - 1e-9:
        raise _tag(InvalidArgument(f"|G| = {G.n} < (1 + alpha)|T| = {(1 + alpha) * T.n:.1f}"),
                   "precondition")
    rng = np.random.default_rng(seed)
    times: dict = {}
    if T.n == 1:
        return _verified(G, T, Embedding(np.array([0]), log={"stage_seconds": times}))
    params = params or host_hierarchy(G)
    with _stage("partition", times):
        dec, red = build_cluster_partition(G, params, seed=int(rng.integers(2**63)))
    k, m = dec.k, dec.m
    with _stage("allocation", times):
        order, phi, slack = allocate_almost_spanning(T, dec, red, rng)
    with _stage("embedding", times):
        emb = embed(T, order, phi, G, dec.clusters, beta=params.beta, gamma=params.gamma,
                    seed=int(rng.integers(2**63)), alpha=slack, core=red.core)
    with _stage("verification", times):
        _verified(G, T, emb)
    emb.log.update(route="approx", k=k, m=m, loads=phi.loads.tolist(), stage_seconds=times)
    return emb


# ---------------------------------------------------------------------------
# spanning


@dataclass
class RouteChoice:
    route: str
    leaf_edges: int
    bare_paths: int
    leaf_needed: float
    paths_needed: float


def choose_route(T: OrientedTree, leaf_threshold: float = LEAF_THRESHOLD,
                 path_threshold: float = PATH_THRESHOLD) -> RouteChoice:
    """Leaves route when there are n * leaf_threshold disjoint leaf edges,
    else paths route when there are n * path_threshold disjoint bare paths of
    order 7, else Infeasible."""
    n = T.n
    leaves = len(disjoint_leaf_edges(T))
    need_l, need_p = leaf_threshold * n, path_threshold * n
    if leaves >= need_l:
        return RouteChoice("leaves", leaves, -1, need_l, need_p)
    paths = len(disjoint_bare_paths(T, 7))
    if paths >= need_p:
        return RouteChoice("paths", leaves, paths, need_l, need_p)
    raise Infeasible(f"{leaves} leaf edges and {paths} bare paths are both below threshold",
                     certificate={"leaf_edges": leaves, "bare_paths": paths})


def embed_spanning_tree(G: Digraph, T: OrientedTree, alpha: float, seed=None,
                        params: ParamHierarchy | None = None, route: str | None = None,
                        max_degree: int | None = None,
                        leaf_threshold: float = LEAF_THRESHOLD,
                        path_threshold: float = PATH_THRESHOLD) -> Embedding:
    """Spanning embedding of T (|T| = |G|) through the leaves or the paths route."""
    if G.n != T.n:
        raise _tag(InvalidArgument(f"spanning embedding needs |T| = |G|, got {T.n} and {G.n}"),
                   "precondition")
    _check_common(G, T, alpha, max_degree)
    times: dict = {}
    if route is None:
        try:
            choice = choose_route(T, leaf_threshold, path_threshold)
        except Infeasible as exc:
            raise _tag(exc, "dispatch")
        route = choice.route
    if route not in ("leaves", "paths"):
        raise _tag(InvalidArgument(f"unknown route {route!r}"), "precondition")
    rng = np.random.default_rng(seed)
    params = params or ParamHierarchy.default_for(G.n, alpha)
    with _stage("partition", times):
        dec, red = build_cluster_partition(G, params, seed=int(rng.integers(2**63)))
    with _stage("allocation", times):
        aseed = int(rng.integers(2**63))
        if route == "leaves":
            al = allocate_spanning_many_leaves(T, red, None, params, seed=aseed)
            problems = check_leaves_allocation(al, red, params)
        else:
            al = allocate_spanning_many_paths(T, None, red, None, params, seed=aseed)
            problems = check_paths_allocation(al, red, red.cycle or list(range(dec.k)), params)
        if problems:
            raise ConstructionFailure(f"allocation postconditions fail: {problems}",
                                      stage="allocation", problems=problems)
    with _stage("embedding", times):
        eseed = int(rng.integers(2**63))
        if route == "leaves":
            emb = embed_spanning_many_leaves(al, G, dec, params, seed=eseed)
        else:
            emb = embed_spanning_many_paths(al, G, dec, params, seed=eseed)
    with _stage("verification", times):
        _verified(G, T, emb)
    emb.log.update(route=route, k=dec.k, m=dec.m, loads=al.phi.loads[:dec.k].tolist(),
                   allocation_checks=problems, stage_seconds=times)
    return emb


# ---------------------------------------------------------------------------
# experiments


@dataclass
class ExperimentConfig:
    n: int
    alpha: float
    mode: str = "approx"
    generator: str = "independent-arcs"
    seed_start: int = 0
    trials: int = 20
    tree_n: int | None = None
    tree_family: str = "uniform"
    max_degree: int | None = 6
    params: dict = field(default_factory=dict)
    workers: int = 1

    def __post_init__(self):
        if self.mode not in MODES:
            raise InvalidArgument(f"unknown mode {self.mode!r}; choose from {MODES}")
        if self.generator not in HOST_MODELS:
            raise InvalidArgument(f"unknown host model {self.generator!r}")
        if self.trials < 0:
            raise InvalidArgument("trials must be non-negative")
        if not 0 < self.alpha < 0.5:
            raise InvalidArgument("alpha must lie in (0, 1/2)")
        if self.mode != "approx" and self.tree_n not in (None, self.n):
            raise InvalidArgument("spanning modes need tree_n == n")

    @property
    def tree_order(self) -> int:
        if self.tree_n is not None:
            return self.tree_n
        if self.mode == "approx":
            return math.floor(self.n / (1 + self.alpha) + 1e-9)
        return self.n

    def hierarchy(self) -> ParamHierarchy:
        base = ParamHierarchy.default_for(self.n, self.alpha, k=self.params.get("k"))
        extra = {k: v for k, v in self.params.items() if k != "k"}
        return base.replace(**extra) if extra else base

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class TrialRecord:
    seed: int
    outcome: str
    stage: str = ""
    route: str = ""
    wall_time: float = 0.0
    balance: float | None = None
    verified: bool = False
    message: str = ""

    def __post_init__(self):
        if self.outcome == "success" and not self.verified:
            raise InvalidArgument("a successful trial must carry a verified embedding")

    def to_dict(self, with_time: bool = True) -> dict:
        d = asdict(self)
        if not with_time:
            d.pop("wall_time")
        return d


def _balance(loads, n_tree: int) -> float:
    loads = np.asarray(loads, dtype=float)
    k = len(loads)
    return float(np.abs(loads - n_tree / k).max() * k / n_tree)


def run_trial(cfg: ExperimentConfig, seed: int) -> TrialRecord:
    """One seed: fresh host and tree, the configured pipeline, an independent re-check."""
    start = time.perf_counter()
    stage = "precondition"
    try:
        params = cfg.hierarchy()
        # without overrides the pipelines derive their constants themselves
        params = params if cfg.params else None
        G = generate_host(cfg.n, cfg.alpha, cfg.generator, seed=seed)
        family = cfg.tree_family
        T = random_tree(cfg.tree_order, cfg.max_degree, family, seed=seed + 10**6)
        if cfg.mode == "approx":
            emb = embed_almost_spanning(G, T, cfg.alpha, seed=seed, params=params,
                                        max_degree=cfg.max_degree)
        else:
            route = None if cfg.mode == "spanning-auto" else cfg.mode.split("-")[1]
            emb = embed_spanning_tree(G, T, cfg.alpha, seed=seed, params=params, route=route,
                                      max_degree=cfg.max_degree)
        stage = "verification"
        ok = bool(verify_embedding(G, T, emb))
        if not ok:
            raise VerificationMismatch("harness re-check rejected the embedding")
        return TrialRecord(seed, "success", "", emb.log.get("route", ""),
                           round(time.perf_counter() - start, 3),
                           round(_balance(emb.log["loads"], T.n), 6), True)
    except TreeEmbedError as exc:
        stage = getattr(exc, "pipeline_stage", None) or getattr(exc, "stage", "") or stage
        return TrialRecord(seed, "failure", stage, "", round(time.perf_counter() - start, 3),
                           None, False, f"{type(exc).__name__}: {exc}"[:300])


@dataclass
class ExperimentResult:
    records: list[TrialRecord]
    summary: dict


def summarize(records: list[TrialRecord]) -> dict:
    n = len(records)
    ok = [r for r in records if r.outcome == "success"]
    bal = [r.balance for r in ok if r.balance is not None]
    return {
        "trials": n,
        "successes": len(ok),
        "success_rate": len(ok) / n if n else None,
        "mean_balance_deviation": float(np.mean(bal)) if bal else None,
        "mean_wall_time": float(np.mean([r.wall_time for r in records])) if n else None,
        "failure_stages": dict(Counter(r.stage for r in records if r.outcome != "success")),
    }


def records_to_csv(records: list[TrialRecord]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    w.writeheader()
    for r in records:
        w.writerow({"csv_version": CSV_VERSION, **r.to_dict()})
    return buf.getvalue()


def run_experiments(cfg: ExperimentConfig, out: str | Path | None = None) -> ExperimentResult:
    """Run cfg.trials seeds (in parallel when cfg.workers > 1).

    Failed trials are recorded, never raised.  With ``out`` the records go
    to ``out``.csv and records plus summary to ``out``.json.
    """
    seeds = list(range(cfg.seed_start, cfg.seed_start + cfg.trials))
    if cfg.workers > 1 and len(seeds) > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            records = list(pool.map(run_trial, [cfg] * len(seeds), seeds))
    else:
        records = [run_trial(cfg, s) for s in seeds]
    result = ExperimentResult(records, summarize(records))
    if out is not None:
        out = Path(out)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.with_suffix(".csv").write_text(records_to_csv(records))
        out.with_suffix(".json").write_text(json.dumps({
            "config": cfg.to_dict(),
            "records": [r.to_dict() for r in records],
            "summary": result.summary,
        }, indent=2))
    return result
