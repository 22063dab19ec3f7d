"""The twelve acceptance criteria, each at its stated scale and tolerance.

Every test prints one PASS/FAIL line (also collected in the terminal
summary) and then asserts the criterion.
"""
import itertools
import math
import time

import networkx as nx
import numpy as np
from networkx.algorithms import isomorphism

from conftest import oriented_regular_digraph, random_zero_sum, shift_instance
from treeembed.allocation import (
    allocate,
    allocate_spanning_many_leaves,
    allocate_spanning_many_paths,
    antidirected_pattern,
    check_leaves_allocation,
    check_paths_allocation,
    directed_pattern,
    mixing_bound,
    walk_distribution,
)
from treeembed.embedding import embed_spanning_many_leaves, embed_spanning_many_paths
from treeembed.embedding import perfect_matching_super_regular
from treeembed.errors import Infeasible, TreeEmbedError
from treeembed.expanders import is_expander, regular_expander_subdigraph, shift_weights
from treeembed.graph import Digraph, OrientedTree, ParamHierarchy, verify_embedding
from treeembed.pipeline import choose_route, embed_almost_spanning, generate_host
from treeembed.regularity import build_cluster_partition, generate_super_regular_pair
from treeembed.trees import (
    bare_path_decomposition,
    disjoint_bare_paths,
    disjoint_leaf_edges,
    random_tree,
    tidy_order,
)

SLACK = 1e-12


def circulant(k, offsets):
    A = np.zeros((k, k), dtype=bool)
    for o in offsets:
        A[np.arange(k), (np.arange(k) + o) % k] = True
    return A


def expander_suite():
    """Regular digraphs on 4..12 vertices that pass the exhaustive expansion check."""
    rng = np.random.default_rng(2024)
    suite = []
    for k in range(4, 13):
        candidates = [circulant(k, rng.choice(np.arange(1, k), size=d, replace=False))
                      for d in range(2, k) for _ in range(2)]
        candidates += [oriented_regular_digraph(k, r, seed=int(rng.integers(2**31)))
                       for r in range(2, (k - 1) // 2 + 1)]
        for A in candidates:
            D = Digraph.from_adjacency(A)
            if D.is_regular() and is_expander(D, "exhaustive"):
                suite.append(D)
    return suite


SUITE = expander_suite()
LENGTHS = (10, 100, 500)


def test_criterion_01_mixing_bound(acceptance_line):
    start = time.perf_counter()
    worst, checked = -np.inf, 0
    for D in SUITE:
        for n in LENGTHS:
            for pattern in (directed_pattern(n), antidirected_pattern(n)):
                for v in range(D.n):
                    dev = walk_distribution(D, pattern, v).max_sq_deviation()[-1]
                    worst = max(worst, dev - mixing_bound(D.n, n))
                    checked += 1
    secs = time.perf_counter() - start
    ok = len(SUITE) >= 50 and worst <= SLACK and secs < 60
    acceptance_line(1, ok, f"{len(SUITE)} expanders, {checked} walks, "
                           f"max(dev - bound) = {worst:.3e}, {secs:.1f}s")
    assert ok


def test_criterion_02_monotone_contraction(acceptance_line):
    worst, steps = -np.inf, 0
    for D in SUITE:
        for n in LENGTHS:
            for pattern in (directed_pattern(n), antidirected_pattern(n)):
                for v in range(D.n):
                    m = walk_distribution(D, pattern, v).m_values()
                    worst = max(worst, float(np.diff(m).max()))
                    steps += n
    ok = worst <= SLACK
    acceptance_line(2, ok, f"{steps} steps, max m(X_i) - m(X_(i-1)) = {worst:.3e}")
    assert ok


def test_criterion_03_allocation_balance(acceptance_line):
    start = time.perf_counter()
    D = Digraph.from_adjacency(circulant(8, (1, 2, 3, 5)))
    assert D.is_regular() == 4 and is_expander(D, "exhaustive")
    n = 10**5
    good, worst = 0, 0.0
    for seed in range(30):
        T = random_tree(n, 6, "uniform", seed=seed)
        phi = allocate(T, tidy_order(T), D, 0, seed=seed)
        assert phi.is_homomorphism(T, D) and phi.max_degree(T) <= 3
        dev = float(np.abs(phi.loads - n / 8).max() / (n / 8))
        worst = max(worst, dev)
        good += dev <= 0.05
    secs = time.perf_counter() - start
    ok = good >= 28 and secs < 60
    acceptance_line(3, ok, f"{good}/30 seeds within 5%, worst deviation {worst:.4f}, "
                           f"{secs:.1f}s")
    assert ok


def test_criterion_04_regular_expander(acceptance_line):
    alpha = 0.4
    runs = good = 0
    for n in (16, 18, 20):
        G = Digraph.complete(n)
        for seed in range(20):
            rng = np.random.default_rng(seed)
            cyc = rng.permutation(n)[: n // 2]
            F = Digraph(n, list(zip(cyc.tolist(), np.roll(cyc, -1).tolist())))
            H, d = regular_expander_subdigraph(G, F, alpha=alpha, seed=seed)
            runs += 1
            good += bool(H.is_regular() == d and H.contains(F) and G.contains(H)
                         and is_expander(H, "exhaustive") and d <= 32 * n ** (2 / 3) / alpha)
    ok = good == runs
    acceptance_line(4, ok, f"{good}/{runs} regular, contain F, exhaustive expanders")
    assert ok


def test_criterion_05_weight_shifting(acceptance_line):
    rng = np.random.default_rng(5)
    good = 0
    for i in range(200):
        k = int(rng.integers(4, 9))
        pattern = str(rng.choice(["++", "+-", "-+", "--"]))
        T, R, phi, diamonds, branches = shift_instance(k, 6, i, pattern)
        delta = random_zero_sum(k, 6, rng)
        out = shift_weights(phi, diamonds, branches, delta, T, R)
        good += bool(np.array_equal(out.loads, phi.loads + delta) and out.is_homomorphism(T, R))
    ok = good == 200
    acceptance_line(5, ok, f"{good}/200 instances shifted exactly")
    assert ok


def test_criterion_06_tree_bounds(acceptance_line):
    rng = np.random.default_rng(6)
    trees = good = 0
    seed = 0
    while trees < 1000:
        n = int(rng.integers(3, 201))
        T = random_tree(n, None, "uniform", seed=seed)
        seed += 1
        deg = T.degrees()
        if deg.max() <= 2:
            continue
        trees += 1
        ell = int((deg == 1).sum())
        p = len(bare_path_decomposition(T))
        good += bool(ell <= p <= 2 * ell - 3 and tidy_order(T).max_open(T) <= math.log2(n))
    ok = good == 1000
    acceptance_line(6, ok, f"{good}/1000 non-path trees meet both bounds")
    assert ok


def test_criterion_07_super_regular_matching(acceptance_line):
    m, found, bad_cert = 500, 0, 0
    for seed in range(20):
        G = generate_super_regular_pair(m, m, 0.3, seed=seed, eps=0.05)
        try:
            res = perfect_matching_super_regular(range(m), range(m, 2 * m), G)
        except Infeasible as exc:
            S = np.asarray(exc.certificate)
            bad_cert += int(G.adj[np.ix_(S, np.arange(m, 2 * m))].any(axis=0).sum() >= len(S))
            continue
        pairs = res.pairs
        found += bool(len(pairs) == m and len({w for _, w in pairs}) == m
                      and all(G.adj[u, w] for u, w in pairs))
    ok = found == 20 and bad_cert == 0
    acceptance_line(7, ok, f"{found}/20 perfect matchings, {bad_cert} invalid certificates")
    assert ok


def test_criterion_08_almost_spanning(acceptance_line):
    good, times = 0, []
    for seed in range(20):
        start = time.perf_counter()
        G = generate_host(2200, 0.15, seed=seed)
        T = random_tree(2000, 6, "uniform", seed=seed)
        try:
            # |G| = 1.1 |T|, so the slack passed to the pipeline is 0.1
            emb = embed_almost_spanning(G, T, 0.1, seed=seed, max_degree=6)
            good += bool(verify_embedding(G, T, emb))
        except TreeEmbedError:
            pass
        times.append(time.perf_counter() - start)
    ok = good >= 19 and np.mean(times) < 30
    acceptance_line(8, ok, f"{good}/20 verified, mean trial {np.mean(times):.1f}s")
    assert ok


def _spanning_run(family, allocate_fn, check_fn, embed_fn):
    n = 2400
    params = ParamHierarchy.default_for(n, 0.15)
    good = post_ok = allocated = 0
    times = []
    for seed in range(20):
        start = time.perf_counter()
        G = generate_host(n, 0.15, seed=seed)
        T = random_tree(n, None, family, seed=seed)
        forced = np.random.default_rng(seed).choice(n, 16, replace=False)
        try:
            dec, red = build_cluster_partition(G, params, seed=seed, forced_exceptional=forced)
            assert dec.k == 8 and len(dec.exceptional) >= 16
            al = allocate_fn(T, red, params, seed)
            allocated += 1
            post_ok += check_fn(al, red, params) == {}
            emb = embed_fn(al, G, dec, params, seed=seed)
            good += bool(verify_embedding(G, al.tree, emb))
        except TreeEmbedError:
            pass
        times.append(time.perf_counter() - start)
    return good, allocated, post_ok, float(np.mean(times))


def test_criterion_09_spanning_paths(acceptance_line):
    good, allocated, post_ok, secs = _spanning_run(
        "path-rich",
        lambda T, red, p, s: allocate_spanning_many_paths(T, None, red, None, p, seed=s),
        lambda al, red, p: check_paths_allocation(al, red, red.cycle or list(range(red.k)), p),
        embed_spanning_many_paths)
    ok = good >= 18 and post_ok == allocated
    acceptance_line(9, ok, f"{good}/20 verified, (i)-(vii) hold in {post_ok}/{allocated} "
                           f"allocations, mean trial {secs:.1f}s")
    assert ok


def test_criterion_10_spanning_leaves(acceptance_line):
    good, allocated, post_ok, secs = _spanning_run(
        "leaf-rich",
        lambda T, red, p, s: allocate_spanning_many_leaves(T, red, None, p, seed=s),
        check_leaves_allocation,
        embed_spanning_many_leaves)
    ok = good >= 18 and post_ok == allocated
    acceptance_line(10, ok, f"{good}/20 verified, (i)-(iv) hold in {post_ok}/{allocated} "
                            f"allocations, mean trial {secs:.1f}s")
    assert ok


def _valid_leaf_edges(T, edges):
    deg = T.degrees()
    used = set()
    for e in edges:
        if deg[e.leaf] != 1 or {e.leaf, e.stem} & used:
            return False
        if T.parent[e.leaf] != e.stem and T.parent[e.stem] != e.leaf:
            return False
        used |= {e.leaf, e.stem}
    return True


def _valid_bare_paths(T, paths):
    used = set()
    for p in paths:
        if len(p) != 7 or not p.is_bare(T) or set(p.vertices) & used:
            return False
        used |= set(p.vertices)
    return True


def test_criterion_11_dispatch(acceptance_line):
    rng = np.random.default_rng(11)
    good = 0
    routes = {"leaves": 0, "paths": 0}
    for i in range(200):
        n = int(rng.integers(200, 3001))
        family = ("uniform", "path-rich", "leaf-rich")[i % 3]
        T = random_tree(n, 5, family, seed=i)
        assert T.max_degree() <= 5
        choice = choose_route(T)
        routes[choice.route] += 1
        if choice.route == "leaves":
            edges = disjoint_leaf_edges(T)
            good += bool(len(edges) >= choice.leaf_needed and _valid_leaf_edges(T, edges))
        else:
            paths = disjoint_bare_paths(T, 7)
            good += bool(len(paths) >= choice.paths_needed and _valid_bare_paths(T, paths))
    ok = good == 200
    acceptance_line(11, ok, f"{good}/200 routes meet their precondition "
                            f"({routes['leaves']} leaves, {routes['paths']} paths)")
    assert ok


def _arc_check(GA, arcs, img):
    """Independent validity test: injective and every arc lands on an arc."""
    if len(set(img)) != len(img):
        return False
    return all(GA[img[u], img[v]] for u, v in arcs)


def test_criterion_12_micro_oracle(acceptance_line):
    rng = np.random.default_rng(12)
    agree = maps = 0
    for _ in range(200):
        nt = int(rng.integers(1, 7))
        ng = int(rng.integers(nt, 8))
        parents = [int(rng.integers(0, v)) for v in range(1, nt)]
        arcs = [(p, v) if rng.random() < 0.5 else (v, p) for v, p in enumerate(parents, start=1)]
        T = OrientedTree.from_arcs(nt, arcs, 0)
        A = rng.random((ng, ng)) < rng.uniform(0.3, 0.9)
        np.fill_diagonal(A, False)
        G = Digraph.from_adjacency(A)
        instance_ok = True
        exists = False
        for img in itertools.permutations(range(ng), nt):
            verdict = bool(verify_embedding(G, T, np.asarray(img)))
            truth = _arc_check(A, arcs, img)
            exists |= truth
            instance_ok &= verdict == truth
            maps += 1
        for _ in range(20):
            img = tuple(rng.integers(0, ng, size=nt).tolist())
            instance_ok &= bool(verify_embedding(G, T, np.asarray(img))) == _arc_check(A, arcs, img)
            maps += 1
        host = nx.DiGraph(list(zip(*np.nonzero(A))))
        host.add_nodes_from(range(ng))
        tree = nx.DiGraph(arcs)
        tree.add_nodes_from(range(nt))
        matcher = isomorphism.DiGraphMatcher(host, tree)
        instance_ok &= matcher.subgraph_is_monomorphic() == exists
        agree += instance_ok
    ok = agree == 200
    acceptance_line(12, ok, f"{agree}/200 instances agree ({maps} maps checked)")
    assert ok
