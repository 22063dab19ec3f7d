import math

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from treeembed.errors import InvalidArgument
from treeembed.graph import OrientedTree
from treeembed.trees import (
    BarePath, check_far_apart, complete_binary_tree, contract_bare_paths, bare_path_decomposition,
    disjoint_bare_paths, disjoint_leaf_edges, far_apart_families, is_tree_partition, leaf_is_out,
    path_tree, random_tree, spider_tree, split_tree, star_tree, tidy_order,
)

from conftest import oriented_trees


def leaf_count(T):
    return int((T.degrees() == 1).sum())


def is_path(T):
    return T.max_degree() <= 2


def as_undirected(T):
    g = nx.Graph()
    g.add_nodes_from(range(T.n))
    g.add_edges_from(T.edges())
    return g


class TestSplit:
    def test_path_all_vertices(self):
        T = path_tree(9)
        s = split_tree(T, range(9))
        assert is_tree_partition(T, [s.first, s.second])
        assert len(set(s.first) & set(s.second)) == 1
        assert min(len(s.first), len(s.second)) >= 3

    def test_star_leaves(self):
        T = star_tree(6)
        s = split_tree(T, range(1, 7))
        leaves = set(range(1, 7))
        assert len(leaves & set(s.first)) >= 2 and len(leaves & set(s.second)) >= 2
        assert is_tree_partition(T, [s.first, s.second])

    def test_single_vertex_degenerate(self):
        s = split_tree(OrientedTree.single_vertex(), [0])
        assert list(s.first) == list(s.second) == [0]

    def test_empty_L(self):
        with pytest.raises(InvalidArgument):
            split_tree(path_tree(3), [])

    @given(oriented_trees(min_n=2, max_n=60), st.data())
    def test_partition_and_thirds(self, T, data):
        L = data.draw(st.sets(st.integers(0, T.n - 1), min_size=1))
        s = split_tree(T, sorted(L))
        assert is_tree_partition(T, [s.first, s.second])
        assert set(s.first) & set(s.second) == {s.shared}
        for part in (s.first, s.second):
            assert len(L & set(part.tolist())) >= len(L) / 3


class TestTidyOrder:
    def test_path_from_end(self):
        T = path_tree(20)
        o = tidy_order(T)
        assert o.order.tolist() == list(range(20))
        assert o.max_open(T) <= 1

    def test_complete_binary_127(self):
        T = complete_binary_tree(127)
        o = tidy_order(T)
        assert o.is_ancestral(T)
        assert o.max_open(T) <= 7

    def test_star(self):
        T = star_tree(10)
        o = tidy_order(T)
        assert o.order[0] == 0 and o.max_open(T) <= 1

    def test_split_piece_first(self):
        T = spider_tree(3, 5)
        small, big = [0] + list(range(1, 6)), [0] + list(range(6, 16))
        from treeembed.trees import TreeSplit
        o = tidy_order(T, TreeSplit(np.array(small), np.array(big), 0))
        assert set(o.order[:len(small)].tolist()) == set(small)
        assert o.is_ancestral(T)

    def test_bad_split(self):
        from treeembed.trees import TreeSplit
        T = path_tree(5)
        with pytest.raises(InvalidArgument):
            tidy_order(T, TreeSplit(np.array([0, 1, 2]), np.array([2, 3, 4]), 2))

    @given(oriented_trees(max_n=80))
    def test_open_count_bound(self, T):
        o = tidy_order(T)
        assert o.is_ancestral(T)
        assert o.max_open(T) <= max(1, math.log2(T.n))


class TestBarePaths:
    def test_path(self):
        assert len(bare_path_decomposition(path_tree(10))) == 1

    def test_star_k13(self):
        assert len(bare_path_decomposition(star_tree(3))) == 3

    def test_spider_legs(self):
        T = spider_tree(3, 4)
        paths = bare_path_decomposition(T)
        assert len(paths) == 3
        assert sorted(sorted(p.vertices) for p in paths) == [
            [0, 1, 2, 3, 4], [0, 5, 6, 7, 8], [0, 9, 10, 11, 12]]

    def test_single_vertex(self):
        with pytest.raises(InvalidArgument):
            bare_path_decomposition(OrientedTree.single_vertex())

    @given(oriented_trees(min_n=2, max_n=80))
    def test_decomposition_bounds(self, T):
        paths = bare_path_decomposition(T)
        assert all(p.is_bare(T) for p in paths)
        assert is_tree_partition(T, [p.vertices for p in paths])
        if is_path(T):
            assert len(paths) == 1
        else:
            ell = leaf_count(T)
            assert ell <= len(paths) <= 2 * ell - 3

    def test_disjoint_on_long_path(self):
        paths = disjoint_bare_paths(path_tree(1000))
        assert len(paths) == 124 == 999 // 8

    def test_disjoint_on_star(self):
        assert disjoint_bare_paths(star_tree(20)) == []

    def test_disjoint_subdivided_star(self):
        assert len(disjoint_bare_paths(spider_tree(50, 15))) == 50

    def test_order_len_too_small(self):
        with pytest.raises(InvalidArgument):
            disjoint_bare_paths(path_tree(10), order_len=2)

    @given(oriented_trees(min_n=2, max_n=120))
    def test_disjoint_are_bare_and_disjoint(self, T):
        paths = disjoint_bare_paths(T)
        used = [v for p in paths for v in p]
        assert len(used) == len(set(used))
        assert all(len(p) == 7 and p.is_bare(T) for p in paths)


class TestLeafEdges:
    def test_star(self):
        assert len(disjoint_leaf_edges(star_tree(5))) == 1

    def test_path6(self):
        assert len(disjoint_leaf_edges(path_tree(6))) == 2

    def test_binary_15(self):
        T = complete_binary_tree(15)
        assert len(disjoint_leaf_edges(T)) == 4

    def test_all_outward(self):
        edges = disjoint_leaf_edges(spider_tree(6, 2, out=True))
        assert edges and all(e.outward for e in edges)
        assert all(leaf_is_out(spider_tree(6, 2), e.leaf) for e in edges)

    @given(oriented_trees(min_n=2, max_n=14))
    def test_maximum_by_brute_force(self, T):
        edges = disjoint_leaf_edges(T)
        verts = [v for e in edges for v in (e.tail, e.head)]
        assert len(verts) == len(set(verts))
        deg = T.degrees()
        assert all(deg[e.leaf] == 1 and T.has_arc(e.tail, e.head) for e in edges)
        g = nx.Graph()
        g.add_edges_from((u, v) for u, v in T.edges() if deg[u] == 1 or deg[v] == 1)
        assert len(edges) == len(nx.max_weight_matching(g, maxcardinality=True))


class TestFarApart:
    def test_path_large(self):
        # the degree precondition is waived here: n^{1/sqrt(64 ln n)} < 2
        n = 10**5
        T = path_tree(n)
        fam = far_apart_families(T, 64, check_degree=False)
        assert check_far_apart(T, fam, 64) == []
        assert fam.covered() >= n - n ** (5 / 12)
        assert max(len(s) for s in fam.sets) <= n ** (2 / 3)

    def test_bounded_degree_random(self):
        n = 10**5
        T = random_tree(n, 4, seed=3)
        fam = far_apart_families(T, 5)
        assert check_far_apart(T, fam, 5) == []

    def test_star_rejected(self):
        with pytest.raises(InvalidArgument):
            far_apart_families(star_tree(999), 64)

    def test_path_degree_precondition(self):
        with pytest.raises(InvalidArgument):
            far_apart_families(path_tree(10**5), 64)


class TestContraction:
    def test_whole_path(self):
        T = path_tree(7)
        c = contract_bare_paths(T, [BarePath(tuple(range(7)))])
        assert c.tree.n == 1
        assert c.expand() == T

    def test_spider_legs(self):
        T = spider_tree(3, 7)
        legs = [BarePath(tuple(range(1 + 7 * i, 8 + 7 * i))) for i in range(3)]
        c = contract_bare_paths(T, legs)
        assert c.tree.n == 4 and sorted(c.tree.degrees().tolist()) == [1, 1, 1, 3]
        assert sorted(c.expand().arcs()) == sorted(T.arcs())

    def test_empty_list(self):
        T = spider_tree(2, 3)
        assert contract_bare_paths(T, []).tree == T

    def test_overlap_rejected(self):
        with pytest.raises(InvalidArgument):
            contract_bare_paths(path_tree(9), [BarePath((0, 1, 2)), BarePath((2, 3, 4))])

    @settings(max_examples=40)
    @given(oriented_trees(min_n=2, max_n=150))
    def test_round_trip(self, T):
        paths = disjoint_bare_paths(T, 3)
        c = contract_bare_paths(T, paths)
        assert c.tree.n == T.n - 2 * len(paths)
        back = c.expand()
        assert sorted(back.arcs()) == sorted(T.arcs())


class TestGenerators:
    def test_single_vertex(self):
        for fam in ("uniform", "path-rich", "leaf-rich"):
            assert random_tree(1, 3, fam, seed=0).n == 1

    def test_infeasible_degree(self):
        with pytest.raises(InvalidArgument):
            random_tree(10, 1)

    def test_unknown_family(self):
        with pytest.raises(InvalidArgument):
            random_tree(10, family="bushy")

    def test_uniform_max_degree_moon(self):
        n = 10**4
        bound = 5 * math.log(n) / math.log(math.log(n))
        worst = max(random_tree(n, seed=s).max_degree() for s in range(100))
        assert worst <= bound

    def test_path_rich(self):
        T = random_tree(10**4, family="path-rich", seed=0)
        assert len(disjoint_bare_paths(T)) >= 500

    def test_leaf_rich(self):
        n = 2400
        T = random_tree(n, 5, "leaf-rich", seed=0)
        assert len(disjoint_leaf_edges(T)) >= n / 10
        assert T.max_degree() <= 5

    @given(st.integers(2, 300), st.integers(3, 6), st.sampled_from(["uniform", "path-rich", "leaf-rich"]),
           st.integers(0, 2**31))
    def test_valid_trees_under_cap(self, n, cap, family, seed):
        T = random_tree(n, cap, family, seed=seed)
        assert T.n == n and T.max_degree() <= cap
        assert nx.is_tree(as_undirected(T))

    def test_seed_determinism(self):
        a = random_tree(500, 5, "leaf-rich", seed=9)
        b = random_tree(500, 5, "leaf-rich", seed=9)
        assert a == b
