import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from treeembed.errors import InvalidArgument
from treeembed.graph import (
    Allocation, Digraph, Embedding, OrientedTree, ParamHierarchy,
    digraph_from_edgelist, digraph_from_json, digraph_to_edgelist, digraph_to_json,
    min_semidegree, semidegree, tree_from_json, tree_from_text, tree_to_json, tree_to_text,
    verify_embedding,
)
from treeembed.trees import path_tree

from conftest import digraphs, oriented_trees


def brute_force_is_embedding(G, T, image):
    image = list(image)
    if len(set(image)) != len(image):
        return False
    return all(G.has_arc(image[u], image[v]) for u, v in T.arcs())


class TestSemidegree:
    def test_complete(self):
        G = Digraph.complete(5)
        assert all(semidegree(G, v) == 4 for v in range(5))
        assert min_semidegree(G) == 4

    def test_directed_triangle(self):
        G = Digraph.cycle(3)
        assert [semidegree(G, v) for v in range(3)] == [1, 1, 1]

    def test_mixed_vertex(self):
        # in-degree 1, out-degree 2
        G = Digraph(4, [(1, 2), (1, 3), (2, 1)])
        assert semidegree(G, 1) == 1

    def test_directed_path_has_zero(self):
        assert min_semidegree(Digraph(3, [(0, 1), (1, 2)])) == 0

    def test_random_dense(self):
        rng = np.random.default_rng(7)
        adj = rng.random((200, 200)) < 0.65
        np.fill_diagonal(adj, False)
        G = Digraph.from_adjacency(adj)
        expect = min(min(sum(adj[u, v] for u in range(200)), sum(adj[v, u] for u in range(200)))
                     for v in range(200))
        assert min_semidegree(G) == expect
        # Hoeffding plus a union bound over 400 degrees, failure probability 1e-6
        t = np.sqrt(199 / 2 * np.log(4 * 200 / 1e-6))
        assert 0.65 * 199 - t <= expect <= 0.65 * 199

    def test_out_of_range(self):
        with pytest.raises(InvalidArgument):
            semidegree(Digraph.complete(3), 3)

    def test_empty(self):
        with pytest.raises(InvalidArgument):
            min_semidegree(Digraph(0))


class TestDigraph:
    def test_self_loop_rejected(self):
        with pytest.raises(InvalidArgument):
            Digraph(3, [(1, 1)])

    def test_duplicate_arcs_collapse(self):
        assert Digraph(3, [(0, 1), (0, 1)]).arc_count == 1

    def test_oriented_flag(self):
        assert Digraph.cycle(4).is_oriented()
        assert not Digraph.complete(3).is_oriented()

    def test_regularity(self):
        assert Digraph.complete(5).is_regular() == 4
        assert Digraph(3, [(0, 1)]).is_regular() is None

    @given(digraphs())
    def test_no_self_loops_and_degree_sums(self, G):
        assert not G.adj.diagonal().any()
        assert G.out_degree().sum() == G.in_degree().sum() == G.arc_count


class TestTree:
    def test_parent_links(self):
        with pytest.raises(InvalidArgument):
            OrientedTree([-1, 2, 1], [False, True, True], 0)

    @given(oriented_trees())
    def test_structure(self, T):
        assert (T.parent >= 0).sum() == T.n - 1
        assert sorted(T.bfs_order()) == list(range(T.n))
        assert len(T.arcs()) == T.n - 1
        for v in range(T.n):
            assert T.degrees()[v] == len(T.neighbours(v))

    @given(oriented_trees(min_n=2))
    def test_rerooting_keeps_arcs(self, T):
        r = T.n - 1
        assert sorted(T.rerooted(r).arcs()) == sorted(T.arcs())


class TestVerifyEmbedding:
    def test_identity_on_complete(self):
        T = path_tree(3)
        assert verify_embedding(Digraph.complete(4), T, [0, 1, 2])

    def test_antidirected_path_not_in_triangle(self):
        # a -> b <- c
        T = OrientedTree.from_arcs(3, [(0, 1), (2, 1)])
        C3 = Digraph.cycle(3)
        results = [bool(verify_embedding(C3, T, p)) for p in itertools.permutations(range(3))]
        assert len(results) == 6 and not any(results)

    def test_collision_reported(self):
        T = path_tree(3)
        verdict = verify_embedding(Digraph.complete(4), T, [0, 1, 0])
        assert not verdict
        assert any("collision" in d for d in verdict.diagnostics)

    def test_unmapped_vertex(self):
        verdict = verify_embedding(Digraph.complete(4), path_tree(3), {0: 0, 1: 1})
        assert not verdict and verdict.unmapped == [2]

    def test_accepts_embedding_object(self):
        assert verify_embedding(Digraph.complete(3), path_tree(2), Embedding([2, 0]))

    @given(digraphs(min_n=3, max_n=7), oriented_trees(max_n=6), st.randoms(use_true_random=False))
    def test_agrees_with_brute_force(self, G, T, rnd):
        image = [rnd.randrange(G.n) for _ in range(T.n)]
        assert bool(verify_embedding(G, T, image)) == brute_force_is_embedding(G, T, image)


class TestParamHierarchy:
    @pytest.mark.parametrize("n,alpha", [(2000, 0.2), (2400, 0.15), (600, 0.37), (100, 0.1),
                                         (300, 0.45)])
    def test_default_chain_is_consistent(self, n, alpha):
        p = ParamHierarchy.default_for(n, alpha)
        assert p.chain_violations() == []
        assert 1 / p.n < 1 / p.K < 1 / p.k < p.eps < p.gamma < p.beta <= p.d
        assert p.d < p.lam_prime < p.lam < p.eta < p.alpha
        # some core on k vertices can reach semidegree (1/2 + eta) k
        assert np.ceil((0.5 + p.eta) * p.k - 1e-9) <= p.k - 1

    def test_default_k_values(self):
        assert ParamHierarchy.default_for(2400, 0.15).k == 8
        assert ParamHierarchy.default_for(100, 0.1).k == 12

    def test_broken_chain_rejected(self):
        p = ParamHierarchy.default_for(2000, 0.2)
        with pytest.raises(InvalidArgument):
            p.replace(eps=0.19)

    def test_lenient_mode_lists_violations(self):
        p = ParamHierarchy.default_for(2000, 0.2).replace(strict=False, eps=0.19)
        assert p.violations

    def test_degree_budget(self):
        p = ParamHierarchy.default_for(10**5, 0.2)
        assert p.degree_budget() == pytest.approx((10**5) ** (1 / np.sqrt(p.K * np.log(10**5))))


class TestFormats:
    @given(digraphs())
    def test_digraph_round_trips(self, G):
        for text in (digraph_to_edgelist(G),):
            assert np.array_equal(digraph_from_edgelist(text).adj, G.adj)
        assert np.array_equal(digraph_from_json(digraph_to_json(G)).adj, G.adj)

    @given(oriented_trees())
    def test_tree_round_trips(self, T):
        assert tree_from_text(tree_to_text(T)) == T
        assert tree_from_json(tree_to_json(T)) == T

    def test_tree_text_layout(self):
        text = tree_to_text(OrientedTree.from_arcs(3, [(0, 1), (2, 0)]))
        assert text.splitlines()[0] == "3 0"
        assert set(text.splitlines()[1:]) == {"1 0 +", "2 0 -"}

    def test_bad_direction(self):
        with pytest.raises(InvalidArgument):
            tree_from_text("2 0\n1 0 x\n")

    def test_embedding_json(self):
        e = Embedding([3, 1, 2])
        assert np.array_equal(Embedding.from_json(e.to_json()).image, e.image)

    def test_allocation_json_and_degrees(self):
        T = OrientedTree.from_arcs(4, [(0, 1), (0, 2), (3, 0)])
        phi = Allocation([0, 1, 1, 2], 3)
        assert phi.loads.tolist() == [1, 2, 1]
        assert phi.max_degree(T) == 2
        back = Allocation.from_json(phi.to_json())
        assert np.array_equal(back.target, phi.target) and back.n_targets == 3
