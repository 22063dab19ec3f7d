import networkx as nx
import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from treeembed import ClusterPartitioner, TreeAllocator, TreeEmbedder
from treeembed.errors import InvalidArgument
from treeembed.graph import Digraph, OrientedTree
from treeembed.pipeline import generate_host
from treeembed.trees import random_tree
from treeembed.validation import check_digraph, check_fraction, check_seed, check_tree


@pytest.fixture(scope="module")
def host():
    return generate_host(1100, 0.15, seed=0)


def test_partitioner(host):
    est = ClusterPartitioner(seed=0).fit(host)
    labels = est.transform(host)
    k = est.decomposition_.k
    assert labels.shape == (host.n,) and labels.min() >= 0
    sizes = np.bincount(labels[labels < k])
    assert (sizes == est.decomposition_.m).all()
    assert (labels >= k).sum() == len(est.decomposition_.exceptional)


def test_partitioner_checks(host):
    with pytest.raises(NotFittedError):
        ClusterPartitioner().transform(host)
    with pytest.raises(InvalidArgument):
        ClusterPartitioner(mode="greedy").fit(host)
    est = ClusterPartitioner(seed=0).fit(host)
    with pytest.raises(InvalidArgument):
        est.transform(generate_host(50, 0.2, seed=0))


def test_allocator_is_a_homomorphism():
    D = Digraph.from_adjacency(~np.eye(5, dtype=bool))
    T = random_tree(200, 4, "uniform", seed=1)
    img = TreeAllocator(x1=2, seed=3).fit_transform(D, T)
    assert img[T.root] == 2
    assert all(D.adj[img[a], img[b]] for a, b in T.arcs())
    with pytest.raises(InvalidArgument):
        TreeAllocator(x1=9).fit(D)


def test_embedder_approx(host):
    T = random_tree(1000, 6, "uniform", seed=2)
    est = TreeEmbedder(alpha=0.1, max_degree=6, seed=4).fit(host)
    img = est.predict(T)
    assert len(set(img.tolist())) == T.n
    assert est.score(T, img) == 1.0
    img[0] = img[1]
    assert est.score(T, img) == 0.0


def test_embedder_params_roundtrip():
    est = TreeEmbedder(alpha=0.2, mode="spanning", route="leaves", seed=1)
    assert clone(est).get_params() == est.get_params()
    with pytest.raises(InvalidArgument):
        TreeEmbedder(mode="greedy").fit(np.zeros((2, 2), dtype=int))
    with pytest.raises(InvalidArgument):
        TreeEmbedder(alpha=0.7).fit(np.zeros((2, 2), dtype=int))


def test_networkx_inputs():
    G = nx.DiGraph([(0, 1), (1, 2), (2, 0)])
    assert check_digraph(G).arc_count == 3
    T = check_tree(nx.DiGraph([(0, 1), (2, 1)]))
    assert isinstance(T, OrientedTree) and T.n == 3
    with pytest.raises(InvalidArgument):
        check_tree(nx.DiGraph([(0, 1), (1, 2), (2, 0)]))
    with pytest.raises(InvalidArgument):
        check_digraph(nx.DiGraph([(1, 2)]))
    with pytest.raises(InvalidArgument):
        check_digraph(np.ones((2, 3)))
    with pytest.raises(InvalidArgument):
        check_digraph(np.full((2, 2), 2))
    with pytest.raises(InvalidArgument):
        check_tree([[0, 1]])


def test_scalar_checks():
    assert check_fraction(0.3, "a") == 0.3
    for bad in (True, "x", 1.0, 0):
        with pytest.raises(InvalidArgument):
            check_fraction(bad, "a")
    assert check_seed(None) is None and check_seed(np.int64(3)) == 3
    for bad in (-1, 1.5, True):
        with pytest.raises(InvalidArgument):
            check_seed(bad)
