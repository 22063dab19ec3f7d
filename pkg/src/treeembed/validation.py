"""Input coercion shared by the estimators and the command line."""
from __future__ import annotations

import numbers

import networkx as nx
import numpy as np

from .errors import InvalidArgument
from .graph import Digraph, OrientedTree


def check_digraph(G) -> Digraph:
    """Accept a Digraph, a square 0/1 matrix or a networkx DiGraph on 0..n-1."""
    if isinstance(G, Digraph):
        return G
    if isinstance(G, nx.DiGraph):
        n = G.number_of_nodes()
        if set(G.nodes) != set(range(n)):
            raise InvalidArgument("networkx digraph must be labelled 0..n-1")
        if any(u == v for u, v in G.edges):
            raise InvalidArgument("self-loops are not allowed")
        return Digraph(n, G.edges)
    arr = np.asarray(G)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise InvalidArgument(f"expected a square adjacency matrix, got shape {arr.shape}")
    if arr.dtype != bool and not np.isin(arr, (0, 1)).all():
        raise InvalidArgument("adjacency entries must be 0 or 1")
    return Digraph.from_adjacency(arr.astype(bool))


def check_tree(T) -> OrientedTree:
    """Accept an OrientedTree or a networkx DiGraph whose underlying graph is a tree."""
    if isinstance(T, OrientedTree):
        return T
    if isinstance(T, nx.DiGraph):
        n = T.number_of_nodes()
        if n == 0 or set(T.nodes) != set(range(n)):
            raise InvalidArgument("networkx tree must be labelled 0..n-1")
        if not nx.is_tree(T.to_undirected(as_view=True)) or T.number_of_edges() != n - 1:
            raise InvalidArgument("not an oriented tree")
        return OrientedTree.from_arcs(n, T.edges)
    raise InvalidArgument(f"cannot read a tree from {type(T).__name__}")


def check_fraction(value, name: str, low: float = 0.0, high: float = 1.0) -> float:
    """Real number strictly between ``low`` and ``high``."""
    if isinstance(value, bool) or not isinstance(value, numbers.Real):
        raise InvalidArgument(f"{name} must be a real number")
    value = float(value)
    if not low < value < high:
        raise InvalidArgument(f"{name}={value} must lie in ({low}, {high})")
    return value


def check_seed(seed) -> int | None:
    """Seeds are None or non-negative integers (numpy generators are passed through)."""
    if seed is None or isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, bool) or not isinstance(seed, numbers.Integral) or seed < 0:
        raise InvalidArgument(f"seed must be a non-negative integer, got {seed!r}")
    return int(seed)
