"""scikit-learn style wrappers around the partition, allocation and embedding steps."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .allocation import allocate
from .errors import InvalidArgument
from .graph import Digraph, Embedding, ParamHierarchy, verify_embedding
from .pipeline import embed_almost_spanning, embed_spanning_tree, host_hierarchy
from .regularity import build_cluster_partition
from .validation import check_digraph, check_fraction, check_seed, check_tree


class ClusterPartitioner(TransformerMixin, BaseEstimator):
    """Regularity-style partition of a dense host.

    ``fit(G)`` builds the clusters and the reduced digraph; ``transform(G)``
    returns, per host vertex, its cluster index or k + j for the j-th
    exceptional vertex.
    """

    def __init__(self, alpha=None, k=None, mode="sampled", trials=2000, seed=None):
        self.alpha = alpha
        self.k = k
        self.mode = mode
        self.trials = trials
        self.seed = seed

    def _params(self, G: Digraph) -> ParamHierarchy:
        if self.alpha is None:
            p = host_hierarchy(G)
            return p if self.k is None else ParamHierarchy.default_for(G.n, p.alpha, k=self.k)
        return ParamHierarchy.default_for(G.n, check_fraction(self.alpha, "alpha", 0, 0.5),
                                          k=self.k)

    def fit(self, G, y=None):
        G = check_digraph(G)
        if self.mode not in ("sampled", "exhaustive"):
            raise InvalidArgument(f"unknown mode {self.mode!r}")
        self.params_ = self._params(G)
        self.decomposition_, self.reduced_ = build_cluster_partition(
            G, self.params_, seed=check_seed(self.seed), mode=self.mode, trials=self.trials)
        self.n_vertices_ = G.n
        return self

    def transform(self, G):
        check_is_fitted(self, "decomposition_")
        G = check_digraph(G)
        if G.n != self.n_vertices_:
            raise InvalidArgument(f"fitted on {self.n_vertices_} vertices, got {G.n}")
        return self.decomposition_.assignment(G.n)


class TreeAllocator(BaseEstimator):
    """Random homomorphism of trees into a fixed digraph.

    ``fit(D)`` stores the target digraph, ``transform(T)`` returns the image
    array of one random allocation rooted at ``x1``.
    """

    def __init__(self, x1=0, seed=None):
        self.x1 = x1
        self.seed = seed

    def fit(self, D, y=None):
        self.target_ = check_digraph(D)
        if not 0 <= self.x1 < self.target_.n:
            raise InvalidArgument("x1 is not a vertex of the target digraph")
        return self

    def transform(self, T) -> np.ndarray:
        check_is_fitted(self, "target_")
        T = check_tree(T)
        return allocate(T, None, self.target_, self.x1, seed=check_seed(self.seed)).target

    def fit_transform(self, D, T) -> np.ndarray:
        return self.fit(D).transform(T)


class TreeEmbedder(BaseEstimator):
    """Embed oriented trees into a fixed host.

    ``mode="approx"`` needs |G| >= (1 + alpha)|T|; ``mode="spanning"`` needs
    |T| = |G| and picks the leaves or paths route unless ``route`` is given.
    ``predict(T)`` returns the image array (tree vertex -> host vertex) and
    keeps the full Embedding, with its log, in ``embedding_``.
    """

    def __init__(self, alpha=0.1, mode="approx", route=None, max_degree=None, seed=None):
        self.alpha = alpha
        self.mode = mode
        self.route = route
        self.max_degree = max_degree
        self.seed = seed

    def fit(self, G, y=None):
        if self.mode not in ("approx", "spanning"):
            raise InvalidArgument(f"unknown mode {self.mode!r}")
        check_fraction(self.alpha, "alpha", 0, 0.5)
        self.host_ = check_digraph(G)
        return self

    def predict(self, T) -> np.ndarray:
        check_is_fitted(self, "host_")
        T = check_tree(T)
        seed = check_seed(self.seed)
        if self.mode == "approx":
            emb = embed_almost_spanning(self.host_, T, self.alpha, seed=seed,
                                        max_degree=self.max_degree)
        else:
            emb = embed_spanning_tree(self.host_, T, self.alpha, seed=seed, route=self.route,
                                      max_degree=self.max_degree)
        self.embedding_: Embedding = emb
        return emb.image.copy()

    def score(self, T, image=None) -> float:
        """1.0 if ``image`` (default: a fresh prediction) embeds T into the host, else 0.0."""
        check_is_fitted(self, "host_")
        T = check_tree(T)
        image = self.predict(T) if image is None else image
        return float(bool(verify_embedding(self.host_, T, image)))
