"""Constructive embedding of oriented trees in dense digraphs."""
from .errors import (
    ConstructionFailure,
    EmbeddingFailure,
    Infeasible,
    InvalidArgument,
    ReservationFailure,
    TreeEmbedError,
    VerificationMismatch,
)
from .graph import (
    Allocation,
    Digraph,
    Embedding,
    EmbeddingVerdict,
    OrientedTree,
    ParamHierarchy,
    min_semidegree,
    semidegree,
    verify_embedding,
)
from .pipeline import (
    ExperimentConfig,
    TrialRecord,
    choose_route,
    embed_almost_spanning,
    embed_spanning_tree,
    generate_host,
    run_experiments,
)
from .estimators import ClusterPartitioner, TreeAllocator, TreeEmbedder

__all__ = [
    "Allocation", "ClusterPartitioner", "ConstructionFailure", "Digraph", "Embedding",
    "EmbeddingFailure", "EmbeddingVerdict", "ExperimentConfig", "Infeasible", "InvalidArgument",
    "OrientedTree", "ParamHierarchy", "ReservationFailure", "TreeAllocator", "TreeEmbedError",
    "TreeEmbedder", "TrialRecord", "VerificationMismatch", "choose_route",
    "embed_almost_spanning", "embed_spanning_tree", "generate_host", "min_semidegree",
    "run_experiments", "semidegree", "verify_embedding",
]
