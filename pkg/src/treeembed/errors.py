"""Exception hierarchy shared by every stage of the pipeline.

Each class carries the CLI exit code it maps to, so the command line layer
never has to guess.
"""
from __future__ import annotations

from typing import Any


class TreeEmbedError(Exception):
    exit_code = 1

    def __init__(self, message: str, **details: Any):
        super().__init__(message)
        self.details = details


class InvalidArgument(TreeEmbedError, ValueError):
    """A precondition on the inputs does not hold."""

    exit_code = 2


class ConstructionFailure(TreeEmbedError, RuntimeError):
    """A randomized construction could not reach its postconditions."""

    exit_code = 3

    def __init__(self, message: str, stage: str = "", **details: Any):
        super().__init__(message, **details)
        self.stage = stage


class EmbeddingFailure(TreeEmbedError, RuntimeError):
    """The greedy embedder got stuck; ``snapshot`` describes the state."""

    exit_code = 4

    def __init__(self, message: str, snapshot: dict | None = None, **details: Any):
        super().__init__(message, **details)
        self.snapshot = snapshot or {}


class ReservationFailure(EmbeddingFailure):
    pass


class Infeasible(TreeEmbedError):
    """No object of the requested kind exists; ``certificate`` proves it."""

    exit_code = 4

    def __init__(self, message: str, certificate: Any = None, **details: Any):
        super().__init__(message, **details)
        self.certificate = certificate


class VerificationMismatch(TreeEmbedError):
    exit_code = 5
