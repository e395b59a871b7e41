"""Language-model backends behind one contract.

A backend answers one question: given a context (knowledge prefix plus the
tokens emitted so far), what are the log-probabilities of a set of candidate
token texts, and how uncertain is the next-token distribution overall?  The
normalized entropy lands in [0, 1] (0 = deterministic, 1 = uniform) so the
decoder can gate its faithfulness reward on it regardless of backend.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Protocol, runtime_checkable

# Finite floor so the identity copy stays expressible on backends without
# a native unknown-symbol path.
UNKNOWN_LOGPROB = math.log(1e-8)


@dataclass(frozen=True)
class LMQuery:
    knowledge_prefix: str
    token_prefix: tuple[str, ...]
    candidates: tuple[str, ...]

    def __post_init__(self):
        if not self.candidates:
            raise ValueError("LMQuery needs at least one candidate")


@dataclass(frozen=True)
class LMResponse:
    logprobs: Mapping[str, float]
    entropy: float

    def __post_init__(self):
        if not 0.0 <= self.entropy <= 1.0:
            raise ValueError(f"entropy out of [0, 1]: {self.entropy}")


@runtime_checkable
class LMBackend(Protocol):
    concurrency_safe: bool

    def next_token_logprobs(self, query: LMQuery) -> LMResponse: ...


def next_token_logprobs(backend: LMBackend, query: LMQuery) -> LMResponse:
    """Uniform entry point over any backend."""
    return backend.next_token_logprobs(query)


def flatten_prefix(knowledge_prefix: str, token_prefix: Iterable[str]) -> str:
    """Character context seen by the model: knowledge, then emitted tokens."""
    return knowledge_prefix + "".join(token_prefix)


def normalized_entropy(probs: Iterable[float]) -> float:
    """Entropy of a distribution divided by its maximum, log(vocabulary size).

    The divisor counts the whole support, zero entries included, mirroring
    a model that normalizes by the size of its full output vocabulary.
    """
    probs = list(probs)
    if len(probs) <= 1:
        return 0.0
    h = -sum(p * math.log(p) for p in probs if p > 0.0)
    return min(1.0, max(0.0, h / math.log(len(probs))))


from .ngram import NGramBackend, NGramModel, train_ngram  # noqa: E402
from .remote import (  # noqa: E402
    MalformedReplyError,
    MissingCandidateError,
    RemoteBackend,
    RemoteLMError,
    TransportError,
)

__all__ = [
    "LMBackend",
    "LMQuery",
    "LMResponse",
    "MalformedReplyError",
    "MissingCandidateError",
    "NGramBackend",
    "NGramModel",
    "RemoteBackend",
    "RemoteLMError",
    "TransportError",
    "UNKNOWN_LOGPROB",
    "flatten_prefix",
    "next_token_logprobs",
    "normalized_entropy",
    "train_ngram",
]
