"""Model references and embedding vectors."""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..errors import UndefinedStatisticError


@dataclass(frozen=True)
class ModelRef:
    """Points at one model behind one provider endpoint.

    Temperature defaults to 0.2; all scripted runs keep it there for
    consistency across models.
    """

    provider_id: str
    model_id: str
    temperature: float = 0.2
    max_output_tokens: int = 2048

    def __post_init__(self):
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError(f"temperature must be in [0, 2], got {self.temperature}")
        if self.max_output_tokens <= 0:
            raise ValueError("max_output_tokens must be positive")


@dataclass(frozen=True)
class EmbeddingVector:
    """A finite embedding with the id of the model that produced it."""

    values: tuple[float, ...]
    model_id: str

    def __post_init__(self):
        if not self.values:
            raise ValueError("embedding vector must be non-empty")
        if not all(math.isfinite(v) for v in self.values):
            raise ValueError("embedding vector contains non-finite values")

    @property
    def dim(self) -> int:
        return len(self.values)

    def norm(self) -> float:
        return math.sqrt(sum(v * v for v in self.values))


def normalized(values: list[float], model_id: str) -> EmbeddingVector:
    """Scale to unit L2 norm; zero vectors are rejected."""
    norm = math.sqrt(sum(v * v for v in values))
    if norm == 0.0:
        raise ValueError("cannot normalize a zero vector")
    return EmbeddingVector(tuple(v / norm for v in values), model_id)


def cosine(u: EmbeddingVector, v: EmbeddingVector) -> float:
    """Cosine similarity, clamped to [-1, 1] against rounding."""
    if u.dim != v.dim:
        raise ValueError(f"dimension mismatch: {u.dim} vs {v.dim}")
    nu, nv = u.norm(), v.norm()
    if nu == 0.0 or nv == 0.0:
        raise UndefinedStatisticError("cosine similarity is undefined for zero vectors")
    dot = sum(a * b for a, b in zip(u.values, v.values))
    return max(-1.0, min(1.0, dot / (nu * nv)))
