"""Closed-setting source finding: embed a pool of unique source names,
rank them against per-record queries by cosine, and score Hit@K.

Also houses the lexical-overlap diagnostic that buckets retrieval outcomes
by how many name tokens the target shares with its gold source.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .corpus import AnalogyRecord
from .errors import EvaluationError, UndefinedStatisticError
from .providers.embedding import EmbeddingClient
from .providers.models import EmbeddingVector, ModelRef


class QueryConfig(str, Enum):
    NAME_ONLY = "NAME_ONLY"
    NAME_BACKGROUND = "NAME_BACKGROUND"
    NAME_SUBCONCEPTS = "NAME_SUBCONCEPTS"
    NAME_SUBCONCEPTS_BACKGROUND = "NAME_SUBCONCEPTS_BACKGROUND"

    @property
    def needs_background(self) -> bool:
        return self in (QueryConfig.NAME_BACKGROUND, QueryConfig.NAME_SUBCONCEPTS_BACKGROUND)

    @property
    def needs_subconcepts(self) -> bool:
        return self in (QueryConfig.NAME_SUBCONCEPTS, QueryConfig.NAME_SUBCONCEPTS_BACKGROUND)


@dataclass(frozen=True)
class CandidatePool:
    """Unique source names with their embeddings, all from one model."""

    entries: tuple[tuple[str, EmbeddingVector], ...]
    embed_model_id: str

    def __post_init__(self):
        keys = [canonical(name) for name, _ in self.entries]
        if len(set(keys)) != len(keys):
            raise ValueError("pool names must be unique (case-insensitive, trimmed)")
        dims = {vec.dim for _, vec in self.entries}
        if len(dims) > 1:
            raise ValueError(f"pool vectors disagree on dimension: {sorted(dims)}")

    def __len__(self) -> int:
        return len(self.entries)


@dataclass(frozen=True)
class RankedCandidates:
    """Top-k source names for one query, scores non-increasing."""

    query_record_id: str
    ranked: tuple[tuple[str, float], ...]
    k: int

    def __post_init__(self):
        if self.k <= 0:
            raise ValueError("k must be positive")
        if len(self.ranked) > self.k:
            raise ValueError(f"{len(self.ranked)} entries exceed k={self.k}")
        scores = [s for _, s in self.ranked]
        if any(a < b for a, b in zip(scores, scores[1:])):
            raise ValueError("scores must be non-increasing")
        keys = [canonical(name) for name, _ in self.ranked]
        if len(set(keys)) != len(keys):
            raise ValueError("ranked names must be unique")

    def names(self) -> list[str]:
        return [name for name, _ in self.ranked]


def canonical(name: str) -> str:
    """Identity key for source-name comparison: trimmed and lowercased."""
    return name.strip().lower()


def build_pool(
    records: list[AnalogyRecord], client: EmbeddingClient, embedder: ModelRef
) -> CandidatePool:
    """Embed every unique source name appearing in the records."""
    if not records:
        raise ValueError("records must be non-empty")
    names: dict[str, str] = {}
    for r in records:
        key = canonical(r.source_name)
        names.setdefault(key, r.source_name.strip())
    unique = sorted(names.values(), key=canonical)
    vectors = client.embed(embedder, unique)
    return CandidatePool(
        entries=tuple(zip(unique, vectors)), embed_model_id=embedder.model_id
    )


def render_query(record: AnalogyRecord, config: QueryConfig) -> str:
    """Deterministic query text: name, then background, then sub-concepts.

    Template (fixed; see the formats doc): ``{name}``, ``; background: {text}``
    when configured, ``; sub-concepts: {a, b, c}`` when configured.
    """
    if config.needs_background and not record.target_background:
        raise ValueError(
            f"record {record.id!r}: config {config.value} requires target_background"
        )
    if config.needs_subconcepts and not record.mappings:
        raise ValueError(f"record {record.id!r}: config {config.value} requires mappings")
    parts = [record.target_name]
    if config.needs_background:
        parts.append(f"background: {record.target_background}")
    if config.needs_subconcepts:
        parts.append("sub-concepts: " + ", ".join(record.target_subs))
    return "; ".join(parts)


def retrieve_topk(
    pool: CandidatePool, query: EmbeddingVector, k: int, record_id: str = ""
) -> RankedCandidates:
    """The k pool entries with highest cosine; ties broken by ascending name.

    A k larger than the pool returns the full pool ranking.
    """
    if k <= 0:
        raise ValueError("k must be positive")
    if not pool.entries:
        raise ValueError("pool is empty")
    dim = pool.entries[0][1].dim
    if query.dim != dim:
        raise ValueError(f"query dimension {query.dim} does not match pool dimension {dim}")
    matrix = np.array([vec.values for _, vec in pool.entries])
    q = np.array(query.values)
    norms = np.linalg.norm(matrix, axis=1) * np.linalg.norm(q)
    if np.any(norms == 0.0):
        raise UndefinedStatisticError("cosine similarity is undefined for zero vectors")
    scores = np.clip(matrix @ q / norms, -1.0, 1.0).tolist()
    order = sorted(
        range(len(pool.entries)),
        key=lambda i: (-scores[i], pool.entries[i][0]),
    )
    top = order[: min(k, len(order))]
    return RankedCandidates(
        query_record_id=record_id,
        ranked=tuple((pool.entries[i][0], float(scores[i])) for i in top),
        k=k,
    )


def _gold_for(result: RankedCandidates, gold: dict[str, set[str]]) -> set[str]:
    if result.query_record_id not in gold:
        raise EvaluationError(f"no gold entry for record {result.query_record_id!r}")
    return {canonical(g) for g in gold[result.query_record_id]}


def hit_at_k(
    results: list[RankedCandidates], gold: dict[str, set[str]], k: int
) -> float:
    """Fraction of records whose top-k contains any gold source name."""
    if not results:
        raise ValueError("results must be non-empty")
    if k <= 0:
        raise ValueError("k must be positive")
    hits = 0
    for result in results:
        if k > result.k:
            raise ValueError(
                f"k={k} exceeds the list capacity {result.k} of record "
                f"{result.query_record_id!r}"
            )
        gold_keys = _gold_for(result, gold)
        top = [canonical(name) for name in result.names()[:k]]
        if any(name in gold_keys for name in top):
            hits += 1
    return hits / len(results)


_TOKEN_RE = re.compile(r"[a-z0-9]+")


def name_token_overlap(a: str, b: str) -> int:
    """Count of shared lowercase tokens between two names."""
    return len(set(_TOKEN_RE.findall(a.lower())) & set(_TOKEN_RE.findall(b.lower())))


@dataclass(frozen=True)
class OverlapBucket:
    overlap_count: int
    n_records: int
    retrieved_rate: float
    mean_gold_rank: float | None


def word_overlap_report(
    results: list[RankedCandidates],
    gold: dict[str, set[str]],
    records: list[AnalogyRecord],
) -> list[OverlapBucket]:
    """Bucket records by target/gold-source token overlap.

    Per bucket: how often a gold source was retrieved at all, and the mean
    1-based rank of the best-ranked gold among retrieved cases (absent when
    the bucket never retrieved a gold source).
    """
    by_id = {r.id: r for r in records}
    buckets: dict[int, list[tuple[bool, int | None]]] = {}
    for result in results:
        gold_keys = _gold_for(result, gold)
        record = by_id.get(result.query_record_id)
        if record is None:
            raise EvaluationError(f"no corpus record for {result.query_record_id!r}")
        overlap = max(
            name_token_overlap(record.target_name, g)
            for g in gold[result.query_record_id]
        )
        rank: int | None = None
        for pos, name in enumerate(result.names(), start=1):
            if canonical(name) in gold_keys:
                rank = pos
                break
        buckets.setdefault(overlap, []).append((rank is not None, rank))
    report = []
    for overlap in sorted(buckets):
        rows = buckets[overlap]
        retrieved = [rank for found, rank in rows if found]
        report.append(
            OverlapBucket(
                overlap_count=overlap,
                n_records=len(rows),
                retrieved_rate=len(retrieved) / len(rows),
                mean_gold_rank=(sum(retrieved) / len(retrieved)) if retrieved else None,
            )
        )
    return report
