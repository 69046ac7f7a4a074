"""Open-setting source finding: generate ranked candidate sources with an
LLM, pick a top-1 by one of three strategies, and score exact plus semantic
Hit@K against gold sources.

The semantic threshold is derived from the distribution of gold-pair
similarities (nearest-rank upper tertile). Semantic scoring must use a
different embedding model than candidate selection, otherwise the selection
strategy that optimizes that same similarity would be favored unfairly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .corpus import AnalogyRecord
from .errors import (
    ConfigError,
    EvaluationError,
    GenerationError,
    RerankError,
    ResponseParseError,
)
from .providers.chat import ChatClient
from .providers.embedding import EmbeddingClient
from .providers.models import ModelRef, cosine
from .providers.signatures import OutputField, PromptSignature
from .retrieval import RankedCandidates, canonical, hit_at_k
from .subconcept import generate_source_subconcepts

# Exact Hit@K on generated candidates is the same indicator count used for
# closed-setting retrieval.
exact_hit_at_k = hit_at_k


class GenerationMode(str, Enum):
    TARGET_ONLY = "TARGET_ONLY"
    TARGET_WITH_SUBCONCEPTS = "TARGET_WITH_SUBCONCEPTS"


class SelectionStrategy(str, Enum):
    BASELINE_TOP1 = "BASELINE_TOP1"
    EMBEDDING_TOP1 = "EMBEDDING_TOP1"
    RERANKER_TOP1 = "RERANKER_TOP1"


class RerankConfig(str, Enum):
    NAMES_ONLY = "NAMES_ONLY"
    BACKGROUND = "BACKGROUND"
    GOLD_SUBCONCEPTS = "GOLD_SUBCONCEPTS"
    GOLD_SUBCONCEPTS_BACKGROUND = "GOLD_SUBCONCEPTS_BACKGROUND"
    GENERATED_SUBCONCEPTS = "GENERATED_SUBCONCEPTS"


class ThresholdDerivation(str, Enum):
    FIXED = "FIXED"
    UPPER_TERTILE = "UPPER_TERTILE"


@dataclass(frozen=True)
class SemanticThreshold:
    value: float
    derivation: ThresholdDerivation
    scoring_model_id: str

    def __post_init__(self):
        if not math.isfinite(self.value) or not 0.0 < self.value < 1.0:
            raise ValueError(f"threshold must lie in (0, 1), got {self.value}")


def candidate_signature(mode: GenerationMode) -> PromptSignature:
    inputs = [
        ("target", "Target system the learner needs explained"),
        ("how_many", "Number of candidate sources to propose"),
    ]
    if mode is GenerationMode.TARGET_WITH_SUBCONCEPTS:
        inputs.append(("target_subconcepts", "Sub-concepts of the target system"))
    return PromptSignature(
        name="generate_source_candidates",
        instruction=(
            "Propose familiar source systems that could explain the target "
            "system by analogy. List the requested number of distinct "
            "candidates, best first, one name per line."
        ),
        inputs=tuple(inputs),
        outputs=(
            OutputField("candidates", "Ranked candidate source names", "list-of-text"),
        ),
    )


def _dedup(names: list[str]) -> list[str]:
    seen: set[str] = set()
    out = []
    for name in names:
        key = canonical(name)
        if key and key not in seen:
            seen.add(key)
            out.append(name.strip())
    return out


def generate_candidates(
    client: ChatClient,
    model: ModelRef,
    record: AnalogyRecord,
    mode: GenerationMode = GenerationMode.TARGET_ONLY,
    n: int = 20,
) -> RankedCandidates:
    """Up to ``n`` distinct candidate names in model-stated rank order.

    Duplicates are dropped keeping the first occurrence. A short list is
    padded by one re-prompt and then accepted as-is; a response that stays
    unparseable after one retry is a generation error.
    """
    if n <= 0:
        raise ValueError("n must be positive")
    if mode is GenerationMode.TARGET_WITH_SUBCONCEPTS and not record.mappings:
        raise ValueError(f"record {record.id!r}: mode requires non-empty mappings")
    sig = candidate_signature(mode)
    inputs = {"target": record.target_name, "how_many": str(n)}
    if mode is GenerationMode.TARGET_WITH_SUBCONCEPTS:
        inputs["target_subconcepts"] = list(record.target_subs)

    names, raw_parts = None, []
    for attempt in range(2):
        attempt_sig = sig
        if attempt == 1:
            attempt_sig = _amended(sig, "the previous response was unparseable")
        try:
            result = client.complete(model, attempt_sig, inputs)
        except ResponseParseError as exc:
            raw_parts.append(exc.raw)
            continue
        names = _dedup(result.fields["candidates"])
        break
    if names is None:
        raise GenerationError(
            f"record {record.id!r}: candidate list unparseable after retry",
            raw="\n---\n".join(raw_parts),
        )

    if len(names) < n:
        pad_sig = _amended(
            sig,
            f"you returned {len(names)} distinct names; list {n} distinct names",
        )
        try:
            result = client.complete(model, pad_sig, inputs)
            names = _dedup(names + [str(x) for x in result.fields["candidates"]])
        except ResponseParseError:
            pass  # padding is best-effort; short lists are accepted

    names = names[:n]
    ranked = tuple((name, 1.0 / (i + 1)) for i, name in enumerate(names))
    return RankedCandidates(query_record_id=record.id, ranked=ranked, k=n)


def _amended(sig: PromptSignature, note: str) -> PromptSignature:
    return PromptSignature(
        sig.name, sig.instruction + f"\n\nNote: {note}.", sig.inputs, sig.outputs
    )


RERANK_INSTRUCTION = """You are selecting the best analogous source concepts for a scientific analogy.

Your task:
1. Analyze the target concept and its properties
2. Review each candidate source and its generated analogous properties
3. Select the 3 candidates whose properties BEST map to the target properties

Selection criteria:
- Strong structural/functional correspondence between source and target properties
- The source concept should be familiar and help explain the unfamiliar target
- Prefer sources with clear, well-mapped properties over vague ones

Return the EXACT names of your top 3 selected candidates."""


def rerank_signature(config: RerankConfig) -> PromptSignature:
    inputs = [
        ("target", "Target concept"),
        ("candidates", "Candidate source concepts, one per line"),
    ]
    if config in (RerankConfig.BACKGROUND, RerankConfig.GOLD_SUBCONCEPTS_BACKGROUND):
        inputs.insert(1, ("target_background", "Background description of the target"))
    if config in (
        RerankConfig.GOLD_SUBCONCEPTS,
        RerankConfig.GOLD_SUBCONCEPTS_BACKGROUND,
    ):
        inputs.insert(1, ("target_subconcepts", "Sub-concepts of the target"))
    if config is RerankConfig.GENERATED_SUBCONCEPTS:
        inputs.insert(1, ("target_subconcepts", "Sub-concepts of the target"))
        inputs.append(
            ("candidate_subconcepts", "Generated analogous properties per candidate")
        )
    return PromptSignature(
        name="rerank_shortlist",
        instruction=RERANK_INSTRUCTION,
        inputs=tuple(inputs),
        outputs=(
            OutputField("top_candidates", "The 3 best candidate names, best first", "list-of-text"),
        ),
    )


def _validate_rerank(names: list[str], shortlist: list[str]) -> list[str] | str:
    lookup = {canonical(s): s for s in shortlist}
    if len(names) < 3:
        return f"expected 3 names, got {len(names)}"
    chosen = []
    seen = set()
    for name in names[:3]:
        key = canonical(name)
        if key not in lookup:
            return f"{name!r} is not in the candidate list"
        if key in seen:
            return f"{name!r} was selected twice"
        seen.add(key)
        chosen.append(lookup[key])
    return chosen


def rerank_top3(
    client: ChatClient,
    reranker: ModelRef,
    record: AnalogyRecord,
    shortlist: list[str],
    config: RerankConfig = RerankConfig.NAMES_ONLY,
    subconcept_model: ModelRef | None = None,
) -> list[str]:
    """Pick the 3 best shortlist names, canonicalized to shortlist spelling.

    Names outside the shortlist trigger one corrective re-prompt; a second
    invalid answer is a rerank error. The GENERATED_SUBCONCEPTS config first
    generates analogous properties for every shortlist candidate.
    """
    if len(shortlist) < 3:
        raise ValueError(f"shortlist needs at least 3 names, got {len(shortlist)}")
    if len(shortlist) > 10:
        raise ValueError(f"shortlist is capped at 10 names, got {len(shortlist)}")
    if config in (RerankConfig.BACKGROUND, RerankConfig.GOLD_SUBCONCEPTS_BACKGROUND):
        if not record.target_background:
            raise ValueError(f"record {record.id!r}: config {config.value} needs background")
    needs_subs = config in (
        RerankConfig.GOLD_SUBCONCEPTS,
        RerankConfig.GOLD_SUBCONCEPTS_BACKGROUND,
        RerankConfig.GENERATED_SUBCONCEPTS,
    )
    if needs_subs and not record.mappings:
        raise ValueError(f"record {record.id!r}: config {config.value} needs mappings")

    sig = rerank_signature(config)
    inputs: dict = {"target": record.target_name, "candidates": list(shortlist)}
    if "target_background" in sig.input_names():
        inputs["target_background"] = record.target_background
    if "target_subconcepts" in sig.input_names():
        inputs["target_subconcepts"] = list(record.target_subs)
    if config is RerankConfig.GENERATED_SUBCONCEPTS:
        generated = []
        for name in shortlist:
            subs = generate_source_subconcepts(
                client, subconcept_model or reranker, record, source_name=name
            )
            generated.append(f"{name}: " + "; ".join(subs))
        inputs["candidate_subconcepts"] = generated

    problem = ""
    raw_parts = []
    for attempt in range(2):
        attempt_sig = sig if attempt == 0 else _amended(sig, problem)
        try:
            result = client.complete(reranker, attempt_sig, inputs)
        except ResponseParseError as exc:
            raw_parts.append(exc.raw)
            problem = "the response could not be parsed"
            continue
        raw_parts.append(result.raw)
        validated = _validate_rerank(result.fields["top_candidates"], shortlist)
        if isinstance(validated, list):
            return validated
        problem = validated
    raise RerankError(
        f"record {record.id!r}: reranker kept returning invalid names ({problem})",
        raw="\n---\n".join(raw_parts),
    )


def select_top1(
    candidates: RankedCandidates,
    strategy: SelectionStrategy,
    record: AnalogyRecord,
    chat_client: ChatClient | None = None,
    embed_client: EmbeddingClient | None = None,
    selection_embedder: ModelRef | None = None,
    reranker: ModelRef | None = None,
    rerank_config: RerankConfig = RerankConfig.GOLD_SUBCONCEPTS,
) -> str:
    """Pick one source name from a generated candidate list.

    BASELINE takes the first name; EMBEDDING the candidate most similar to
    the target name under the selection embedder; RERANKER the first element
    of the top-10 -> top-3 rerank. Lists too short to shortlist fall back to
    the first name.
    """
    names = candidates.names()
    if not names:
        raise ValueError("candidate list is empty")
    if strategy is SelectionStrategy.BASELINE_TOP1:
        return names[0]
    if strategy is SelectionStrategy.EMBEDDING_TOP1:
        if embed_client is None or selection_embedder is None:
            raise ConfigError("EMBEDDING_TOP1 requires an embedding client and model")
        vectors = embed_client.embed(selection_embedder, [record.target_name] + names)
        target_vec, cand_vecs = vectors[0], vectors[1:]
        scored = [
            (-cosine(vec, target_vec), name) for name, vec in zip(names, cand_vecs)
        ]
        return min(scored)[1]
    if strategy is SelectionStrategy.RERANKER_TOP1:
        if chat_client is None or reranker is None:
            raise ConfigError("RERANKER_TOP1 requires a chat client and reranker model")
        shortlist = names[:10]
        if len(shortlist) < 3:
            return names[0]
        return rerank_top3(chat_client, reranker, record, shortlist, rerank_config)[0]
    raise ValueError(f"unknown strategy {strategy}")


def upper_tertile(values: list[float]) -> float:
    """Nearest-rank upper tertile: the smallest value in the top third.

    For n ascending values this is the order statistic at position
    n - ceil(n/3) + 1, which coincides with the nearest-rank 66.667th
    percentile.
    """
    if not values:
        raise ValueError("values must be non-empty")
    ordered = sorted(values)
    n = len(ordered)
    position = n - (n + 2) // 3 + 1
    return ordered[position - 1]


def derive_semantic_threshold(
    gold_pair_sims: list[float], scoring_model_id: str = ""
) -> SemanticThreshold:
    """Upper-tertile threshold over gold-pair similarity scores."""
    if not gold_pair_sims:
        raise ValueError("gold_pair_sims must be non-empty")
    if any(not -1.0 <= s <= 1.0 for s in gold_pair_sims):
        raise ValueError("similarities must lie in [-1, 1]")
    return SemanticThreshold(
        value=upper_tertile(gold_pair_sims),
        derivation=ThresholdDerivation.UPPER_TERTILE,
        scoring_model_id=scoring_model_id,
    )


def semantic_hit_at_k(
    results: list[RankedCandidates],
    gold: dict[str, set[str]],
    k: int,
    threshold: SemanticThreshold,
    client: EmbeddingClient,
    scorer: ModelRef,
) -> float:
    """Fraction of records with a top-k candidate semantically close to a gold source.

    A candidate counts when its similarity to any gold source strictly
    exceeds the threshold under the scoring model's embeddings.
    """
    if scorer.model_id != threshold.scoring_model_id:
        raise ConfigError(
            f"scorer {scorer.model_id!r} does not match the threshold's scoring model "
            f"{threshold.scoring_model_id!r}"
        )
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
        if result.query_record_id not in gold:
            raise EvaluationError(f"no gold entry for record {result.query_record_id!r}")
        gold_names = sorted(gold[result.query_record_id])
        top = result.names()[:k]
        if not top:
            continue
        vectors = client.embed(scorer, top + gold_names)
        cand_vecs, gold_vecs = vectors[: len(top)], vectors[len(top) :]
        if any(
            cosine(c, g) > threshold.value for c in cand_vecs for g in gold_vecs
        ):
            hits += 1
    return hits / len(results)
