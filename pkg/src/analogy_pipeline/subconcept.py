"""Sub-concept matching and generation.

Matching asks a model to align two shuffled lists of gold sub-concepts and
is scored all-or-nothing per record (system accuracy). Generation asks for
the source-side counterpart of each target sub-concept and is scored by
semantic match accuracy: the fraction of index-aligned pairs whose embedding
similarity reaches a fixed threshold (0.7 by default).
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .corpus import AnalogyRecord, SubConceptPair
from .errors import EvaluationError, GenerationError, MatchingError, ResponseParseError
from .providers.chat import ChatClient
from .providers.embedding import EmbeddingClient
from .providers.models import ModelRef, cosine
from .providers.signatures import OutputField, PromptSignature

SMA_THRESHOLD = 0.7


def _norm(item: str) -> str:
    return item.strip().lower()


@dataclass(frozen=True)
class MatchingTask:
    """Shuffled sub-concept lists for one record; shuffles replay from the seed."""

    record_id: str
    target_subs: tuple[str, ...]
    source_subs: tuple[str, ...]
    with_background: bool
    shuffle_seed: int

    def __post_init__(self):
        if len(self.target_subs) != len(self.source_subs) or not self.target_subs:
            raise ValueError("target and source lists must be non-empty and equal-length")


@dataclass(frozen=True)
class MatchingResult:
    predicted_pairs: tuple[SubConceptPair, ...]
    raw_transcript: str


def make_matching_task(
    record: AnalogyRecord, with_background: bool = False, seed: int = 0
) -> MatchingTask:
    """Shuffle the record's two sub-concept sides independently."""
    if not record.mappings:
        raise ValueError(f"record {record.id!r} has no mappings to match")
    targets = list(record.target_subs)
    sources = list(record.source_subs)
    random.Random(seed).shuffle(targets)
    random.Random(seed + 1).shuffle(sources)
    return MatchingTask(
        record_id=record.id,
        target_subs=tuple(targets),
        source_subs=tuple(sources),
        with_background=with_background,
        shuffle_seed=seed,
    )


_MATCH_INSTRUCTION_PLAIN = (
    "Pair each target sub-concept with the source sub-concept that plays the "
    "same structural role in the analogy. Use every item from both lists "
    "exactly once, copying items verbatim."
)

_MATCH_INSTRUCTION_REASONING = (
    "Think step by step about the role each sub-concept plays inside its own "
    "system, then pair each target sub-concept with the source sub-concept "
    "playing the same structural role. Use every item from both lists exactly "
    "once, copying items verbatim. Keep the reasoning out of the pairs section."
)

MATCH_PROMPT_STYLES = {
    "plain": _MATCH_INSTRUCTION_PLAIN,
    "reasoning": _MATCH_INSTRUCTION_REASONING,
}


def matching_signature(with_background: bool, prompt_style: str = "plain") -> PromptSignature:
    if prompt_style not in MATCH_PROMPT_STYLES:
        raise ValueError(f"unknown prompt style {prompt_style!r}")
    inputs = [
        ("target", "Target system name"),
        ("source", "Source system name"),
        ("target_subconcepts", "Sub-concepts of the target system, shuffled"),
        ("source_subconcepts", "Sub-concepts of the source system, shuffled"),
    ]
    if with_background:
        inputs.insert(2, ("target_background", "Background description of the target"))
        inputs.insert(3, ("source_background", "Background description of the source"))
    return PromptSignature(
        name="match_subconcepts",
        instruction=MATCH_PROMPT_STYLES[prompt_style],
        inputs=tuple(inputs),
        outputs=(
            OutputField(
                "pairs", "One aligned pair per line, target item first", "list-of-pairs"
            ),
        ),
    )


def _validate_bijection(
    pairs: list[tuple[str, str]], task: MatchingTask
) -> tuple[SubConceptPair, ...] | str:
    """Canonicalize a predicted pairing, or describe why it is not a bijection."""
    if len(pairs) != len(task.target_subs):
        return f"expected {len(task.target_subs)} pairs, got {len(pairs)}"
    target_lookup = {_norm(t): t for t in task.target_subs}
    source_lookup = {_norm(s): s for s in task.source_subs}
    used_targets: set[str] = set()
    used_sources: set[str] = set()
    canonical = []
    for left, right in pairs:
        tkey, skey = _norm(left), _norm(right)
        if tkey not in target_lookup:
            return f"{left!r} is not one of the given target sub-concepts"
        if skey not in source_lookup:
            return f"{right!r} is not one of the given source sub-concepts"
        if tkey in used_targets:
            return f"target sub-concept {left!r} was paired twice"
        if skey in used_sources:
            return f"source sub-concept {right!r} was paired twice"
        used_targets.add(tkey)
        used_sources.add(skey)
        canonical.append(SubConceptPair(target_lookup[tkey], source_lookup[skey]))
    return tuple(canonical)


def match_subconcepts(
    client: ChatClient,
    model: ModelRef,
    task: MatchingTask,
    record: AnalogyRecord,
    prompt_style: str = "plain",
) -> MatchingResult:
    """Align the task's shuffled lists; the accepted pairing is a bijection.

    A non-bijective model output triggers one corrective re-prompt naming the
    violation, then a matching error.
    """
    if task.with_background and not (record.target_background and record.source_background):
        raise ValueError(
            f"record {record.id!r}: matching with background requires both backgrounds"
        )
    sig = matching_signature(task.with_background, prompt_style)
    inputs = {
        "target": record.target_name,
        "source": record.source_name,
        "target_subconcepts": list(task.target_subs),
        "source_subconcepts": list(task.source_subs),
    }
    if task.with_background:
        inputs["target_background"] = record.target_background
        inputs["source_background"] = record.source_background

    transcript_parts = []
    problem = ""
    for attempt in range(2):
        if attempt == 1:
            sig = _with_correction(sig, problem)
        try:
            result = client.complete(model, sig, inputs)
        except ResponseParseError as exc:
            transcript_parts.append(exc.raw)
            problem = "the response could not be parsed into pairs"
            continue
        transcript_parts.append(result.raw)
        validated = _validate_bijection(result.fields["pairs"], task)
        if not isinstance(validated, str):
            return MatchingResult(
                predicted_pairs=validated, raw_transcript="\n---\n".join(transcript_parts)
            )
        problem = validated
    raise MatchingError(
        f"record {task.record_id!r}: matching stayed non-bijective ({problem})",
        transcript="\n---\n".join(transcript_parts),
    )


def _with_correction(sig: PromptSignature, problem: str) -> PromptSignature:
    note = f"\n\nYour previous answer was invalid: {problem}. Fix this."
    return PromptSignature(sig.name, sig.instruction + note, sig.inputs, sig.outputs)


def pairs_as_set(pairs) -> set[tuple[str, str]]:
    return {(_norm(p.target_sub), _norm(p.source_sub)) for p in pairs}


def system_accuracy(
    results: list[tuple[MatchingResult, list[SubConceptPair]]],
) -> float:
    """Mean of the all-or-nothing indicator: 1 only when every pair is correct."""
    if not results:
        raise ValueError("results must be non-empty")
    correct = 0
    for result, gold in results:
        predicted_targets = {_norm(p.target_sub) for p in result.predicted_pairs}
        predicted_sources = {_norm(p.source_sub) for p in result.predicted_pairs}
        gold_targets = {_norm(p.target_sub) for p in gold}
        gold_sources = {_norm(p.source_sub) for p in gold}
        if predicted_targets != gold_targets or predicted_sources != gold_sources:
            raise EvaluationError(
                "predicted and gold pairings do not cover the same sub-concepts"
            )
        if pairs_as_set(result.predicted_pairs) == pairs_as_set(gold):
            correct += 1
    return correct / len(results)


def generation_signature(with_background: bool) -> PromptSignature:
    inputs = [
        ("target", "Target system name"),
        ("target_subconcepts", "Sub-concepts of the target system, in order"),
        ("source", "Source system name"),
    ]
    if with_background:
        inputs.insert(1, ("target_background", "Background description of the target"))
        inputs.append(("source_background", "Background description of the source"))
    return PromptSignature(
        name="generate_source_subconcepts",
        instruction=(
            "For each target sub-concept, produce the source-system counterpart "
            "that plays the same structural role in the analogy. Output exactly "
            "one source sub-concept per target sub-concept, in the same order."
        ),
        inputs=tuple(inputs),
        outputs=(
            OutputField(
                "source_subconcepts",
                "Source counterparts, one per target sub-concept, same order",
                "list-of-text",
            ),
        ),
    )


def generate_source_subconcepts(
    client: ChatClient,
    model: ModelRef,
    record: AnalogyRecord,
    with_background: bool = False,
    source_name: str | None = None,
) -> list[str]:
    """One generated source sub-concept per target sub-concept, index-aligned.

    ``source_name`` overrides the record's source (used when pairing against
    a pipeline-selected candidate instead of the gold source).
    """
    if not record.mappings:
        raise ValueError(f"record {record.id!r} has no target sub-concepts")
    if with_background and not (record.target_background and record.source_background):
        raise ValueError(
            f"record {record.id!r}: generation with background requires both backgrounds"
        )
    sig = generation_signature(with_background)
    inputs = {
        "target": record.target_name,
        "target_subconcepts": list(record.target_subs),
        "source": source_name if source_name is not None else record.source_name,
    }
    if with_background:
        inputs["target_background"] = record.target_background
        inputs["source_background"] = record.source_background

    expected = len(record.target_subs)
    raw_parts = []
    for attempt in range(2):
        if attempt == 1:
            sig = _with_correction(
                sig, f"you must return exactly {expected} sub-concepts"
            )
        try:
            result = client.complete(model, sig, inputs)
        except ResponseParseError as exc:
            raw_parts.append(exc.raw)
            continue
        raw_parts.append(result.raw)
        items = result.fields["source_subconcepts"]
        if len(items) == expected:
            return list(items)
    raise GenerationError(
        f"record {record.id!r}: expected {expected} source sub-concepts, "
        f"model kept returning a different count",
        raw="\n---\n".join(raw_parts),
    )


def semantic_match_hits(
    predicted: list[str],
    gold: list[str],
    client: EmbeddingClient,
    scorer: ModelRef,
    threshold: float = SMA_THRESHOLD,
) -> tuple[int, int]:
    """(pairs meeting the threshold, total pairs) for index-aligned lists."""
    if len(predicted) != len(gold):
        raise ValueError(
            f"predicted and gold lengths differ: {len(predicted)} vs {len(gold)}"
        )
    if not predicted:
        raise ValueError("lists must be non-empty")
    vectors = client.embed(scorer, list(predicted) + list(gold))
    n = len(predicted)
    hits = sum(
        1 for i in range(n) if cosine(vectors[i], vectors[n + i]) >= threshold
    )
    return hits, n


def semantic_match_accuracy(
    predicted: list[str],
    gold: list[str],
    client: EmbeddingClient,
    scorer: ModelRef,
    threshold: float = SMA_THRESHOLD,
) -> float:
    """Fraction of index-aligned pairs with similarity at or above the threshold."""
    hits, total = semantic_match_hits(predicted, gold, client, scorer, threshold)
    return hits / total
