"""Rubric-driven judging of analogies on three 1-3 dimensions.

The rubric (instruction, dimension definitions, and ten calibration examples
spanning the full score range) ships as a versioned asset whose digest is
pinned: the calibration anchors must stay bit-stable because human raters
see the same text. Verdict scores are extracted with a tolerant grammar
documented at :func:`parse_verdict_scores`.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .errors import JudgeError, ResponseParseError
from .providers.chat import ChatClient
from .providers.models import ModelRef
from .providers.signatures import OutputField, PromptSignature

DIMENSIONS = ("coherence", "mapping", "explanatory")

RUBRIC_SHA256 = "c94ef50644743b5ce61feb9b483597e0c97bb72358d4b346151fa5551dc5e130"


def rubric_text() -> str:
    return (
        resources.files("analogy_pipeline")
        .joinpath("assets/judge_rubric.txt")
        .read_text(encoding="utf-8")
    )


def rubric_sha256() -> str:
    return hashlib.sha256(rubric_text().encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class JudgeVerdict:
    record_id: str
    coherence: int
    mapping: int
    explanatory: int
    rationales: tuple[str, str, str]
    judge_model_id: str
    raw_transcript: str

    def __post_init__(self):
        for dim in DIMENSIONS:
            if getattr(self, dim) not in (1, 2, 3):
                raise ValueError(f"{dim} score must be 1, 2 or 3, got {getattr(self, dim)}")

    @property
    def avg_score(self) -> float:
        return (self.coherence + self.mapping + self.explanatory) / 3.0

    def score(self, dimension: str) -> int:
        return int(getattr(self, dimension))


@dataclass(frozen=True)
class JudgeAggregate:
    """Mean/std per dimension (plus avg_score) over one verdict group."""

    group_key: str
    n: int
    means: dict[str, float]
    stds: dict[str, float]

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("aggregate needs at least one verdict")
        if any(v < 0 for v in self.stds.values()):
            raise ValueError("std must be non-negative")


def judge_signature() -> PromptSignature:
    outputs = []
    for dim in DIMENSIONS:
        outputs.append(OutputField(f"{dim}_reasoning", f"Brief reasoning for the {dim} score"))
        outputs.append(OutputField(f"{dim}_score", f"The {dim} score: 1, 2 or 3"))
    return PromptSignature(
        name="judge_analogy",
        instruction=rubric_text(),
        inputs=(
            ("target", "Target concept"),
            ("source", "Chosen source analogy"),
            ("explanation", "Explanation of the analogy"),
        ),
        outputs=tuple(outputs),
    )


_LABELS = {
    "coherence": r"(?:analogy[_ ])?coherence(?:[_ ]score)?",
    "mapping": r"mapping(?:[_ ]soundness)?(?:[_ ]score)?",
    "explanatory": r"explanatory(?:[_ ]power)?(?:[_ ]score)?",
}


def parse_verdict_scores(raw: str) -> dict[str, tuple[int, str]] | None:
    """Tolerant score extraction; returns {dimension: (score, rationale)}.

    Grammar: the text is segmented at dimension labels (``coherence``,
    ``mapping``/``mapping_soundness``, ``explanatory``/``explanatory_power``,
    each optionally bracketed or suffixed with ``_score``); within each
    segment the first standalone integer is the score, and the remaining
    segment text is the rationale. This accepts "score: N", "label=N", bare
    integers after a label, and reasoning-then-score layouts. Returns None
    when any dimension lacks an integer; range checking happens later so an
    out-of-range score can be re-prompted with a precise correction.
    """
    hits = []
    for dim, pattern in _LABELS.items():
        matches = list(re.finditer(rf"(?im)^\W*{pattern}\b", raw))
        if not matches:
            return None
        hits.append((matches[0].start(), dim))
    hits.sort()
    bounds = [start for start, _ in hits] + [len(raw)]
    result: dict[str, tuple[int, str]] = {}
    for (start, dim), end in zip(hits, bounds[1:]):
        segment = raw[start:end]
        number = re.search(r"\b(\d+)\b", segment)
        if not number:
            return None
        rationale = re.sub(r"\s+", " ", segment).strip()
        result[dim] = (int(number.group(1)), rationale)
    return result


def _extract(raw: str, fields: dict | None) -> dict[str, tuple[int, str]] | None:
    if fields is not None:
        try:
            return {
                dim: (int(str(fields[f"{dim}_score"]).strip()), str(fields[f"{dim}_reasoning"]))
                for dim in DIMENSIONS
            }
        except (KeyError, ValueError):
            pass
    return parse_verdict_scores(raw)


def judge_analogy(
    client: ChatClient,
    judge: ModelRef,
    target: str,
    source: str,
    explanation: str,
    record_id: str = "",
    generator_model_id: str | None = None,
) -> JudgeVerdict:
    """Score one (target, source, explanation) triple on the three dimensions.

    The judge model must differ from the model that generated the item. An
    out-of-range or missing score triggers one re-prompt, then a judge error.
    """
    if not (target.strip() and source.strip() and explanation.strip()):
        raise ValueError("target, source and explanation must all be non-empty")
    if generator_model_id is not None and generator_model_id == judge.model_id:
        raise ValueError(
            f"judge model {judge.model_id!r} must differ from the generator under evaluation"
        )
    sig = judge_signature()
    inputs = {"target": target, "source": source, "explanation": explanation}

    transcript_parts = []
    problem = ""
    for attempt in range(2):
        attempt_sig = sig
        if attempt == 1:
            attempt_sig = PromptSignature(
                sig.name,
                sig.instruction + f"\n\nNote: your previous answer was invalid ({problem}). "
                "Each score must be exactly 1, 2 or 3.",
                sig.inputs,
                sig.outputs,
            )
        try:
            result = client.complete(judge, attempt_sig, inputs)
            raw, fields = result.raw, result.fields
        except ResponseParseError as exc:
            raw, fields = exc.raw, None
        transcript_parts.append(raw)
        extracted = _extract(raw, fields)
        if extracted is None:
            problem = "scores could not be located"
            continue
        scores = {dim: extracted[dim][0] for dim in DIMENSIONS}
        out_of_range = [dim for dim, s in scores.items() if s not in (1, 2, 3)]
        if out_of_range:
            problem = f"out-of-range score for {', '.join(out_of_range)}"
            continue
        return JudgeVerdict(
            record_id=record_id,
            coherence=scores["coherence"],
            mapping=scores["mapping"],
            explanatory=scores["explanatory"],
            rationales=tuple(extracted[dim][1] for dim in DIMENSIONS),
            judge_model_id=judge.model_id,
            raw_transcript="\n---\n".join(transcript_parts),
        )
    raise JudgeError(
        f"judge response stayed invalid after re-prompt ({problem})",
        transcript="\n---\n".join(transcript_parts),
    )


def aggregate_verdicts(
    verdicts: list[JudgeVerdict],
    grouping: dict[str, str],
    sample_std: bool = False,
) -> list[JudgeAggregate]:
    """Per-group mean/std for each dimension and for the per-verdict average.

    Population std by default; pass ``sample_std=True`` for the n-1 variant.
    """
    if not verdicts:
        raise ValueError("verdicts must be non-empty")
    groups: dict[str, list[JudgeVerdict]] = {}
    for verdict in verdicts:
        if verdict.record_id not in grouping:
            raise ValueError(f"verdict record {verdict.record_id!r} has no group")
        groups.setdefault(grouping[verdict.record_id], []).append(verdict)
    ddof = 1 if sample_std else 0
    aggregates = []
    for key in sorted(groups):
        members = groups[key]
        means: dict[str, float] = {}
        stds: dict[str, float] = {}
        for dim in DIMENSIONS:
            values = np.array([v.score(dim) for v in members], dtype=float)
            means[dim] = float(values.mean())
            stds[dim] = float(values.std(ddof=ddof)) if len(values) > ddof else 0.0
        avgs = np.array([v.avg_score for v in members])
        means["avg_score"] = float(avgs.mean())
        stds["avg_score"] = float(avgs.std(ddof=ddof)) if len(avgs) > ddof else 0.0
        aggregates.append(
            JudgeAggregate(group_key=key, n=len(members), means=means, stds=stds)
        )
    return aggregates
