"""Explanation generation under six input configurations.

S1/S2 provide system names (plus backgrounds) and yield one explanation
paragraph. S3/S4 add the two sub-concept lists unpaired (independently
shuffled so the model must pair implicitly). S5/S6 provide the gold pairs
and yield one explanation per pair. Scoring embeds the generated and gold
explanations and compares them with cosine similarity.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from enum import Enum

from .corpus import AnalogyRecord
from .errors import GenerationError, ResponseParseError
from .providers.chat import ChatClient
from .providers.embedding import EmbeddingClient
from .providers.models import ModelRef, cosine
from .providers.signatures import OutputField, PromptSignature


class ExplanationConfig(str, Enum):
    S1_NAMES = "S1_NAMES"
    S2_NAMES_DESC = "S2_NAMES_DESC"
    S3_SUBS = "S3_SUBS"
    S4_SUBS_DESC = "S4_SUBS_DESC"
    S5_PAIRS = "S5_PAIRS"
    S6_PAIRS_DESC = "S6_PAIRS_DESC"

    @property
    def needs_background(self) -> bool:
        return self in (
            ExplanationConfig.S2_NAMES_DESC,
            ExplanationConfig.S4_SUBS_DESC,
            ExplanationConfig.S6_PAIRS_DESC,
        )

    @property
    def needs_mappings(self) -> bool:
        return self not in (ExplanationConfig.S1_NAMES, ExplanationConfig.S2_NAMES_DESC)

    @property
    def paired(self) -> bool:
        return self in (ExplanationConfig.S5_PAIRS, ExplanationConfig.S6_PAIRS_DESC)


@dataclass(frozen=True)
class ExplanationOutput:
    record_id: str
    config: ExplanationConfig
    texts: tuple[str, ...]
    raw_transcript: str

    def __post_init__(self):
        if not self.texts:
            raise ValueError("explanation output must carry at least one text")

    def joined(self) -> str:
        return "\n".join(self.texts)


_BASE_INSTRUCTION = "Generate an analogy explanation "

_SIGNATURE_LAYOUTS: dict[ExplanationConfig, tuple[str, list[tuple[str, str]], str]] = {
    ExplanationConfig.S1_NAMES: (
        "using system names only.",
        [("target", "Target system"), ("source", "Source system")],
        "text",
    ),
    ExplanationConfig.S2_NAMES_DESC: (
        "using names and descriptions.",
        [
            ("target", "Target system"),
            ("target_desc", "Background description of the target"),
            ("source", "Source system"),
            ("source_desc", "Background description of the source"),
        ],
        "text",
    ),
    ExplanationConfig.S3_SUBS: (
        "using unpaired sub-concepts.",
        [
            ("target", "Target system"),
            ("target_sub", "Target sub-concepts"),
            ("source", "Source system"),
            ("source_sub", "Source sub-concepts"),
        ],
        "list-of-text",
    ),
    ExplanationConfig.S4_SUBS_DESC: (
        "using unpaired sub-concepts and descriptions.",
        [
            ("target", "Target system"),
            ("target_desc", "Background description of the target"),
            ("target_sub", "Target sub-concepts"),
            ("source", "Source system"),
            ("source_desc", "Background description of the source"),
            ("source_sub", "Source sub-concepts"),
        ],
        "list-of-text",
    ),
    ExplanationConfig.S5_PAIRS: (
        "using paired sub-concepts.",
        [
            ("target", "Target system"),
            ("source", "Source system"),
            ("pairs", "Paired target-source sub-concepts"),
        ],
        "list-of-text",
    ),
    ExplanationConfig.S6_PAIRS_DESC: (
        "using paired sub-concepts and descriptions.",
        [
            ("target", "Target system"),
            ("target_desc", "Background description of the target"),
            ("source", "Source system"),
            ("source_desc", "Background description of the source"),
            ("pairs", "Paired target-source sub-concepts"),
        ],
        "list-of-text",
    ),
}


def explanation_signature(config: ExplanationConfig) -> PromptSignature:
    suffix, inputs, shape = _SIGNATURE_LAYOUTS[config]
    if shape == "text":
        description = "Explanation of the analogy"
    elif config.paired:
        description = "Explanation for each paired sub-concept"
    else:
        description = "Explanation after implicitly pairing sub-concepts"
    return PromptSignature(
        name=f"explanation_{config.value.lower()}",
        instruction=_BASE_INSTRUCTION + suffix,
        inputs=tuple(inputs),
        outputs=(OutputField("explanation", description, shape),),
    )


def render_explanation_inputs(
    record: AnalogyRecord, config: ExplanationConfig, seed: int = 0
) -> dict:
    """Populate exactly the signature's input fields for this record.

    S3/S4 shuffle the two sub-concept lists independently (seeded) so the
    pairing is not leaked by order; S5/S6 pass the gold pairs.
    """
    if config.needs_background and not (record.target_background and record.source_background):
        raise ValueError(
            f"record {record.id!r}: config {config.value} requires both backgrounds"
        )
    if config.needs_mappings and not record.mappings:
        raise ValueError(f"record {record.id!r}: config {config.value} requires mappings")
    inputs: dict = {"target": record.target_name, "source": record.source_name}
    if config.needs_background:
        inputs["target_desc"] = record.target_background
        inputs["source_desc"] = record.source_background
    if config.paired:
        inputs["pairs"] = [(p.target_sub, p.source_sub) for p in record.mappings]
    elif config.needs_mappings:
        target_sub = list(record.target_subs)
        source_sub = list(record.source_subs)
        random.Random(seed).shuffle(target_sub)
        random.Random(seed + 1).shuffle(source_sub)
        inputs["target_sub"] = target_sub
        inputs["source_sub"] = source_sub
    return inputs


def generate_explanation(
    client: ChatClient,
    model: ModelRef,
    record: AnalogyRecord,
    config: ExplanationConfig,
    seed: int = 0,
) -> ExplanationOutput:
    """Generate the explanation texts for one record under one configuration.

    S5/S6 must yield exactly one text per gold pair; a wrong count gets one
    corrective re-prompt before failing.
    """
    sig = explanation_signature(config)
    inputs = render_explanation_inputs(record, config, seed=seed)
    expected = len(record.mappings) if config.paired else None

    raw_parts = []
    for attempt in range(2):
        attempt_sig = sig
        if attempt == 1:
            note = (
                f"you must return exactly {expected} explanations, one per pair"
                if expected is not None
                else "the previous response was unparseable"
            )
            attempt_sig = PromptSignature(
                sig.name, sig.instruction + f"\n\nNote: {note}.", sig.inputs, sig.outputs
            )
        try:
            result = client.complete(model, attempt_sig, inputs)
        except ResponseParseError as exc:
            raw_parts.append(exc.raw)
            continue
        raw_parts.append(result.raw)
        value = result.fields["explanation"]
        texts = (value,) if isinstance(value, str) else tuple(value)
        if expected is not None and len(texts) != expected:
            continue
        return ExplanationOutput(
            record_id=record.id,
            config=config,
            texts=texts,
            raw_transcript="\n---\n".join(raw_parts),
        )
    raise GenerationError(
        f"record {record.id!r}: explanation generation failed under {config.value}",
        raw="\n---\n".join(raw_parts),
    )


def score_explanation(
    output: ExplanationOutput,
    gold: list[str],
    client: EmbeddingClient,
    scorer: ModelRef,
) -> float:
    """Cosine between the concatenated generated texts and concatenated gold.

    Concatenation uses newline separators on both sides, so feeding the gold
    explanations back as output scores exactly 1.
    """
    if not gold:
        raise ValueError("gold explanations must be non-empty")
    generated = output.joined()
    reference = "\n".join(gold)
    vectors = client.embed(scorer, [generated, reference])
    return cosine(vectors[0], vectors[1])


def score_explanation_pairwise(
    output: ExplanationOutput,
    gold: list[str],
    client: EmbeddingClient,
    scorer: ModelRef,
) -> float:
    """Secondary diagnostic: mean per-text cosine over index-aligned texts."""
    if len(output.texts) != len(gold) or not gold:
        raise ValueError(
            f"pairwise scoring needs equal non-empty lengths, got "
            f"{len(output.texts)} vs {len(gold)}"
        )
    vectors = client.embed(scorer, list(output.texts) + list(gold))
    n = len(gold)
    return sum(cosine(vectors[i], vectors[n + i]) for i in range(n)) / n
