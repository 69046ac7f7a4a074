"""Pipeline configuration: JSON file in, validated config object out.

Model roles: ``generator`` (candidate/sub-concept/explanation generation),
``reranker``, ``judge``, ``retrieval_embedder``, ``selection_embedder``,
``semantic_scorer`` and optionally ``explanation_scorer`` (defaults to the
semantic scorer). Two invariants are enforced before any model call: the
semantic scorer must differ from the selection embedder (the evaluation
model must not be the one the selection strategy optimizes), and the judge
must differ from every generation-side model.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import ConfigError
from ..explanation import ExplanationConfig
from ..providers.models import ModelRef
from ..retrieval import QueryConfig
from ..sourcegen import GenerationMode, RerankConfig, SelectionStrategy

DEFAULT_STAGES = ("RETRIEVE", "SOURCEGEN", "SUBCONCEPT", "EXPLAIN", "JUDGE", "AGREE")

CHAT_ROLES = ("generator", "reranker", "judge")
EMBED_ROLES = (
    "retrieval_embedder",
    "selection_embedder",
    "semantic_scorer",
    "explanation_scorer",
)


@dataclass(frozen=True)
class RoleConfig:
    """One model role: a provider spec plus the model reference."""

    provider: dict
    model: ModelRef

    @classmethod
    def from_dict(cls, data: dict, role: str) -> "RoleConfig":
        if "model" not in data:
            raise ConfigError(f"role {role!r} is missing its 'model' entry")
        m = data["model"]
        model = ModelRef(
            provider_id=m.get("provider_id", data.get("provider", {}).get("kind", "")),
            model_id=m["model_id"],
            temperature=float(m.get("temperature", 0.2)),
            max_output_tokens=int(m.get("max_output_tokens", 2048)),
        )
        return cls(provider=data.get("provider", {"kind": "synthetic"}), model=model)


@dataclass(frozen=True)
class RetrievalOptions:
    query_config: QueryConfig = QueryConfig.NAME_ONLY
    k: int = 20
    hit_ks: tuple[int, ...] = (1, 3, 5, 10, 20)


@dataclass(frozen=True)
class SourcegenOptions:
    mode: GenerationMode = GenerationMode.TARGET_ONLY
    strategy: SelectionStrategy = SelectionStrategy.BASELINE_TOP1
    n_candidates: int = 20
    rerank_config: RerankConfig = RerankConfig.GOLD_SUBCONCEPTS
    hit_ks: tuple[int, ...] = (1, 5, 10, 20)
    semantic: bool = True


@dataclass(frozen=True)
class SubconceptOptions:
    matching_background: bool = False
    generation_background: bool = True
    prompt_style: str = "plain"
    sma_threshold: float = 0.7


@dataclass(frozen=True)
class ExplanationOptions:
    config: ExplanationConfig = ExplanationConfig.S5_PAIRS


@dataclass(frozen=True)
class AgreementInput:
    export_json: str | None = None
    ratings_csv: str | None = None
    rankings_csv: str | None = None


@dataclass(frozen=True)
class PipelineConfig:
    run_id: str
    output_dir: str
    corpus: dict
    roles: dict[str, RoleConfig]
    stages: tuple[str, ...] = DEFAULT_STAGES
    cache_dir: str | None = None
    seed: int = 0
    parallelism: int = 4
    transcripts: bool = True
    retrieval: RetrievalOptions = field(default_factory=RetrievalOptions)
    sourcegen: SourcegenOptions = field(default_factory=SourcegenOptions)
    subconcept: SubconceptOptions = field(default_factory=SubconceptOptions)
    explanation: ExplanationOptions = field(default_factory=ExplanationOptions)
    agreement_input: AgreementInput = field(default_factory=AgreementInput)
    raw: dict = field(default_factory=dict)

    def role(self, name: str) -> RoleConfig:
        if name == "explanation_scorer" and name not in self.roles:
            return self.roles["semantic_scorer"]
        if name not in self.roles:
            raise ConfigError(f"role {name!r} is not configured")
        return self.roles[name]

    def validate(self):
        for role in ("generator", "judge", "retrieval_embedder",
                     "selection_embedder", "semantic_scorer"):
            if role not in self.roles:
                raise ConfigError(f"role {role!r} is not configured")
        scorer = self.roles["semantic_scorer"].model.model_id
        selector = self.roles["selection_embedder"].model.model_id
        if scorer == selector:
            raise ConfigError(
                "semantic scorer and selection embedder must be different models "
                f"(both are {scorer!r})"
            )
        judge = self.roles["judge"].model.model_id
        generation_side = {
            self.roles[r].model.model_id for r in ("generator", "reranker") if r in self.roles
        }
        if judge in generation_side:
            raise ConfigError(
                f"judge model {judge!r} must be independent of the generation models"
            )
        if self.parallelism < 1:
            raise ConfigError("parallelism must be at least 1")
        unknown = [s for s in self.stages if s not in DEFAULT_STAGES]
        if unknown:
            raise ConfigError(f"unknown stages: {unknown}")

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        roles = {
            name: RoleConfig.from_dict(entry, name)
            for name, entry in data.get("providers", {}).items()
        }
        options = data.get("retrieval", {})
        retrieval = RetrievalOptions(
            query_config=QueryConfig(options.get("query_config", "NAME_ONLY")),
            k=int(options.get("k", 20)),
            hit_ks=tuple(options.get("hit_ks", (1, 3, 5, 10, 20))),
        )
        options = data.get("sourcegen", {})
        sourcegen = SourcegenOptions(
            mode=GenerationMode(options.get("mode", "TARGET_ONLY")),
            strategy=SelectionStrategy(options.get("strategy", "BASELINE_TOP1")),
            n_candidates=int(options.get("n_candidates", 20)),
            rerank_config=RerankConfig(options.get("rerank_config", "GOLD_SUBCONCEPTS")),
            hit_ks=tuple(options.get("hit_ks", (1, 5, 10, 20))),
            semantic=bool(options.get("semantic", True)),
        )
        options = data.get("subconcept", {})
        subconcept = SubconceptOptions(
            matching_background=bool(options.get("matching_background", False)),
            generation_background=bool(options.get("generation_background", True)),
            prompt_style=options.get("prompt_style", "plain"),
            sma_threshold=float(options.get("sma_threshold", 0.7)),
        )
        options = data.get("explanation", {})
        explanation = ExplanationOptions(
            config=ExplanationConfig(options.get("config", "S5_PAIRS"))
        )
        options = data.get("agreement_input", {})
        agreement = AgreementInput(
            export_json=options.get("export_json"),
            ratings_csv=options.get("ratings_csv"),
            rankings_csv=options.get("rankings_csv"),
        )
        config = cls(
            run_id=data.get("run_id", "run"),
            output_dir=data.get("output_dir", "runs"),
            corpus=data.get("corpus", {}),
            roles=roles,
            stages=tuple(data.get("stages", DEFAULT_STAGES)),
            cache_dir=data.get("cache_dir"),
            seed=int(data.get("seed", 0)),
            parallelism=int(data.get("parallelism", 4)),
            transcripts=bool(data.get("transcripts", True)),
            retrieval=retrieval,
            sourcegen=sourcegen,
            subconcept=subconcept,
            explanation=explanation,
            agreement_input=agreement,
            raw=data,
        )
        config.validate()
        return config

    @classmethod
    def from_file(cls, path: str | Path) -> "PipelineConfig":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
