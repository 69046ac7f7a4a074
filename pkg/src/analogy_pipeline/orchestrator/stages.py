"""Staged pipeline execution with per-stage JSONL/CSV artifacts.

Each stage can run standalone against the corpus (gold inputs, the way the
stages are evaluated in isolation) or chained inside ``run_pipeline``, where
source finding feeds sub-concept generation, which feeds explanation and
judging, ending in a per-record bundle. Artifacts carry no timestamps, so
identical configs and seeds reproduce byte-identical files; wall-clock
timings live only in the manifest.
"""

from __future__ import annotations

import csv
import json
import random
import time
import zlib
from concurrent.futures import ThreadPoolExecutor
from enum import Enum
from pathlib import Path

from .. import corpus as corpus_mod
from .. import explanation as explanation_mod
from .. import judge as judge_mod
from .. import retrieval as retrieval_mod
from .. import sourcegen as sourcegen_mod
from .. import subconcept as subconcept_mod
from ..agreement import (
    load_rankings_csv,
    load_ratings_csv,
    matrices_from_export,
    summary_report,
)
from ..errors import ConfigError, DependencyError
from ..providers.cache import ResponseCache
from ..providers.models import cosine
from ..providers.registry import build_chat_client, build_embedding_client
from .config import PipelineConfig
from .manifest import RunManifest


class Stage(str, Enum):
    RETRIEVE = "RETRIEVE"
    SOURCEGEN = "SOURCEGEN"
    SUBCONCEPT = "SUBCONCEPT"
    EXPLAIN = "EXPLAIN"
    JUDGE = "JUDGE"
    AGREE = "AGREE"


def _record_seed(base_seed: int, record_id: str) -> int:
    return zlib.crc32(f"{base_seed}:{record_id}".encode("utf-8"))


def _pmap(fn, items, workers: int):
    """Map preserving order; worker exceptions propagate to the caller."""
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _write_jsonl(path: Path, rows: list[dict]):
    with path.open("w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, sort_keys=True, ensure_ascii=False) + "\n")


def _read_jsonl(path: Path) -> list[dict]:
    return [
        json.loads(line)
        for line in path.read_text(encoding="utf-8").splitlines()
        if line.strip()
    ]


def _write_json(path: Path, payload: dict):
    path.write_text(
        json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )


class RunContext:
    """Clients, cache, corpus, and artifact paths for one run directory."""

    def __init__(self, config: PipelineConfig):
        config.validate()
        self.config = config
        self.run_dir = Path(config.output_dir) / config.run_id
        self.run_dir.mkdir(parents=True, exist_ok=True)
        self.cache = ResponseCache(config.cache_dir)
        self._chat_clients: dict[str, object] = {}
        self._embed_clients: dict[str, object] = {}
        self._records: list[corpus_mod.AnalogyRecord] | None = None

    def chat(self, role: str):
        if role not in self._chat_clients:
            role_config = self.config.role(role)
            transcript = (
                self.run_dir / "transcripts.jsonl" if self.config.transcripts else None
            )
            self._chat_clients[role] = build_chat_client(
                role_config.provider,
                cache=self.cache,
                transcript_path=transcript,
                max_concurrency=self.config.parallelism,
                backoff_base=0.0,
            )
        return self._chat_clients[role]

    def embedder(self, role: str):
        if role not in self._embed_clients:
            role_config = self.config.role(role)
            self._embed_clients[role] = build_embedding_client(
                role_config.provider, cache=self.cache
            )
        return self._embed_clients[role]

    def model(self, role: str):
        return self.config.role(role).model

    def records(self) -> list[corpus_mod.AnalogyRecord]:
        if self._records is None:
            spec = self.config.corpus
            sources = [k for k in ("normalized", "scar", "parallelparc") if spec.get(k)]
            if len(sources) != 1:
                raise ConfigError(
                    "corpus config must name exactly one of 'normalized', 'scar', "
                    "'parallelparc'"
                )
            kind = sources[0]
            path = spec[kind]
            if kind == "scar":
                self._records = corpus_mod.load_scar(path)
            elif kind == "parallelparc":
                self._records = corpus_mod.load_parallelparc(path)
            else:
                self._records = corpus_mod.load_records(path)
        return self._records

    def gold(self) -> dict[str, set[str]]:
        """Gold sources per record: every gold source named for the same target."""
        by_target: dict[str, set[str]] = {}
        for record in self.records():
            by_target.setdefault(
                retrieval_mod.canonical(record.target_name), set()
            ).add(record.source_name)
        return {
            record.id: by_target[retrieval_mod.canonical(record.target_name)]
            for record in self.records()
        }

    def artifact_path(self, name: str) -> Path:
        return self.run_dir / name

    def require_artifact(self, name: str, producer: str) -> Path:
        path = self.artifact_path(name)
        if not path.exists():
            raise DependencyError(
                f"missing artifact {path}; run the {producer} stage first"
            )
        return path


def _stage_retrieve(ctx: RunContext) -> list[Path]:
    config = ctx.config.retrieval
    records = ctx.records()
    client = ctx.embedder("retrieval_embedder")
    model = ctx.model("retrieval_embedder")
    pool = retrieval_mod.build_pool(records, client, model)
    queries = [retrieval_mod.render_query(r, config.query_config) for r in records]
    vectors = client.embed(model, queries)
    results = [
        retrieval_mod.retrieve_topk(pool, vec, config.k, record_id=r.id)
        for r, vec in zip(records, vectors)
    ]
    rows = [
        {
            "record_id": res.query_record_id,
            "query_config": config.query_config.value,
            "embed_model": pool.embed_model_id,
            "k": res.k,
            "ranked": [[name, score] for name, score in res.ranked],
        }
        for res in results
    ]
    out = ctx.artifact_path("retrieval.jsonl")
    _write_jsonl(out, rows)

    gold = ctx.gold()
    ks = [k for k in config.hit_ks if k <= config.k]
    metrics = {
        "query_config": config.query_config.value,
        "embed_model": pool.embed_model_id,
        "pool_size": len(pool),
        "hit_at_k": {str(k): retrieval_mod.hit_at_k(results, gold, k) for k in ks},
        "word_overlap": [
            {
                "overlap_count": b.overlap_count,
                "n_records": b.n_records,
                "retrieved_rate": b.retrieved_rate,
                "mean_gold_rank": b.mean_gold_rank,
            }
            for b in retrieval_mod.word_overlap_report(results, gold, records)
        ],
    }
    metrics_path = ctx.artifact_path("retrieval_metrics.json")
    _write_json(metrics_path, metrics)
    return [out, metrics_path]


def _stage_sourcegen(ctx: RunContext) -> list[Path]:
    config = ctx.config.sourcegen
    records = ctx.records()
    chat = ctx.chat("generator")
    generator = ctx.model("generator")

    def one(record):
        candidates = sourcegen_mod.generate_candidates(
            chat, generator, record, config.mode, config.n_candidates
        )
        selected = sourcegen_mod.select_top1(
            candidates,
            config.strategy,
            record,
            chat_client=ctx.chat("reranker") if "reranker" in ctx.config.roles else None,
            embed_client=ctx.embedder("selection_embedder"),
            selection_embedder=ctx.model("selection_embedder"),
            reranker=ctx.model("reranker") if "reranker" in ctx.config.roles else None,
            rerank_config=config.rerank_config,
        )
        return candidates, selected

    outputs = _pmap(one, records, ctx.config.parallelism)
    rows = [
        {
            "record_id": record.id,
            "mode": config.mode.value,
            "strategy": config.strategy.value,
            "candidates": candidates.names(),
            "scores": [score for _, score in candidates.ranked],
            "selected": selected,
        }
        for record, (candidates, selected) in zip(records, outputs)
    ]
    out = ctx.artifact_path("sourcegen.jsonl")
    _write_jsonl(out, rows)

    gold = ctx.gold()
    results = [candidates for candidates, _ in outputs]
    ks = [k for k in config.hit_ks if k <= config.n_candidates]
    metrics: dict = {
        "mode": config.mode.value,
        "strategy": config.strategy.value,
        "exact_hit_at_k": {
            str(k): sourcegen_mod.exact_hit_at_k(results, gold, k) for k in ks
        },
    }
    artifacts = [out]
    if config.semantic:
        scorer_client = ctx.embedder("semantic_scorer")
        scorer = ctx.model("semantic_scorer")
        threshold, threshold_report = _derive_threshold(ctx, scorer_client, scorer)
        metrics["semantic_hit_at_k"] = {
            str(k): sourcegen_mod.semantic_hit_at_k(
                results, gold, k, threshold, scorer_client, scorer
            )
            for k in ks
        }
        metrics["semantic_threshold"] = threshold.value
        threshold_path = ctx.artifact_path("semantic_threshold.json")
        _write_json(threshold_path, threshold_report)
        artifacts.append(threshold_path)
    metrics_path = ctx.artifact_path("sourcegen_metrics.json")
    _write_json(metrics_path, metrics)
    artifacts.append(metrics_path)
    return artifacts


def _derive_threshold(ctx: RunContext, scorer_client, scorer):
    """Upper-tertile threshold over gold-pair similarities.

    A gold pair is (target name, gold source name); incorrect pairs for the
    report's contrast are built by a seeded derangement-style shuffle of the
    sources across records.
    """
    records = ctx.records()
    targets = [r.target_name for r in records]
    sources = [r.source_name for r in records]
    model = scorer
    target_vecs = scorer_client.embed(model, targets)
    source_vecs = scorer_client.embed(model, sources)
    gold_sims = [cosine(t, s) for t, s in zip(target_vecs, source_vecs)]
    shuffled = list(range(len(records)))
    random.Random(ctx.config.seed).shuffle(shuffled)
    incorrect_sims = [
        cosine(target_vecs[i], source_vecs[j])
        for i, j in enumerate(shuffled)
        if i != j
    ]
    threshold = sourcegen_mod.derive_semantic_threshold(
        gold_sims, scoring_model_id=model.model_id
    )
    report = {
        "value": threshold.value,
        "derivation": threshold.derivation.value,
        "scoring_model_id": threshold.scoring_model_id,
        "n_gold_pairs": len(gold_sims),
        "gold_pair_mean": sum(gold_sims) / len(gold_sims),
        "incorrect_pair_mean": (
            sum(incorrect_sims) / len(incorrect_sims) if incorrect_sims else None
        ),
    }
    return threshold, report


def _stage_subconcept(
    ctx: RunContext, do_matching: bool = True, do_generation: bool = True
) -> list[Path]:
    config = ctx.config.subconcept
    records = [r for r in ctx.records() if r.mappings]
    if not records:
        raise DependencyError("subconcept stage needs records with mappings")
    chat = ctx.chat("generator")
    generator = ctx.model("generator")
    scorer_client = ctx.embedder("semantic_scorer")
    scorer = ctx.model("semantic_scorer")

    selected_sources: dict[str, str] = {}
    sourcegen_path = ctx.artifact_path("sourcegen.jsonl")
    if sourcegen_path.exists():
        for row in _read_jsonl(sourcegen_path):
            selected_sources[row["record_id"]] = row["selected"]

    def one(record):
        entry: dict = {"record_id": record.id}
        if do_matching:
            seed = _record_seed(ctx.config.seed, record.id)
            task = subconcept_mod.make_matching_task(
                record, config.matching_background, seed
            )
            result = subconcept_mod.match_subconcepts(
                chat, generator, task, record, prompt_style=config.prompt_style
            )
            correct = subconcept_mod.pairs_as_set(
                result.predicted_pairs
            ) == subconcept_mod.pairs_as_set(record.mappings)
            entry["matching"] = {
                "shuffle_seed": seed,
                "with_background": config.matching_background,
                "shuffled_targets": list(task.target_subs),
                "shuffled_sources": list(task.source_subs),
                "predicted_pairs": [
                    [p.target_sub, p.source_sub] for p in result.predicted_pairs
                ],
                "correct": correct,
            }
        if do_generation:
            generated = subconcept_mod.generate_source_subconcepts(
                chat, generator, record, config.generation_background
            )
            hits, total = subconcept_mod.semantic_match_hits(
                generated,
                list(record.source_subs),
                scorer_client,
                scorer,
                config.sma_threshold,
            )
            entry["generation"] = {
                "with_background": config.generation_background,
                "generated": generated,
                "sma_hits": hits,
                "sma_total": total,
                "sma": hits / total,
            }
        selected = selected_sources.get(record.id)
        if selected is not None:
            pipeline_subs = subconcept_mod.generate_source_subconcepts(
                chat, generator, record, with_background=False, source_name=selected
            )
            entry["selected_source"] = selected
            entry["pipeline_pairs"] = [
                [t, s] for t, s in zip(record.target_subs, pipeline_subs)
            ]
        return entry

    rows = _pmap(one, records, ctx.config.parallelism)
    out = ctx.artifact_path("subconcept.jsonl")
    _write_jsonl(out, rows)

    metrics: dict = {"n_records": len(rows)}
    if do_matching:
        metrics["matching"] = {
            "with_background": config.matching_background,
            "system_accuracy": sum(r["matching"]["correct"] for r in rows) / len(rows),
        }
    if do_generation:
        hits = sum(r["generation"]["sma_hits"] for r in rows)
        total = sum(r["generation"]["sma_total"] for r in rows)
        metrics["generation"] = {
            "with_background": config.generation_background,
            "sma_threshold": config.sma_threshold,
            "sma_macro": sum(r["generation"]["sma"] for r in rows) / len(rows),
            "sma_micro": hits / total,
        }
    metrics_path = ctx.artifact_path("subconcept_metrics.json")
    _write_json(metrics_path, metrics)

    summary_path = ctx.artifact_path("subconcept_summary.csv")
    with summary_path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["task", "with_background", "metric", "value"])
        if do_matching:
            writer.writerow(
                [
                    "matching",
                    config.matching_background,
                    "system_accuracy",
                    metrics["matching"]["system_accuracy"],
                ]
            )
        if do_generation:
            writer.writerow(
                [
                    "generation",
                    config.generation_background,
                    "sma_macro",
                    metrics["generation"]["sma_macro"],
                ]
            )
            writer.writerow(
                [
                    "generation",
                    config.generation_background,
                    "sma_micro",
                    metrics["generation"]["sma_micro"],
                ]
            )
    return [out, metrics_path, summary_path]


def _stage_explain(ctx: RunContext) -> list[Path]:
    config = ctx.config.explanation.config
    records = ctx.records()
    chat = ctx.chat("generator")
    generator = ctx.model("generator")
    scorer_client = ctx.embedder("explanation_scorer")
    scorer = ctx.model("explanation_scorer")

    pipeline_inputs: dict[str, dict] = {}
    subconcept_path = ctx.artifact_path("subconcept.jsonl")
    if subconcept_path.exists():
        for row in _read_jsonl(subconcept_path):
            if "pipeline_pairs" in row:
                pipeline_inputs[row["record_id"]] = row

    def one(record):
        pipeline_row = pipeline_inputs.get(record.id)
        if pipeline_row is not None:
            working = corpus_mod.AnalogyRecord(
                id=record.id,
                dataset_tag=corpus_mod.DatasetTag.CUSTOM,
                target_name=record.target_name,
                source_name=pipeline_row["selected_source"],
                target_background=record.target_background,
                source_background=None,
                mappings=tuple(
                    corpus_mod.SubConceptPair(t, s)
                    for t, s in pipeline_row["pipeline_pairs"]
                ),
            )
        else:
            working = record
        seed = _record_seed(ctx.config.seed, record.id)
        output = explanation_mod.generate_explanation(
            chat, generator, working, config, seed=seed
        )
        entry = {
            "record_id": record.id,
            "config": config.value,
            "target": working.target_name,
            "source": working.source_name,
            "texts": list(output.texts),
            "score_vs_gold": None,
            "score_pairwise": None,
        }
        if record.gold_explanations:
            entry["score_vs_gold"] = explanation_mod.score_explanation(
                output, list(record.gold_explanations), scorer_client, scorer
            )
            if len(output.texts) == len(record.gold_explanations):
                entry["score_pairwise"] = explanation_mod.score_explanation_pairwise(
                    output, list(record.gold_explanations), scorer_client, scorer
                )
        return entry

    rows = _pmap(one, records, ctx.config.parallelism)
    out = ctx.artifact_path("explain.jsonl")
    _write_jsonl(out, rows)

    scored = [r["score_vs_gold"] for r in rows if r["score_vs_gold"] is not None]
    summary_path = ctx.artifact_path("explain_summary.csv")
    with summary_path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["model", "config", "n_scored", "mean_score", "std_score"])
        if scored:
            mean = sum(scored) / len(scored)
            std = (sum((s - mean) ** 2 for s in scored) / len(scored)) ** 0.5
            writer.writerow([generator.model_id, config.value, len(scored), mean, std])
        else:
            writer.writerow([generator.model_id, config.value, 0, "", ""])
    return [out, summary_path]


def _stage_judge(ctx: RunContext) -> list[Path]:
    explain_path = ctx.require_artifact("explain.jsonl", "EXPLAIN")
    rows = _read_jsonl(explain_path)
    chat = ctx.chat("judge")
    judge_model = ctx.model("judge")
    generator_id = ctx.model("generator").model_id

    def one(row):
        verdict = judge_mod.judge_analogy(
            chat,
            judge_model,
            target=row["target"],
            source=row["source"],
            explanation="\n".join(row["texts"]),
            record_id=row["record_id"],
            generator_model_id=generator_id,
        )
        return verdict

    verdicts = _pmap(one, rows, ctx.config.parallelism)
    out_rows = [
        {
            "record_id": v.record_id,
            "coherence": v.coherence,
            "mapping": v.mapping,
            "explanatory": v.explanatory,
            "avg_score": v.avg_score,
            "rationales": list(v.rationales),
            "judge_model": v.judge_model_id,
        }
        for v in verdicts
    ]
    out = ctx.artifact_path("judge.jsonl")
    _write_jsonl(out, out_rows)

    strategy = ctx.config.sourcegen.strategy.value
    agg_path = ctx.artifact_path("judge_aggregate.csv")
    _write_aggregate_csv(
        agg_path,
        judge_mod.aggregate_verdicts(verdicts, {v.record_id: strategy for v in verdicts}),
    )
    leaderboard_path = ctx.artifact_path("judge_leaderboard.csv")
    _write_aggregate_csv(
        leaderboard_path,
        judge_mod.aggregate_verdicts(verdicts, {v.record_id: generator_id for v in verdicts}),
    )
    return [out, agg_path, leaderboard_path]


def _write_aggregate_csv(path: Path, aggregates):
    """Rows are dimensions plus avg_score; one mean/std column pair per group."""
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["dimension"] + [f"{a.group_key} mean" for a in aggregates]
                        + [f"{a.group_key} std" for a in aggregates])
        for dim in ("coherence", "mapping", "explanatory", "avg_score"):
            writer.writerow(
                [dim]
                + [a.means[dim] for a in aggregates]
                + [a.stds[dim] for a in aggregates]
            )


def _stage_agree(ctx: RunContext) -> list[Path]:
    source = ctx.config.agreement_input
    if source.export_json:
        export = json.loads(Path(source.export_json).read_text(encoding="utf-8"))
        ratings, rankings = matrices_from_export(export)
    elif source.ratings_csv and source.rankings_csv:
        ratings = load_ratings_csv(source.ratings_csv)
        rankings = load_rankings_csv(source.rankings_csv)
    else:
        raise DependencyError(
            "agreement stage needs agreement_input.export_json or both "
            "agreement_input.ratings_csv and agreement_input.rankings_csv"
        )
    rankings = {t: m for t, m in rankings.items() if len(m.raters) >= 2}
    report = summary_report(ratings, rankings, exact_p_max_items=4)
    out = ctx.artifact_path("agreement_stats.json")
    _write_json(out, report)
    return [out]


_STAGE_FNS = {
    Stage.RETRIEVE: _stage_retrieve,
    Stage.SOURCEGEN: _stage_sourcegen,
    Stage.SUBCONCEPT: _stage_subconcept,
    Stage.EXPLAIN: _stage_explain,
    Stage.JUDGE: _stage_judge,
    Stage.AGREE: _stage_agree,
}


def _load_or_new_manifest(ctx: RunContext) -> RunManifest:
    path = ctx.run_dir / "manifest.json"
    if path.exists():
        return RunManifest.load(path)
    return RunManifest(run_id=ctx.config.run_id, config_snapshot=ctx.config.raw)


def run_stage(
    config: PipelineConfig,
    stage: Stage | str,
    ctx: RunContext | None = None,
    **stage_kwargs,
) -> RunManifest:
    """Run one stage, write its artifacts, and update the run manifest."""
    stage = Stage(stage)
    ctx = ctx or RunContext(config)
    manifest = _load_or_new_manifest(ctx)
    start = time.perf_counter()
    artifacts = _STAGE_FNS[stage](ctx, **stage_kwargs)
    manifest.add_stage(stage.value, artifacts, time.perf_counter() - start)
    manifest.save(ctx.run_dir / "manifest.json")
    return manifest


def run_pipeline(config: PipelineConfig) -> RunManifest:
    """Run the configured stages in dependency order and emit the final bundle."""
    config.validate()
    ctx = RunContext(config)
    manifest = None
    for stage in (s for s in Stage if s.value in config.stages):
        manifest = run_stage(config, stage, ctx=ctx)
    manifest = manifest or _load_or_new_manifest(ctx)
    bundle_path = _write_bundle(ctx)
    if bundle_path is not None:
        manifest.extras["bundle"] = str(bundle_path)
    if ctx.config.transcripts and (ctx.run_dir / "transcripts.jsonl").exists():
        manifest.extras["transcripts"] = str(ctx.run_dir / "transcripts.jsonl")
    manifest.save(ctx.run_dir / "manifest.json")
    return manifest


def _write_bundle(ctx: RunContext) -> Path | None:
    """Final per-record view: selected source, aligned pairs, explanation, scores."""
    paths = {
        "sourcegen": ctx.artifact_path("sourcegen.jsonl"),
        "subconcept": ctx.artifact_path("subconcept.jsonl"),
        "explain": ctx.artifact_path("explain.jsonl"),
        "judge": ctx.artifact_path("judge.jsonl"),
    }
    loaded = {
        name: {row["record_id"]: row for row in _read_jsonl(path)}
        for name, path in paths.items()
        if path.exists()
    }
    if not loaded:
        return None
    bundle_rows = []
    for record in ctx.records():
        row: dict = {"record_id": record.id, "target_name": record.target_name}
        sourcegen_row = loaded.get("sourcegen", {}).get(record.id)
        if sourcegen_row:
            row["selected_source"] = sourcegen_row["selected"]
        subconcept_row = loaded.get("subconcept", {}).get(record.id)
        if subconcept_row and "pipeline_pairs" in subconcept_row:
            row["aligned_pairs"] = subconcept_row["pipeline_pairs"]
        explain_row = loaded.get("explain", {}).get(record.id)
        if explain_row:
            row["explanation"] = explain_row["texts"]
            row.setdefault("selected_source", explain_row["source"])
        judge_row = loaded.get("judge", {}).get(record.id)
        if judge_row:
            row["judge"] = {
                "coherence": judge_row["coherence"],
                "mapping": judge_row["mapping"],
                "explanatory": judge_row["explanatory"],
            }
        bundle_rows.append(row)
    bundle_path = ctx.artifact_path("bundle.jsonl")
    _write_jsonl(bundle_path, bundle_rows)
    return bundle_path
