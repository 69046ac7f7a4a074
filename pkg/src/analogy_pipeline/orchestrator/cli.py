"""Command-line interface.

Stage verbs (retrieve, generate-sources, match, generate-subconcepts,
explain, judge) run one pipeline stage from a config file; ``run`` executes
the configured stage sequence end to end; ``load`` normalizes raw dataset
files; ``stats`` computes agreement statistics from exported matrices; and
``serve`` starts the annotation service.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .. import corpus as corpus_mod
from ..agreement import (
    load_rankings_csv,
    load_ratings_csv,
    matrices_from_export,
    summary_report,
)
from .config import PipelineConfig
from .stages import Stage, run_pipeline, run_stage


def _add_config_arg(parser: argparse.ArgumentParser):
    parser.add_argument("--config", required=True, help="pipeline config JSON file")


def _cmd_load(args) -> int:
    records = []
    if args.scar:
        records.extend(corpus_mod.load_scar(args.scar))
    if args.parallelparc:
        records.extend(corpus_mod.load_parallelparc(args.parallelparc))
    if not records:
        print("nothing to load: pass --scar and/or --parallelparc", file=sys.stderr)
        return 2
    corpus_mod.save_records(records, args.out)
    print(f"wrote {len(records)} records to {args.out}")
    return 0


def _run_single_stage(args, stage: Stage, **kwargs) -> int:
    config = PipelineConfig.from_file(args.config)
    manifest = run_stage(config, stage, **kwargs)
    for artifact in manifest.stages[stage.value]["artifacts"]:
        print(artifact)
    return 0


def _cmd_stats(args) -> int:
    if args.export_json:
        export = json.loads(Path(args.export_json).read_text(encoding="utf-8"))
        ratings, rankings = matrices_from_export(export)
    elif args.ratings_csv and args.rankings_csv:
        ratings = load_ratings_csv(args.ratings_csv)
        rankings = load_rankings_csv(args.rankings_csv)
    else:
        print(
            "stats needs --export-json or both --ratings-csv and --rankings-csv",
            file=sys.stderr,
        )
        return 2
    rankings = {t: m for t, m in rankings.items() if len(m.raters) >= 2}
    report = summary_report(ratings, rankings, exact_p_max_items=4)
    text = json.dumps(report, indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
        print(args.out)
    else:
        print(text)
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from ..annotation.service import create_app

    app = create_app(
        journal_path=args.journal,
        tasks_path=args.tasks,
        judge_verdicts_path=args.judge_verdicts,
        ui_dir=args.ui_dir,
    )
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="analogy-pipeline",
        description="Generate and evaluate educational analogies in stages.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("load", help="normalize SCAR / ParallelPARC files")
    p.add_argument("--scar")
    p.add_argument("--parallelparc")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_load)

    stage_verbs = [
        ("retrieve", Stage.RETRIEVE, {}),
        ("generate-sources", Stage.SOURCEGEN, {}),
        ("match", Stage.SUBCONCEPT, {"do_generation": False}),
        ("generate-subconcepts", Stage.SUBCONCEPT, {"do_matching": False}),
        ("explain", Stage.EXPLAIN, {}),
        ("judge", Stage.JUDGE, {}),
    ]
    for verb, stage, kwargs in stage_verbs:
        p = sub.add_parser(verb, help=f"run the {stage.value} stage")
        _add_config_arg(p)
        p.set_defaults(fn=lambda a, s=stage, kw=kwargs: _run_single_stage(a, s, **kw))

    p = sub.add_parser("run", help="run the full configured pipeline")
    _add_config_arg(p)
    p.set_defaults(fn=lambda a: _cmd_run(a))

    p = sub.add_parser("stats", help="agreement statistics from matrices")
    p.add_argument("--export-json")
    p.add_argument("--ratings-csv")
    p.add_argument("--rankings-csv")
    p.add_argument("--out")
    p.set_defaults(fn=_cmd_stats)

    p = sub.add_parser("serve", help="start the annotation service")
    p.add_argument("--journal", required=True, help="append-only journal file")
    p.add_argument("--tasks", help="task set JSON (defaults to the built-in study set)")
    p.add_argument("--judge-verdicts", help="judge verdicts JSON for alignment stats")
    p.add_argument("--ui-dir", help="built UI bundle to serve at /ui")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(fn=_cmd_serve)

    return parser


def _cmd_run(args) -> int:
    config = PipelineConfig.from_file(args.config)
    manifest = run_pipeline(config)
    print(json.dumps(manifest.stages, indent=2, sort_keys=True))
    return 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    raise SystemExit(main())
