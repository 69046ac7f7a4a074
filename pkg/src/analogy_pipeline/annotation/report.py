"""Agreement report over stored submissions, with optional judge alignment.

Alpha and Kendall's W are inter-annotator statistics (humans only). When
judge verdicts for the same items are loaded, the judge joins the pairwise
correlation matrix and the rater clustering, and a Table-style alignment
block compares each annotator against the judge's implicit ranking.
"""

from __future__ import annotations

import json
from pathlib import Path

from ..agreement import (
    RatingMatrix,
    _rho_and_linkage,
    matrices_from_export,
    spearman_rho,
    summary_report,
)
from ..errors import UndefinedStatisticError
from .export import DIMENSIONS, build_export, item_id
from .models import AnnotationSubmission, AnnotationTask

JUDGE_RATER = "judge"


def load_judge_verdicts(path: str | Path) -> dict[str, dict[str, int]]:
    """Verdict file: list of {task_id, candidate_index, coherence, mapping, explanatory}."""
    entries = json.loads(Path(path).read_text(encoding="utf-8"))
    verdicts: dict[str, dict[str, int]] = {}
    for entry in entries:
        key = item_id(entry["task_id"], int(entry["candidate_index"]))
        verdicts[key] = {dim: int(entry[dim]) for dim in DIMENSIONS}
    return verdicts


def judge_implicit_ranking(
    verdicts: dict[str, dict[str, int]], task_id: str
) -> list[int] | None:
    """Rank the task's three candidates by the judge's average score.

    Ties break by coherence, then mapping, then candidate order. Returns
    ``ranking[i]`` = rank of candidate i, or None when the judge did not
    cover all three candidates.
    """
    keys = [item_id(task_id, i) for i in (1, 2, 3)]
    if any(k not in verdicts for k in keys):
        return None
    scored = []
    for idx, key in enumerate(keys):
        v = verdicts[key]
        avg = (v["coherence"] + v["mapping"] + v["explanatory"]) / 3.0
        scored.append((-avg, -v["coherence"], -v["mapping"], idx))
    order = sorted(range(3), key=lambda i: scored[i])
    ranking = [0, 0, 0]
    for rank, idx in enumerate(order, start=1):
        ranking[idx] = rank
    return ranking


def _with_judge_row(matrix_dict: dict, verdicts: dict[str, dict[str, int]], dim: str) -> dict:
    row = [
        verdicts[item][dim] if item in verdicts else None for item in matrix_dict["items"]
    ]
    return {
        "raters": list(matrix_dict["raters"]) + [JUDGE_RATER],
        "items": list(matrix_dict["items"]),
        "values": [list(r) for r in matrix_dict["values"]] + [row],
        "scale": matrix_dict.get("scale", [1, 2, 3]),
    }


def _judge_alignment(
    submissions: list[AnnotationSubmission],
    verdicts: dict[str, dict[str, int]],
    ratings_with_judge: dict[str, RatingMatrix],
) -> dict:
    ranking_block: dict[str, dict] = {}
    by_annotator: dict[str, list[AnnotationSubmission]] = {}
    for sub in submissions:
        by_annotator.setdefault(sub.annotator_id, []).append(sub)
    for annotator in sorted(by_annotator):
        human: list[float] = []
        machine: list[float] = []
        for sub in sorted(by_annotator[annotator], key=lambda s: s.task_id):
            judge_ranks = judge_implicit_ranking(verdicts, sub.task_id)
            if judge_ranks is None:
                continue
            human.extend(float(r) for r in sub.ranking)
            machine.extend(float(r) for r in judge_ranks)
        if len(human) < 3:
            ranking_block[annotator] = {"rho": None, "p_value": None, "significant": None}
            continue
        try:
            rho, p = spearman_rho(human, machine)
        except UndefinedStatisticError:
            ranking_block[annotator] = {"rho": None, "p_value": None, "significant": None}
            continue
        ranking_block[annotator] = {"rho": rho, "p_value": p, "significant": p < 0.05}

    dimension_block: dict[str, dict] = {}
    for dim, matrix in ratings_with_judge.items():
        judge_idx = matrix.raters.index(JUDGE_RATER)
        per_annotator = {}
        for idx, rater in enumerate(matrix.raters):
            if rater == JUDGE_RATER:
                continue
            xs, ys = [], []
            for j in range(len(matrix.items)):
                a, b = matrix.values[idx][j], matrix.values[judge_idx][j]
                if a is not None and b is not None:
                    xs.append(float(a))
                    ys.append(float(b))
            if len(xs) < 3:
                per_annotator[rater] = {"rho": None, "p_value": None}
                continue
            try:
                rho, p = spearman_rho(xs, ys)
            except UndefinedStatisticError:
                per_annotator[rater] = {"rho": None, "p_value": None}
                continue
            per_annotator[rater] = {"rho": rho, "p_value": p}
        dimension_block[dim] = per_annotator
    return {"ranking": ranking_block, "dimensions": dimension_block}


def agreement_report(
    submissions: list[AnnotationSubmission],
    tasks: list[AnnotationTask],
    judge_verdicts: dict[str, dict[str, int]] | None = None,
) -> dict:
    """Full stats JSON for the current submissions."""
    export = build_export(submissions, tasks)
    ratings, rankings = matrices_from_export(export)
    multi_rater_rankings = {
        task: matrix for task, matrix in rankings.items() if len(matrix.raters) >= 2
    }
    report = summary_report(ratings, multi_rater_rankings, exact_p_max_items=0)
    report["counts"] = export["counts"]

    if judge_verdicts:
        with_judge = {
            dim: _with_judge_row(export["ratings"][dim], judge_verdicts, dim)
            for dim in DIMENSIONS
        }
        ratings_with_judge = {
            dim: RatingMatrix(
                raters=tuple(d["raters"]),
                items=tuple(d["items"]),
                values=tuple(tuple(row) for row in d["values"]),
            )
            for dim, d in with_judge.items()
        }
        rho_linkage = _rho_and_linkage(ratings_with_judge)
        report["spearman_rho"] = rho_linkage["spearman_rho"]
        report["linkage"] = rho_linkage["linkage"]
        report["judge_alignment"] = _judge_alignment(
            submissions, judge_verdicts, ratings_with_judge
        )
    return report
