"""Export stored submissions as rating/ranking matrices and CSV.

Item ids are ``{task_id}#{candidate_index}`` with 1-based candidate indices
in task order, so every artifact (ratings, rankings, judge verdicts) joins
on the same key. The datapoint counts are reported raw per category; any
aggregate arithmetic is left to the consumer.
"""

from __future__ import annotations

import csv
import io

from ..agreement import matrices_from_export, RatingMatrix, RankMatrix
from .models import AnnotationSubmission, AnnotationTask

DIMENSIONS = ("coherence", "mapping", "explanatory")


def item_id(task_id: str, candidate_index: int) -> str:
    return f"{task_id}#{candidate_index}"


def build_export(
    submissions: list[AnnotationSubmission], tasks: list[AnnotationTask]
) -> dict:
    """Rating matrices per dimension, rank matrices per task, confidences."""
    if not submissions:
        raise ValueError("no submissions to export")
    task_ids = [t.task_id for t in tasks]
    items = [item_id(t, i) for t in task_ids for i in (1, 2, 3)]
    raters = sorted({s.annotator_id for s in submissions})
    by_key = {(s.annotator_id, s.task_id): s for s in submissions}

    ratings = {}
    for dim in DIMENSIONS:
        values = []
        for rater in raters:
            row = []
            for task in task_ids:
                sub = by_key.get((rater, task))
                for idx in range(3):
                    row.append(
                        getattr(sub.scores[idx], dim) if sub is not None else None
                    )
            values.append(tuple(row))
        ratings[dim] = {
            "raters": list(raters),
            "items": list(items),
            "values": [list(row) for row in values],
            "scale": [1, 2, 3],
        }

    rankings = {}
    for task in task_ids:
        rows = [
            (rater, by_key[(rater, task)])
            for rater in raters
            if (rater, task) in by_key
        ]
        if not rows:
            continue
        rankings[task] = {
            "raters": [rater for rater, _ in rows],
            "items": [item_id(task, i) for i in (1, 2, 3)],
            "ranks": [list(sub.ranking) for _, sub in rows],
        }

    confidence = {}
    for sub in submissions:
        confidence.setdefault(sub.annotator_id, {})[sub.task_id] = sub.confidence

    n = len(submissions)
    return {
        "ratings": ratings,
        "rankings": rankings,
        "confidence": confidence,
        "counts": {
            "annotators": len(raters),
            "submissions": n,
            "score_datapoints": 9 * n,
            "ranking_datapoints": n,
            "confidence_datapoints": n,
        },
    }


def export_csv(submissions: list[AnnotationSubmission], tasks: list[AnnotationTask]) -> str:
    """One row per (annotator, task, candidate); rank and confidence repeated."""
    if not submissions:
        raise ValueError("no submissions to export")
    by_task = {t.task_id: t for t in tasks}
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(
        [
            "annotator_id",
            "task_id",
            "candidate_index",
            "candidate_name",
            "coherence",
            "mapping",
            "explanatory",
            "rank",
            "confidence",
        ]
    )
    for sub in sorted(submissions, key=lambda s: (s.annotator_id, s.task_id)):
        task = by_task[sub.task_id]
        for idx in range(3):
            writer.writerow(
                [
                    sub.annotator_id,
                    sub.task_id,
                    idx + 1,
                    task.candidates[idx].source_name,
                    sub.scores[idx].coherence,
                    sub.scores[idx].mapping,
                    sub.scores[idx].explanatory,
                    sub.ranking[idx],
                    sub.confidence,
                ]
            )
    return buffer.getvalue()


def submissions_from_csv(text: str) -> list[AnnotationSubmission]:
    """Rebuild submissions from the CSV export (round-trip support)."""
    rows = list(csv.DictReader(io.StringIO(text)))
    grouped: dict[tuple[str, str], list[dict]] = {}
    for row in rows:
        grouped.setdefault((row["annotator_id"], row["task_id"]), []).append(row)
    submissions = []
    for (annotator, task), members in sorted(grouped.items()):
        members.sort(key=lambda r: int(r["candidate_index"]))
        submissions.append(
            AnnotationSubmission(
                annotator_id=annotator,
                task_id=task,
                scores=[
                    {
                        "coherence": int(m["coherence"]),
                        "mapping": int(m["mapping"]),
                        "explanatory": int(m["explanatory"]),
                    }
                    for m in members
                ],
                ranking=[int(m["rank"]) for m in members],
                confidence=int(members[0]["confidence"]),
            )
        )
    return submissions


def export_matrices(
    export: dict,
) -> tuple[dict[str, RatingMatrix], dict[str, RankMatrix]]:
    return matrices_from_export(export)
