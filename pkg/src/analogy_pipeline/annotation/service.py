"""HTTP service for the annotation study.

Endpoints:
    POST /annotators              register, returns a fresh anonymous id
    GET  /tasks?annotator=ID      task list with per-task completion flags
    POST /submissions             store one validated submission (last write wins)
    GET  /export?format=json|csv  rating/ranking matrices or long-form CSV
    GET  /agreement               agreement statistics over current data
    GET  /calibration             the scoring rubric and calibration examples
    GET  /health                  liveness probe

The browser UI bundle, when built, is served statically under ``/ui``.
"""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, HTTPException, Query
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import PlainTextResponse
from fastapi.staticfiles import StaticFiles

from ..errors import UndefinedStatisticError
from ..judge import rubric_text
from .export import build_export, export_csv
from .models import AnnotationSubmission, SubmissionAck, TaskWithStatus
from .report import agreement_report, load_judge_verdicts
from .store import SubmissionStore
from .tasks import default_tasks, load_tasks


def create_app(
    journal_path: str | Path,
    tasks_path: str | Path | None = None,
    judge_verdicts_path: str | Path | None = None,
    ui_dir: str | Path | None = None,
) -> FastAPI:
    tasks = load_tasks(tasks_path) if tasks_path else default_tasks()
    tasks_by_id = {t.task_id: t for t in tasks}
    store = SubmissionStore(journal_path)
    judge_verdicts = (
        load_judge_verdicts(judge_verdicts_path) if judge_verdicts_path else None
    )

    app = FastAPI(title="analogy annotation service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    app.state.store = store
    app.state.tasks = tasks

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok", "tasks": len(tasks), "submissions": store.count()}

    @app.post("/annotators", status_code=201)
    def register() -> dict:
        return {"annotator_id": store.register_annotator()}

    @app.get("/tasks", response_model=list[TaskWithStatus])
    def list_tasks(annotator: str = Query(min_length=1)) -> list[TaskWithStatus]:
        if not store.is_registered(annotator):
            raise HTTPException(
                status_code=401,
                detail=f"registration required: unknown annotator id {annotator!r}",
            )
        done = store.completed_tasks(annotator)
        return [
            TaskWithStatus(**task.model_dump(), completed=task.task_id in done)
            for task in tasks
        ]

    @app.post("/submissions", status_code=201, response_model=SubmissionAck)
    def submit(submission: AnnotationSubmission) -> SubmissionAck:
        if not store.is_registered(submission.annotator_id):
            raise HTTPException(
                status_code=401,
                detail=f"registration required: unknown annotator id "
                f"{submission.annotator_id!r}",
            )
        if submission.task_id not in tasks_by_id:
            raise HTTPException(
                status_code=404, detail=f"unknown task {submission.task_id!r}"
            )
        replaced = store.submit(submission)
        return SubmissionAck(
            status="stored",
            annotator_id=submission.annotator_id,
            task_id=submission.task_id,
            replaced=replaced,
        )

    @app.get("/export")
    def export(format: str = Query("json", pattern="^(json|csv)$")):
        submissions = store.submissions()
        if not submissions:
            raise HTTPException(status_code=404, detail="no submissions stored yet")
        if format == "csv":
            return PlainTextResponse(
                export_csv(submissions, tasks), media_type="text/csv"
            )
        return build_export(submissions, tasks)

    @app.get("/agreement")
    def agreement() -> dict:
        submissions = store.submissions()
        if not submissions:
            raise HTTPException(status_code=404, detail="no submissions stored yet")
        try:
            return agreement_report(submissions, tasks, judge_verdicts)
        except UndefinedStatisticError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc

    @app.get("/calibration")
    def calibration() -> dict:
        return {"text": rubric_text()}

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
