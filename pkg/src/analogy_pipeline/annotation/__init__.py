"""Annotation service: serve rating/ranking tasks and collect human judgments."""

from .models import AnnotationTask, AnnotationSubmission, CandidateScores
from .store import SubmissionStore
from .tasks import default_tasks, load_tasks
from .service import create_app

__all__ = [
    "AnnotationSubmission",
    "AnnotationTask",
    "CandidateScores",
    "SubmissionStore",
    "create_app",
    "default_tasks",
    "load_tasks",
]
