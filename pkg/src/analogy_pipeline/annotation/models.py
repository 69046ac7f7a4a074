"""Pydantic schemas for annotation tasks and submissions.

Validation here is the contract the browser client mirrors: scores on the
1-3 scale for all three dimensions of all three candidates, a ranking that
is a permutation of 1..3, and a confidence on the 1-5 scale.
"""

from __future__ import annotations

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class Candidate(BaseModel):
    model_config = ConfigDict(extra="forbid")

    source_name: str = Field(min_length=1)
    explanation: str = Field(min_length=1)


class AnnotationTask(BaseModel):
    model_config = ConfigDict(extra="forbid")

    task_id: str = Field(min_length=1)
    target_name: str = Field(min_length=1)
    target_background: str = ""
    domain: str = ""
    candidates: list[Candidate]

    @field_validator("candidates")
    @classmethod
    def exactly_three_distinct(cls, v: list[Candidate]) -> list[Candidate]:
        if len(v) != 3:
            raise ValueError("a task carries exactly 3 candidates")
        names = {c.source_name.strip().lower() for c in v}
        if len(names) != 3:
            raise ValueError("candidate names must be distinct")
        return v


class TaskWithStatus(AnnotationTask):
    completed: bool = False


class CandidateScores(BaseModel):
    # strict: the browser client rejects string-typed numbers, so the service
    # must too, keeping client and service validation in lockstep
    model_config = ConfigDict(extra="forbid", strict=True)

    coherence: int = Field(ge=1, le=3)
    mapping: int = Field(ge=1, le=3)
    explanatory: int = Field(ge=1, le=3)


class AnnotationSubmission(BaseModel):
    """One annotator's complete judgment of one task.

    ``ranking[i]`` is the rank (1 = most useful for learning) assigned to
    candidate ``i`` in the task's candidate order.
    """

    model_config = ConfigDict(extra="forbid", strict=True)

    annotator_id: str = Field(min_length=1)
    task_id: str = Field(min_length=1)
    scores: list[CandidateScores]
    ranking: list[int]
    confidence: int = Field(ge=1, le=5)

    @field_validator("scores")
    @classmethod
    def three_score_triples(cls, v: list[CandidateScores]) -> list[CandidateScores]:
        if len(v) != 3:
            raise ValueError("scores must cover exactly 3 candidates")
        return v

    @model_validator(mode="after")
    def ranking_is_permutation(self) -> "AnnotationSubmission":
        if sorted(self.ranking) != [1, 2, 3]:
            raise ValueError("ranking not a permutation of 1..3")
        return self


class SubmissionAck(BaseModel):
    status: str
    annotator_id: str
    task_id: str
    replaced: bool
