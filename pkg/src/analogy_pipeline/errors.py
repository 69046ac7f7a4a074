"""Exception hierarchy shared across pipeline modules."""

from __future__ import annotations


class AnalogyPipelineError(Exception):
    """Base class for all pipeline-specific failures."""


class ConfigError(AnalogyPipelineError):
    """Invalid or inconsistent pipeline configuration."""


class DependencyError(AnalogyPipelineError):
    """A stage was started without its required upstream artifact."""


class SchemaError(AnalogyPipelineError):
    """An input file does not match its expected schema."""

    def __init__(self, message: str, field: str | None = None, row: int | None = None):
        super().__init__(message)
        self.field = field
        self.row = row


class RelationParseError(AnalogyPipelineError):
    """A relation string could not be parsed into a pair of triplets."""


class ProviderError(AnalogyPipelineError):
    """A model provider failed (transport, bad batch, exhausted retries)."""

    def __init__(self, message: str, transient: bool = False):
        super().__init__(message)
        self.transient = transient


class ResponseParseError(AnalogyPipelineError):
    """A model response could not be parsed into the declared output fields."""

    def __init__(self, message: str, raw: str = ""):
        super().__init__(message)
        self.raw = raw


class GenerationError(AnalogyPipelineError):
    """Candidate/sub-concept/explanation generation failed after retries."""

    def __init__(self, message: str, raw: str = ""):
        super().__init__(message)
        self.raw = raw


class RerankError(AnalogyPipelineError):
    """The reranker returned names outside the shortlist after a corrective re-prompt."""

    def __init__(self, message: str, raw: str = ""):
        super().__init__(message)
        self.raw = raw


class MatchingError(AnalogyPipelineError):
    """Sub-concept matching produced a non-bijective pairing after re-prompting."""

    def __init__(self, message: str, transcript: str = ""):
        super().__init__(message)
        self.transcript = transcript


class JudgeError(AnalogyPipelineError):
    """The judge response stayed unparseable or out of range after re-prompting."""

    def __init__(self, message: str, transcript: str = ""):
        super().__init__(message)
        self.transcript = transcript


class EvaluationError(AnalogyPipelineError):
    """Metric inputs are inconsistent (e.g. predicted and gold item sets differ)."""


class UndefinedStatisticError(AnalogyPipelineError):
    """A statistic is undefined on the given data (zero vector, no co-rated items, ...)."""
