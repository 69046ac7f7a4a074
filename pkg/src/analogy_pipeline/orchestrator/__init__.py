"""Configuration, staged pipeline runs, and the command-line interface."""

from .config import PipelineConfig, RoleConfig
from .manifest import RunManifest
from .stages import Stage, run_pipeline, run_stage

__all__ = [
    "PipelineConfig",
    "RoleConfig",
    "RunManifest",
    "Stage",
    "run_pipeline",
    "run_stage",
]
