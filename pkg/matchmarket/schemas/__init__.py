"""
Pydantic schemas for scenario files, run configuration and outputs.
"""

from .run import (
    CheckpointStats,
    ClauseFailure,
    DetectionStats,
    LogFit,
    RunConfig,
    RunSummary,
    ValidationClause,
    ValidationReport,
)
from .scenario import ChangePointSchema, EnvironmentSchema, ScenarioSchema, ScheduleSchema

__all__ = [
    "CheckpointStats",
    "ClauseFailure",
    "DetectionStats",
    "LogFit",
    "RunConfig",
    "RunSummary",
    "ValidationClause",
    "ValidationReport",
    "ChangePointSchema",
    "EnvironmentSchema",
    "ScenarioSchema",
    "ScheduleSchema",
]
