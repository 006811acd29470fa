"""
Pydantic schemas for run configuration, validation reports and summaries.
"""

from enum import Enum
from typing import Dict, List, Literal, Optional

from pydantic import BaseModel, Field

from matchmarket.models.run import Algorithm, TraceLevel

SUMMARY_SCHEMA_VERSION = "1.0"


class RunConfig(BaseModel):
    """Configuration of one simulation run (all replications)."""

    scenario: str = Field(..., description="Scenario JSON path or preset name")
    algorithm: Algorithm = Field(default=Algorithm.ETPGS, description="Agent algorithm")
    horizon: Optional[int] = Field(default=None, ge=1, description="Rounds T; scenario value when omitted")
    seed: int = Field(default=0, ge=0, description="Root seed")
    replications: int = Field(default=1, ge=1, description="Independent replications")
    trace_level: TraceLevel = Field(default=TraceLevel.ROUNDS, description="Trace granularity")
    skip_validation: bool = Field(default=False, description="Run scenarios that fail validation")
    preset_params: Dict[str, float] = Field(default_factory=dict, description="Preset parameters (delta, period_c)")
    cd_h: Optional[float] = Field(default=None, gt=0, description="CUSUM threshold override")
    cd_alpha: Optional[float] = Field(default=None, gt=0, le=1, description="Forced exploration rate override")
    cd_gamma: Optional[float] = Field(default=None, ge=1, description="Anticipated number of changes")
    cd_reference: Optional[Literal["frozen", "rolling"]] = Field(
        default=None, description="CUSUM baseline mode; settings value when omitted"
    )
    checkpoints: Optional[List[int]] = Field(default=None, description="Rounds at which regret is summarized")
    workers: Optional[int] = Field(default=None, ge=1, description="Replication pool size")

    model_config = {
        "json_schema_extra": {
            "example": {
                "scenario": "sec4-delta-example",
                "algorithm": "ietpgs",
                "horizon": 100000,
                "seed": 7,
                "replications": 20,
                "preset_params": {"delta": 0.05, "period_c": 10},
            }
        }
    }


class ValidationClause(str, Enum):
    """Scenario validation clauses."""
    DIMENSIONS = "dimensions"
    THETA_NORM = "theta_norm"
    DISTINCT_RANKINGS = "distinct_rankings"
    RANKING_STABILITY = "ranking_stability"
    SPECTRAL_FLOOR = "spectral_floor"
    DISTINCT_MEANS = "distinct_means"


class ClauseFailure(BaseModel):
    """One violated validation clause."""

    clause: ValidationClause = Field(..., description="Violated clause")
    agent: Optional[int] = Field(default=None, description="Agent concerned")
    environments: List[int] = Field(default_factory=list, description="Environments concerned")
    window: Optional[int] = Field(default=None, description="Stationary window concerned")
    detail: str = Field(..., description="Human readable explanation")


class ValidationReport(BaseModel):
    """Result of scenario validation."""

    scenario: str = Field(..., description="Scenario name")
    passed: bool = Field(..., description="True when every clause holds")
    failures: List[ClauseFailure] = Field(default_factory=list)
    spectral_floor: Optional[float] = Field(default=None, description="Computed lower bound on group eigenvalues")
    kappa: Optional[float] = Field(default=None, description="Declared spectral floor")
    min_gap: Optional[float] = Field(default=None, description="Smallest top-(N+1) mean gap over all base features")

    def clauses(self) -> List[str]:
        return sorted({failure.clause.value for failure in self.failures})


class CheckpointStats(BaseModel):
    """Regret statistics across replications at one round."""

    round: int
    mean: float
    q10: float
    q50: float
    q90: float
    per_agent_mean: List[float]


class LogFit(BaseModel):
    """Least-squares fit ``regret ~ a + b log t``."""

    a: float
    b: float
    r_squared: float
    n_points: int


class DetectionStats(BaseModel):
    """Change-detection outcome across replications."""

    true_change_points: List[int] = Field(default_factory=list)
    detections: List[List[int]] = Field(default_factory=list, description="Restart rounds per replication")
    mean_delay: Optional[float] = None
    missed: List[int] = Field(default_factory=list, description="Undetected changes per replication")
    false_alarms: List[int] = Field(default_factory=list, description="False alarms per replication")
    synchronized: bool = True


class RunSummary(BaseModel):
    """Summary written next to the trace."""

    schema_version: str = Field(default=SUMMARY_SCHEMA_VERSION)
    scenario: str
    config: RunConfig
    horizon: int
    checkpoints: List[CheckpointStats]
    log_fit: Optional[LogFit] = None
    final_regret_mean: float
    final_regret_per_replication: List[float]
    signed_regret_mean: float
    exploration_rounds_mean: float
    gs_rounds_mean: float
    violation_rounds_mean: float
    gs_round_budget: int
    exploration_phases_mean: float
    spectral_violations: int
    direction_violations_mean: float
    pointer_wraps: int
    detection: Optional[DetectionStats] = None
    bounds: Dict[str, float] = Field(default_factory=dict)
