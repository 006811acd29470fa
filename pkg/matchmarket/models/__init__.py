"""
Market ground truth, scenario validation and built-in presets.
"""

from matchmarket.models.market import (
    UNMATCHED,
    EnvironmentSpec,
    MarketInstance,
    MatchOutcome,
    NoiseKind,
    ScheduleKind,
)
from matchmarket.models.run import Algorithm, RoundAction, RoundClass, TraceLevel

__all__ = [
    "UNMATCHED",
    "EnvironmentSpec",
    "MarketInstance",
    "MatchOutcome",
    "NoiseKind",
    "ScheduleKind",
    "Algorithm",
    "RoundAction",
    "RoundClass",
    "TraceLevel",
]
