"""
Exception hierarchy for the matching market simulator.
"""

from typing import Any, Optional


class MatchMarketError(Exception):
    """Base class for all simulator errors."""


class SingularDesignError(MatchMarketError, ValueError):
    """The design matrix is not invertible within tolerance."""

    def __init__(self, lambda_min: float, tolerance: float):
        self.lambda_min = lambda_min
        self.tolerance = tolerance
        super().__init__(
            f"Design matrix is singular: lambda_min={lambda_min:.3e} <= {tolerance:.1e}"
        )


class PointerOverflowError(MatchMarketError, RuntimeError):
    """An agent was rejected by every arm of its top-N ranking."""

    def __init__(self, agent: int, pointer: int, n: int):
        self.agent = agent
        self.pointer = pointer
        super().__init__(
            f"Agent {agent} proposal pointer {pointer + 1} exceeds ranking length {n}"
        )


class RankingDomainError(MatchMarketError, ValueError):
    """Two rankings are defined over different arm sets."""


class InconsistentVariantError(MatchMarketError, ValueError):
    """Agents in one lockstep round run different algorithms."""


class NoReferenceError(MatchMarketError, RuntimeError):
    """The CUSUM reference estimate is not available yet (warm-up)."""


class UnknownAlgorithmError(MatchMarketError, ValueError):
    """The requested algorithm is not registered."""


class ScenarioIOError(MatchMarketError, OSError):
    """A scenario, trace or summary file could not be read or written."""


class InvalidScenarioError(MatchMarketError, ValueError):
    """A scenario failed validation."""

    def __init__(self, message: str, report: Optional[Any] = None):
        self.report = report
        super().__init__(message)
