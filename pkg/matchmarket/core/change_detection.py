"""
Two-sided CUSUM over forced-exploration reward residuals.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from matchmarket.core.estimation import DesignState, estimate_theta
from matchmarket.exceptions import NoReferenceError

logger = logging.getLogger(__name__)


class ReferenceMode(str, Enum):
    """How the residual baseline is obtained."""
    FROZEN = "frozen"
    ROLLING = "rolling"


@dataclass
class CusumState:
    """Per-agent detector state for one stationary window."""

    h: float
    alpha: float
    drift: float = 0.1
    warmup: int = 1
    mode: ReferenceMode = ReferenceMode.FROZEN
    s_plus: float = 0.0
    s_minus: float = 0.0
    reference: Optional[np.ndarray] = None
    forced_seen: int = 0
    warmup_design: Optional[DesignState] = field(default=None, repr=False)

    @property
    def statistic(self) -> float:
        return max(self.s_plus, self.s_minus)

    def is_over_threshold(self) -> bool:
        return self.statistic > self.h

    def fresh(self) -> "CusumState":
        """Same tuning, cleared statistics and baseline."""
        return CusumState(
            h=self.h, alpha=self.alpha, drift=self.drift, warmup=self.warmup, mode=self.mode
        )


def is_forced_exploration(t: int, alpha: float) -> bool:
    """Deterministic forced schedule: true iff ``floor(alpha t) > floor(alpha (t-1))``."""
    if alpha <= 0.0:
        return False
    return math.floor(alpha * t) > math.floor(alpha * (t - 1))


def update_cusum(state: CusumState, r: float, x: np.ndarray) -> CusumState:
    """
    Update both statistics with residual ``z = r - <theta_ref, x>``.

    Raises:
        NoReferenceError: while no baseline estimate is available
    """
    if state.reference is None:
        raise NoReferenceError("CUSUM reference not available during warm-up")
    z = float(r - np.dot(state.reference, x))
    state.s_plus = max(0.0, state.s_plus + z - state.drift)
    state.s_minus = max(0.0, state.s_minus - z - state.drift)
    return state


def feed_forced_observation(
    state: CusumState,
    r: float,
    x: np.ndarray,
    window_estimate: Optional[np.ndarray] = None,
) -> bool:
    """
    Route one forced-exploration observation through warm-up and the CUSUM.

    In frozen mode the first ``warmup`` observations are warm-up; at the end
    of warm-up the baseline is fixed once to ``window_estimate`` (the
    window's estimate before this observation), or to the least-squares fit
    of the warm-up observations when no window estimate is given. In rolling
    mode the baseline is refreshed to ``window_estimate`` at every forced
    round once ``warmup`` forced rounds have passed.

    Returns:
        True when the statistic is over the threshold after this update
    """
    state.forced_seen += 1
    if state.mode == ReferenceMode.FROZEN:
        if state.reference is None:
            if state.warmup_design is None:
                state.warmup_design = DesignState(dim=np.asarray(x).size)
            state.warmup_design.update(x, r, is_exploration=True)
            if state.forced_seen >= state.warmup:
                if window_estimate is not None:
                    state.reference = np.array(window_estimate, dtype=float)
                elif state.warmup_design.is_invertible():
                    state.reference = estimate_theta(state.warmup_design)
                if state.reference is not None:
                    logger.debug(f"CUSUM baseline frozen after {state.forced_seen} forced rounds")
            return False
    else:
        if state.forced_seen <= state.warmup or window_estimate is None:
            return False
        state.reference = np.asarray(window_estimate, dtype=float)
    try:
        update_cusum(state, r, x)
    except NoReferenceError:
        return False
    return state.is_over_threshold()


def _log_term(n_agents: int, horizon: int, n_changes: float) -> float:
    gamma = max(float(n_changes), 1.0)
    return max(math.log(n_agents * horizon / gamma), 1.0)


def default_threshold(n_agents: int, horizon: int, n_changes: float, scale: float = 4.0) -> float:
    """``h = c1 * log(N T / gamma)``."""
    return scale * _log_term(n_agents, horizon, n_changes)


def default_rate(n_agents: int, horizon: int, n_changes: float, scale: float = 1.0) -> float:
    """``alpha = c2 * sqrt(gamma / T * log(N T / gamma))``, capped at 1."""
    gamma = max(float(n_changes), 1.0)
    rate = scale * math.sqrt(gamma / horizon * _log_term(n_agents, horizon, n_changes))
    return min(1.0, rate)
