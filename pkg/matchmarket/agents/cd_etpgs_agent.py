"""
Change-detection aided IETP-GS agent for piecewise-stationary markets.
"""

import logging
from typing import Optional

import numpy as np

from matchmarket.agents.base_agent import round_robin_arm
from matchmarket.agents.ietpgs_agent import IETPGSAgent
from matchmarket.core.change_detection import (
    CusumState,
    feed_forced_observation,
    is_forced_exploration,
)
from matchmarket.core.estimation import estimate_theta
from matchmarket.models.market import UNMATCHED
from matchmarket.models.run import Algorithm, RoundAction

logger = logging.getLogger(__name__)


class CDETPGSAgent(IETPGSAgent):
    """IETP-GS on local time plus a per-agent CUSUM over forced rounds."""

    algorithm = Algorithm.CDETPGS

    def __init__(self, *args, cusum: CusumState, **kwargs):
        super().__init__(*args, **kwargs)
        self.cusum = cusum
        self.window_start = 0
        self.detected = False

    def local_time(self, t_global: int) -> int:
        return t_global - self.window_start

    def is_forced(self, t_global: int) -> bool:
        return is_forced_exploration(self.local_time(t_global), self.cusum.alpha)

    def propose_forced(self, t_global: int) -> int:
        self.last_action = RoundAction.FORCED
        return round_robin_arm(self.agent_id, self.local_time(t_global), self.n_arms)

    def observe_forced(self, arm: int, reward: float, x: Optional[np.ndarray]) -> bool:
        """Update estimator and CUSUM from a forced round; True when a change is detected."""
        self.detected = False
        if arm == UNMATCHED or x is None:
            return False
        estimate = None
        if self.memory.design.is_invertible():
            estimate = estimate_theta(self.memory.design)
        self.detected = feed_forced_observation(self.cusum, reward, x, estimate)
        self.memory.design.update(x, reward, is_exploration=False)
        return self.detected

    def restart(self, t_global: int) -> None:
        """Wipe environments, estimator and detector; local time restarts at ``t_global``."""
        logger.debug(f"Agent {self.agent_id} restarting at round {t_global}")
        self.memory.reset()
        self.cusum = self.cusum.fresh()
        self.window_start = t_global
        self.last_band = None
