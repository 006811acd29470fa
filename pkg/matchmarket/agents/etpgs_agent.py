"""
Environment-triggered phased Gale-Shapley agent.
"""

import logging
from typing import Optional

import numpy as np

from matchmarket.agents.base_agent import BaseMatchingAgent
from matchmarket.core.ranking import TopNRanking, try_separate_top_n
from matchmarket.models.run import Algorithm

logger = logging.getLogger(__name__)


class ETPGSAgent(BaseMatchingAgent):
    """Recovers the environment only through full top-N separation."""

    algorithm = Algorithm.ETPGS

    def recover_environment(self, features: np.ndarray, t: int) -> bool:
        """
        Separate the top N arms and look the ranking up in memory.

        Args:
            features: ``(K, d)`` feature vectors seen by this agent
            t: round (local round after a restart)

        Returns:
            True when the environment key for this round is known
        """
        self.memory.current_env = None
        sigma = self._separate(features, t)
        if sigma is None:
            return False
        self.memory.current_env = self._lookup_or_store(sigma, t)
        return True

    def _separate(self, features: np.ndarray, t: int) -> Optional[TopNRanking]:
        band = self.compute_bands(features, t)
        if band is None:
            return None
        return try_separate_top_n(band, self.n_agents)

    def _lookup_or_store(self, sigma: TopNRanking, t: int) -> int:
        key = self.memory.find(sigma)
        if key is not None:
            return key
        key = self.memory.store(sigma)
        logger.debug(f"Agent {self.agent_id} stored environment {key} {sigma.arms} at round {t}")
        if len(self.memory.entries) > self.n_envs:
            logger.warning(
                f"Agent {self.agent_id} holds {len(self.memory.entries)} rankings "
                f"for {self.n_envs} environments"
            )
        return key
