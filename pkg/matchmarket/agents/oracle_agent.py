"""
Debug agents with ground-truth access.
"""

from typing import Dict, Tuple

import numpy as np

from matchmarket.agents.base_agent import BaseMatchingAgent
from matchmarket.agents.blackboard import Blackboard
from matchmarket.agents.etpgs_agent import ETPGSAgent
from matchmarket.core.gale_shapley import agent_optimal_matching
from matchmarket.core.ranking import TopNRanking
from matchmarket.models.market import MarketInstance, true_rankings
from matchmarket.models.run import Algorithm, RoundAction


class OracleAgent(BaseMatchingAgent):
    """Plays its agent-optimal stable arm of the active environment every round."""

    algorithm = Algorithm.ORACLE

    def __init__(self, *args, instance: MarketInstance, **kwargs):
        super().__init__(*args, **kwargs)
        self.instance = instance
        self._cache: Dict[Tuple[int, int], np.ndarray] = {}
        self._arm = 0

    def recover_environment(self, features: np.ndarray, t: int) -> bool:
        key = (self.instance.env_at(t), self.instance.window_at(t))
        if key not in self._cache:
            rankings = true_rankings(self.instance, key[0], key[1])
            env = self.instance.environments[key[0]]
            self._cache[key] = agent_optimal_matching(rankings.tolist(), env).assignment
        self._arm = int(self._cache[key][self.agent_id])
        return True

    def propose(self, board: Blackboard, t: int) -> int:
        self.last_action = RoundAction.GS
        return self._arm

    def observe(self, arm: int, reward: float, x, t: int) -> None:
        pass


class RankingOracleAgent(ETPGSAgent):
    """ETPGS memory and GS logic fed with the true top-N ranking, no estimation."""

    algorithm = Algorithm.RANKING_ORACLE

    def __init__(self, *args, instance: MarketInstance, **kwargs):
        super().__init__(*args, **kwargs)
        self.instance = instance

    def recover_environment(self, features: np.ndarray, t: int) -> bool:
        order = true_rankings(self.instance, self.instance.env_at(t), self.instance.window_at(t))
        sigma = TopNRanking(order[self.agent_id, : self.n_agents])
        self.memory.current_env = self._lookup_or_store(sigma, t)
        return True

    def observe(self, arm: int, reward: float, x, t: int) -> None:
        super().observe(arm, reward, None, t)
