"""
Improved environment-triggered phased Gale-Shapley agent.
"""

import numpy as np

from matchmarket.agents.etpgs_agent import ETPGSAgent
from matchmarket.core.ranking import build_partial_rank, match_environment, top_positions
from matchmarket.models.run import Algorithm


class IETPGSAgent(ETPGSAgent):
    """Falls back to partial-rank matching once every environment is stored.

    Rankings enter memory only from full separations.
    """

    algorithm = Algorithm.IETPGS

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self.partial_matches = 0

    def recover_environment(self, features: np.ndarray, t: int) -> bool:
        if super().recover_environment(features, t):
            return True
        band = self.last_band
        if band is None or len(self.memory.entries) < self.n_envs:
            return False
        pr = build_partial_rank(band, restrict_to=top_positions(band, self.n_agents))
        key = match_environment(pr, self.memory.rankings(), self.n_envs)
        if key is None:
            return False
        self.memory.current_env = key
        self.partial_matches += 1
        return True
