"""
Regret accounting against the agent-optimal stable matching of the active
environment.
"""

from typing import Dict, Tuple

import numpy as np

from matchmarket.core.gale_shapley import Matching, agent_optimal_matching
from matchmarket.models.market import UNMATCHED, MarketInstance, true_rankings


class RegretLedger:
    """Per-round, per-agent regret of one replication.

    Keeps the signed increment ``mu_{i,m*}(t) - mu_{i,m_i(t)}(t)`` and, separately,
    its positive part. Optimal matchings are cached per (environment, window);
    ``mu_max`` follows the mean of each agent's optimal stable arm.
    """

    def __init__(self, instance: MarketInstance):
        self.instance = instance
        horizon, n_agents = instance.horizon, instance.n_agents
        self.signed = np.zeros((horizon, n_agents))
        self.positive = np.zeros((horizon, n_agents))
        self.mu_max = np.full(n_agents, -np.inf)
        self.delta_max = np.zeros(n_agents)
        self._optimal: Dict[Tuple[int, int], Matching] = {}
        self._rankings: Dict[Tuple[int, int], np.ndarray] = {}

    def rankings(self, env: int, window: int) -> np.ndarray:
        key = (env, window)
        if key not in self._rankings:
            self._rankings[key] = true_rankings(self.instance, env, window)
        return self._rankings[key]

    def optimal(self, env: int, window: int) -> Matching:
        key = (env, window)
        if key not in self._optimal:
            spec = self.instance.environments[env]
            self._optimal[key] = agent_optimal_matching(self.rankings(env, window).tolist(), spec)
        return self._optimal[key]

    def optimal_position(self, env: int, window: int, agent: int) -> int:
        """Position of the agent's optimal arm in its true ranking."""
        arm = self.optimal(env, window).arm_of(agent)
        return int(np.nonzero(self.rankings(env, window)[agent] == arm)[0][0])

    def record(self, t: int, means: np.ndarray, matched: np.ndarray) -> np.ndarray:
        """
        Book round ``t``.

        Args:
            t: round
            means: ``(N, K)`` mean rewards of the round
            matched: matched arm per agent

        Returns:
            The signed increments of the round
        """
        env, window = self.instance.env_at(t), self.instance.window_at(t)
        optimal = self.optimal(env, window).assignment
        agents = np.arange(self.instance.n_agents)
        best = np.where(optimal != UNMATCHED, means[agents, np.maximum(optimal, 0)], 0.0)
        got = np.where(matched != UNMATCHED, means[agents, np.maximum(matched, 0)], 0.0)
        signed = best - got
        self.signed[t - 1] = signed
        self.positive[t - 1] = np.maximum(signed, 0.0)
        self.mu_max = np.maximum(self.mu_max, best)
        self.delta_max = np.maximum(self.delta_max, best - np.minimum(means.min(axis=1), 0.0))
        return signed

    def cumulative(self) -> np.ndarray:
        """Cumulative positive-part regret, shape ``(T, N)``; non-decreasing."""
        return np.cumsum(self.positive, axis=0)

    def total(self) -> np.ndarray:
        return self.positive.sum(axis=0)

    def signed_total(self) -> np.ndarray:
        return self.signed.sum(axis=0)
