"""
Lockstep coordinator: advances all agents through one market round with
barrier ordering over the shared blackboard.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from matchmarket.agents.base_agent import BaseMatchingAgent
from matchmarket.agents.blackboard import Blackboard
from matchmarket.agents.cd_etpgs_agent import CDETPGSAgent
from matchmarket.exceptions import InconsistentVariantError
from matchmarket.models.market import UNMATCHED, MarketInstance, MatchOutcome, resolve_collisions
from matchmarket.models.run import Algorithm, RoundAction

logger = logging.getLogger(__name__)


@dataclass
class RoundResult:
    """Everything that happened in one lockstep round."""

    t: int
    local_t: int
    env: int
    proposals: np.ndarray
    outcome: MatchOutcome
    actions: List[RoundAction]
    env_flag: bool = True
    triggered: bool = False
    forced: bool = False
    detections: List[bool] = field(default_factory=list)
    restarted: bool = False


class MarketCoordinator:
    """Runs agents of a single algorithm in lockstep against one market."""

    def __init__(
        self,
        instance: MarketInstance,
        agents: Sequence[BaseMatchingAgent],
        noise_rng: Optional[np.random.Generator] = None,
        board: Optional[Blackboard] = None,
    ):
        """
        Initialize the coordinator.

        Args:
            instance: ground-truth market
            agents: one agent per market participant, ordered by id
            noise_rng: reward-noise stream; rewards are noise-free when None
            board: shared blackboard (a fresh one by default)
        """
        self.instance = instance
        self.agents = list(agents)
        self.noise_rng = noise_rng
        self.board = board if board is not None else Blackboard()
        self.algorithm = self._check_variant()
        self.restart_rounds: List[int] = []

    def _check_variant(self) -> Algorithm:
        variants = {agent.algorithm for agent in self.agents}
        if len(variants) != 1:
            raise InconsistentVariantError(
                f"Agents mix algorithms: {sorted(v.value for v in variants)}"
            )
        return variants.pop()

    def _resolve(self, proposals: np.ndarray, t: int, means: np.ndarray) -> MatchOutcome:
        env = self.instance.environments[self.instance.env_at(t)]
        return resolve_collisions(proposals, env, means, self.noise_rng, self.instance.noise)

    def run_lockstep_round(self, t: int, features: np.ndarray, means: np.ndarray) -> RoundResult:
        """
        Execute global round ``t``.

        Barrier order: blackboard reset, environment recovery of every agent
        (AND into the recovery flag), one shared exploration trigger,
        proposals, collision resolution, observations. Change-detection
        agents take forced-exploration rounds first and restart together
        when any of them raises the change flag.

        Args:
            t: global round
            features: ``(N, K, d)`` realized features
            means: ``(N, K)`` mean rewards

        Returns:
            RoundResult
        """
        self._check_variant()
        self.board.reset()
        if self.algorithm == Algorithm.CDETPGS:
            forced = {agent.is_forced(t) for agent in self.agents}  # type: ignore[attr-defined]
            if len(forced) != 1:
                raise RuntimeError(f"Forced-exploration schedule out of sync at round {t}")
            if forced.pop():
                return self._forced_round(t, features, means)
            local_t = self.agents[0].local_time(t)  # type: ignore[attr-defined]
        else:
            local_t = t

        for agent in self.agents:
            ok = agent.recover_environment(features[agent.agent_id], local_t)
            self.board.and_env(ok)
        triggered = self.board.trigger_exploration(local_t)
        proposals = np.array([agent.propose(self.board, local_t) for agent in self.agents], dtype=int)
        outcome = self._resolve(proposals, t, means)
        for agent in self.agents:
            arm = int(outcome.matched[agent.agent_id])
            x = features[agent.agent_id, arm] if arm != UNMATCHED else None
            agent.observe(arm, float(outcome.rewards[agent.agent_id]), x, local_t)
        return RoundResult(
            t=t,
            local_t=local_t,
            env=self.instance.env_at(t),
            proposals=proposals,
            outcome=outcome,
            actions=[agent.last_action for agent in self.agents],
            env_flag=self.board.env_flag,
            triggered=triggered,
        )

    def _forced_round(self, t: int, features: np.ndarray, means: np.ndarray) -> RoundResult:
        agents: List[CDETPGSAgent] = self.agents  # type: ignore[assignment]
        local_t = agents[0].local_time(t)
        proposals = np.array([agent.propose_forced(t) for agent in agents], dtype=int)
        outcome = self._resolve(proposals, t, means)
        detections = []
        for agent in agents:
            arm = int(outcome.matched[agent.agent_id])
            x = features[agent.agent_id, arm] if arm != UNMATCHED else None
            detected = agent.observe_forced(arm, float(outcome.rewards[agent.agent_id]), x)
            detections.append(detected)
            self.board.and_cd(not detected)
        restarted = not self.board.cd_flag
        if restarted:
            for agent in agents:
                agent.restart(t)
            self.board.restart()
            self.restart_rounds.append(t)
            logger.info(f"Change detected at round {t}; all agents restarted")
        return RoundResult(
            t=t,
            local_t=local_t,
            env=self.instance.env_at(t),
            proposals=proposals,
            outcome=outcome,
            actions=[RoundAction.FORCED] * len(agents),
            forced=True,
            detections=detections,
            restarted=restarted,
        )
