"""
Base class for all matching agents.
"""

import logging
from abc import ABC, abstractmethod
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from matchmarket.agents.blackboard import Blackboard
from matchmarket.core.estimation import ConfidenceBand, DesignState, bands
from matchmarket.core.ranking import TopNRanking
from matchmarket.exceptions import SingularDesignError
from matchmarket.models.market import UNMATCHED
from matchmarket.models.run import Algorithm, RoundAction

logger = logging.getLogger(__name__)


@dataclass
class EnvironmentEntry:
    """GS pointer (0-based) and top-N ranking stored for one discovered environment."""

    pointer: int
    ranking: TopNRanking


@dataclass
class AgentMemory:
    """An agent's environment dictionary, estimator and current environment key.

    Keys are insertion-ordered integers private to the agent.
    """

    agent_id: int
    design: DesignState
    entries: Dict[int, EnvironmentEntry] = field(default_factory=OrderedDict)
    current_env: Optional[int] = None
    next_key: int = 0

    def find(self, ranking: TopNRanking) -> Optional[int]:
        for key, entry in self.entries.items():
            if entry.ranking == ranking:
                return key
        return None

    def store(self, ranking: TopNRanking) -> int:
        key = self.next_key
        self.entries[key] = EnvironmentEntry(pointer=0, ranking=ranking)
        self.next_key += 1
        return key

    def rankings(self) -> Dict[int, TopNRanking]:
        return {key: entry.ranking for key, entry in self.entries.items()}

    def reset(self) -> None:
        self.entries = OrderedDict()
        self.current_env = None
        self.next_key = 0
        self.design.reset()


def round_robin_arm(agent_id: int, t: int, n_arms: int) -> int:
    """Collision-free exploration arm ``(i + t) mod K`` with 1-based agent ids."""
    return (agent_id + 1 + t) % n_arms


class BaseMatchingAgent(ABC):
    """Base class for every agent algorithm.

    A round is split into ``recover_environment`` (writes the blackboard
    flag), ``propose`` (reads the final flags) and ``observe``.
    """

    algorithm: Algorithm

    def __init__(self, agent_id: int, n_agents: int, n_arms: int, dim: int, n_envs: int):
        self.agent_id = agent_id
        self.n_agents = n_agents
        self.n_arms = n_arms
        self.dim = dim
        self.n_envs = n_envs
        self.memory = AgentMemory(agent_id=agent_id, design=DesignState(dim=dim))
        self.last_action: Optional[RoundAction] = None
        self.last_band: Optional[ConfidenceBand] = None
        self.pointer_wraps = 0

    @abstractmethod
    def recover_environment(self, features: np.ndarray, t: int) -> bool:
        """Identify the active environment; True on success."""
        pass

    def compute_bands(self, features: np.ndarray, t: int) -> Optional[ConfidenceBand]:
        try:
            self.last_band = bands(self.memory.design, features, t)
        except SingularDesignError:
            self.last_band = None
        return self.last_band

    def propose(self, board: Blackboard, t: int) -> int:
        """Exploration arm inside a phase, otherwise the GS index of the current environment."""
        if board.in_exploration(t):
            self.last_action = RoundAction.EXPLORE
            return round_robin_arm(self.agent_id, t, self.n_arms)
        if self.memory.current_env is None:
            raise RuntimeError(
                f"Agent {self.agent_id} has no environment outside an exploration phase"
            )
        entry = self.memory.entries[self.memory.current_env]
        self.last_action = RoundAction.GS
        return entry.ranking[entry.pointer]

    def observe(self, arm: int, reward: float, x: Optional[np.ndarray], t: int) -> None:
        """Feed the estimator and advance the GS pointer on rejection."""
        exploring = self.last_action == RoundAction.EXPLORE
        if arm != UNMATCHED and x is not None:
            self.memory.design.update(x, reward, is_exploration=exploring)
        if self.last_action == RoundAction.GS and arm == UNMATCHED:
            self._advance_pointer(t)

    def _advance_pointer(self, t: int) -> None:
        entry = self.memory.entries[self.memory.current_env]
        if entry.pointer + 1 >= len(entry.ranking):
            self.pointer_wraps += 1
            logger.warning(
                f"Agent {self.agent_id} rejected by its whole ranking at round {t}; "
                f"restarting GS pointer"
            )
            entry.pointer = 0
        else:
            entry.pointer += 1

    def current_pointer(self) -> Optional[int]:
        if self.memory.current_env is None:
            return None
        return self.memory.entries[self.memory.current_env].pointer

    def current_ranking(self) -> Optional[TopNRanking]:
        if self.memory.current_env is None:
            return None
        return self.memory.entries[self.memory.current_env].ranking

    def __str__(self) -> str:
        return f"{self.algorithm.value} agent {self.agent_id}"

    def __repr__(self) -> str:
        return f"<{self.__class__.__name__}(agent_id={self.agent_id}, envs={len(self.memory.entries)})>"
