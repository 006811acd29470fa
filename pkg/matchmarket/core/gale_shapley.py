"""
Repeated-proposal Gale-Shapley dynamics and stable-matching oracles.
"""

import itertools
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from matchmarket.core.ranking import TopNRanking
from matchmarket.exceptions import PointerOverflowError
from matchmarket.models.market import (
    UNMATCHED,
    EnvironmentSpec,
    MatchOutcome,
    NoiseKind,
    resolve_collisions,
)

AgentRankings = Sequence[Sequence[int]]


@dataclass
class ProposalState:
    """Per-agent proposal pointers (0-based) and committed flags."""

    pointers: np.ndarray
    committed: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        self.pointers = np.asarray(self.pointers, dtype=int)
        if self.committed is None:
            self.committed = np.zeros(self.pointers.size, dtype=bool)

    @classmethod
    def fresh(cls, n_agents: int) -> "ProposalState":
        return cls(pointers=np.zeros(n_agents, dtype=int))

    def copy(self) -> "ProposalState":
        return ProposalState(self.pointers.copy(), self.committed.copy())


@dataclass
class Matching:
    """Agent to arm assignment, ``UNMATCHED`` for unassigned agents."""

    assignment: np.ndarray

    def __post_init__(self) -> None:
        self.assignment = np.asarray(self.assignment, dtype=int)
        arms = self.assignment[self.assignment != UNMATCHED]
        if len(set(arms.tolist())) != arms.size:
            raise ValueError(f"Matching is not injective: {self.assignment.tolist()}")

    def arm_of(self, agent: int) -> int:
        return int(self.assignment[agent])

    def holder_of(self) -> Dict[int, int]:
        return {int(arm): agent for agent, arm in enumerate(self.assignment) if arm != UNMATCHED}

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Matching):
            return NotImplemented
        return np.array_equal(self.assignment, other.assignment)

    def as_dict(self) -> Dict[int, Optional[int]]:
        return {
            agent: (None if arm == UNMATCHED else int(arm))
            for agent, arm in enumerate(self.assignment)
        }


def gs_round(
    state: ProposalState,
    rankings: Sequence[TopNRanking],
    env: EnvironmentSpec,
    means: Optional[np.ndarray] = None,
    rng: Optional[np.random.Generator] = None,
    noise: NoiseKind = NoiseKind.GAUSSIAN,
) -> Tuple[MatchOutcome, ProposalState]:
    """
    Play one round of GS proposals.

    Every agent proposes ``rankings[i][s_i]``; arms keep their best current
    proposer (arms do not remember earlier rounds). Rejected agents advance
    their pointer by one.

    Returns:
        The round's outcome and the updated (new) proposal state

    Raises:
        PointerOverflowError: if a rejected agent has no arm left to propose to
    """
    proposals = np.array(
        [ranking[pointer] for ranking, pointer in zip(rankings, state.pointers)], dtype=int
    )
    outcome = resolve_collisions(proposals, env, means, rng, noise)
    new_state = state.copy()
    for agent, arm in enumerate(outcome.matched):
        if arm == UNMATCHED:
            if new_state.pointers[agent] + 1 >= len(rankings[agent]):
                raise PointerOverflowError(agent, int(new_state.pointers[agent]) + 1, len(rankings[agent]))
            new_state.pointers[agent] += 1
            new_state.committed[agent] = False
        else:
            new_state.committed[agent] = True
    return outcome, new_state


def agent_optimal_matching(agent_rankings: AgentRankings, env: EnvironmentSpec) -> Matching:
    """
    Agent-proposing deferred acceptance with holds.

    Args:
        agent_rankings: per-agent arm lists, best first (agents never propose
            beyond the end of their list)
        env: environment whose arm preferences decide collisions

    Returns:
        The agent-optimal stable matching
    """
    n_agents = len(agent_rankings)
    next_choice = [0] * n_agents
    held: Dict[int, int] = {}
    free = list(range(n_agents))
    while free:
        agent = free.pop()
        prefs = agent_rankings[agent]
        if next_choice[agent] >= len(prefs):
            continue
        arm = int(prefs[next_choice[agent]])
        next_choice[agent] += 1
        current = held.get(arm)
        if current is None:
            held[arm] = agent
        elif env.arm_rank[arm, agent] < env.arm_rank[arm, current]:
            held[arm] = agent
            free.append(current)
        else:
            free.append(agent)
    assignment = np.full(n_agents, UNMATCHED, dtype=int)
    for arm, agent in held.items():
        assignment[agent] = arm
    return Matching(assignment)


def _position(prefs: Sequence[int], arm: int) -> int:
    prefs = list(prefs)
    return prefs.index(arm) if arm in prefs else len(prefs)


def is_stable(m: Matching, agent_rankings: AgentRankings, env: EnvironmentSpec) -> bool:
    """True iff no agent-arm pair would both rather be matched to each other."""
    holder = m.holder_of()
    for agent, prefs in enumerate(agent_rankings):
        own = m.arm_of(agent)
        own_pos = _position(prefs, own) if own != UNMATCHED else len(prefs)
        for arm in list(prefs)[:own_pos]:
            arm = int(arm)
            current = holder.get(arm)
            if current is None or env.arm_rank[arm, agent] < env.arm_rank[arm, current]:
                return False
    return True


def brute_force_agent_optimal(agent_rankings: AgentRankings, env: EnvironmentSpec) -> Matching:
    """
    Exhaustive oracle: the stable matching every agent weakly prefers.

    Enumerates every injective agent-to-arm map, so keep ``N <= 5`` and
    ``K <= 6``.
    """
    n_agents = len(agent_rankings)
    n_arms = env.arm_prefs.shape[0]
    stable: List[Matching] = []
    for arms in itertools.permutations(range(n_arms), n_agents):
        candidate = Matching(np.array(arms, dtype=int))
        if is_stable(candidate, agent_rankings, env):
            stable.append(candidate)
    positions = [
        [_position(agent_rankings[i], m.arm_of(i)) for i in range(n_agents)] for m in stable
    ]
    for m, pos in zip(stable, positions):
        if all(all(p <= other[i] for i, p in enumerate(pos)) for other in positions):
            return m
    raise RuntimeError("No agent-optimal stable matching found")


def rounds_to_converge(
    rankings: Sequence[TopNRanking], env: EnvironmentSpec, max_rounds: int
) -> Tuple[Matching, int]:
    """Iterate noise-free ``gs_round`` until no agent is rejected.

    Returns:
        The fixed-point matching and the number of rounds played
    """
    state = ProposalState.fresh(len(rankings))
    for played in range(1, max_rounds + 1):
        outcome, state = gs_round(state, rankings, env)
        if np.all(outcome.matched != UNMATCHED):
            return Matching(outcome.matched), played
    raise RuntimeError(f"GS did not converge within {max_rounds} rounds")
