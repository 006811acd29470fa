"""
Tests for agents, the blackboard, the registry and the lockstep coordinator.
"""

import numpy as np
import pytest

from matchmarket.agents import (
    Blackboard,
    ETPGSAgent,
    IETPGSAgent,
    MarketCoordinator,
    OracleAgent,
    agent_registry,
)
from matchmarket.agents.base_agent import round_robin_arm
from matchmarket.core.ranking import TopNRanking
from matchmarket.exceptions import InconsistentVariantError, UnknownAlgorithmError
from matchmarket.models.market import UNMATCHED, generate_features, mean_matrix
from matchmarket.models.run import Algorithm, RoundAction

# one-dimensional features of environment 1 at a steady round of the delta example
STEADY_FEATURES = np.array([[1.0], [0.1], [0.9]])


def _trained(agent_class, n_obs=200):
    agent = agent_class(0, 2, 3, 1, 2)
    for _ in range(n_obs):
        agent.memory.design.update(np.array([1.0]), 1.0, is_exploration=True)
    return agent


def test_round_robin_is_collision_free():
    """Test exploration arms are distinct across agents in every round."""
    for k in range(2, 6):
        for n in range(1, k + 1):
            for t in range(1, 20):
                arms = [round_robin_arm(i, t, k) for i in range(n)]
                assert len(set(arms)) == n


def test_phase_lengths_double():
    """Test consecutive phases cover 1, 2, 4 rounds."""
    board = Blackboard()
    board.and_env(False)
    assert board.trigger_exploration(1)
    assert board.tau_end == 1
    assert board.trigger_exploration(2)
    assert board.tau_end == 3
    assert not board.trigger_exploration(3)
    assert board.trigger_exploration(4)
    assert board.tau_end == 7
    assert board.phase_starts == [1, 2, 4]


def test_no_trigger_when_all_recovered():
    """Test a true flag never starts a phase."""
    board = Blackboard()
    board.and_env(True)
    assert not board.trigger_exploration(1)
    assert not board.in_exploration(1)


def test_flags_and_reduce():
    """Test one failing agent clears the shared flag until reset."""
    board = Blackboard()
    board.and_env(True)
    board.and_env(False)
    board.and_env(True)
    assert board.env_flag is False
    board.reset()
    assert board.env_flag is True


def test_recovery_fails_before_invertible():
    """Test an agent without data cannot recover its environment."""
    agent = ETPGSAgent(0, 2, 3, 1, 2)
    assert not agent.recover_environment(STEADY_FEATURES, 5)
    assert agent.memory.current_env is None


def test_recovery_stores_and_finds():
    """Test a separated ranking is stored once and found again."""
    agent = _trained(ETPGSAgent, n_obs=20000)
    assert agent.recover_environment(STEADY_FEATURES, 100)
    key = agent.memory.current_env
    assert agent.current_ranking() == TopNRanking([0, 2])
    assert agent.recover_environment(STEADY_FEATURES, 101)
    assert agent.memory.current_env == key
    assert len(agent.memory.entries) == 1


def test_etpgs_needs_full_separation():
    """Test overlapping top arms block ETPGS recovery."""
    agent = _trained(ETPGSAgent)
    agent.memory.store(TopNRanking([0, 1]))
    agent.memory.store(TopNRanking([0, 2]))
    assert not agent.recover_environment(STEADY_FEATURES, 100)


def test_ietpgs_matches_partial_ranking():
    """Test IETP-GS identifies the environment from a separated inversion pair."""
    agent = _trained(IETPGSAgent)
    agent.memory.store(TopNRanking([0, 1]))
    key = agent.memory.store(TopNRanking([0, 2]))
    assert agent.recover_environment(STEADY_FEATURES, 100)
    assert agent.memory.current_env == key
    assert agent.partial_matches == 1


def test_ietpgs_needs_every_environment():
    """Test partial matching waits until E rankings are stored."""
    agent = _trained(IETPGSAgent)
    agent.memory.store(TopNRanking([0, 2]))
    assert not agent.recover_environment(STEADY_FEATURES, 100)


def test_propose_explores_inside_phase():
    """Test proposals follow round robin during exploration."""
    agent = ETPGSAgent(1, 2, 3, 1, 2)
    board = Blackboard(tau_end=10)
    assert agent.propose(board, 4) == round_robin_arm(1, 4, 3)
    assert agent.last_action == RoundAction.EXPLORE


def test_rejection_advances_and_wraps():
    """Test GS pointer moves on rejection and restarts after the last arm."""
    agent = ETPGSAgent(0, 2, 3, 1, 2)
    agent.memory.current_env = agent.memory.store(TopNRanking([2, 0]))
    board = Blackboard()
    assert agent.propose(board, 5) == 2
    agent.observe(UNMATCHED, 0.0, None, 5)
    assert agent.current_pointer() == 1
    assert agent.propose(board, 6) == 0
    agent.observe(UNMATCHED, 0.0, None, 6)
    assert agent.current_pointer() == 0
    assert agent.pointer_wraps == 1


def test_exploration_counts_only_explore_rounds():
    """Test matched GS rounds update V without counting as exploration."""
    agent = ETPGSAgent(0, 2, 3, 1, 2)
    agent.memory.current_env = agent.memory.store(TopNRanking([2, 0]))
    agent.propose(Blackboard(), 3)
    agent.observe(2, 0.9, np.array([0.9]), 3)
    assert agent.memory.design.exploration_count == 0
    assert agent.memory.design.V[0, 0] == pytest.approx(0.81)


def test_registry_lists_algorithms():
    """Test every algorithm is registered."""
    assert set(agent_registry.list_algorithms()) == {a.value for a in Algorithm}
    assert agent_registry.get_registry_statistics()["total_algorithms"] == 5


def test_registry_unknown_algorithm():
    """Test unknown algorithm names raise."""
    with pytest.raises(UnknownAlgorithmError):
        agent_registry.get_agent_class("ucb")


def test_registry_needs_cusum(uniform_instance):
    """Test cdetpgs agents cannot be created without a detector template."""
    with pytest.raises(ValueError):
        agent_registry.create_agents("cdetpgs", uniform_instance)


def test_coordinator_rejects_mixed_variants(uniform_instance):
    """Test agents of different algorithms cannot share a market."""
    agents = [
        ETPGSAgent(0, 2, 3, 2, 2),
        OracleAgent(1, 2, 3, 2, 2, instance=uniform_instance),
    ]
    with pytest.raises(InconsistentVariantError):
        MarketCoordinator(uniform_instance, agents)


def test_oracle_round_has_zero_gap(uniform_instance):
    """Test oracle agents land on the agent-optimal matching every round."""
    agents = agent_registry.create_agents("oracle", uniform_instance)
    coordinator = MarketCoordinator(uniform_instance, agents, noise_rng=np.random.default_rng(0))
    for t in range(1, 11):
        x = generate_features(uniform_instance, uniform_instance.env_at(t), t)
        result = coordinator.run_lockstep_round(t, x, mean_matrix(uniform_instance, x, t))
        expected = [0, 1] if uniform_instance.env_at(t) == 0 else [1, 0]
        assert result.outcome.matched.tolist() == expected


def test_all_agents_explore_together(uniform_instance):
    """Test a failed recovery sends every agent into the same phase."""
    agents = agent_registry.create_agents("etpgs", uniform_instance)
    coordinator = MarketCoordinator(uniform_instance, agents)
    x = generate_features(uniform_instance, 0, 1)
    result = coordinator.run_lockstep_round(1, x, mean_matrix(uniform_instance, x, 1))
    assert result.triggered
    assert result.actions == [RoundAction.EXPLORE, RoundAction.EXPLORE]
    assert result.proposals.tolist() == [2, 0]
    assert result.outcome.matched.tolist() == [2, 0]
