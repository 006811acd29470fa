"""
Analytic quantities from the regret analysis: exploration requirements,
gap statistics over the materialized schedule and regret bounds.
"""

import logging
import math
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np

from matchmarket.core.gale_shapley import agent_optimal_matching
from matchmarket.exceptions import InvalidScenarioError
from matchmarket.models.market import (
    UNMATCHED,
    MarketInstance,
    min_gap,
    min_rank_gap,
    steady_min_rank_gap,
    true_rankings,
)

logger = logging.getLogger(__name__)

CONFIDENCE_BAD_ROUNDS = math.pi ** 2 / 3.0


def exploration_requirement(dim: int, feature_bound: float, kappa: float, gap: float, horizon: int) -> float:
    """``tau(gap) = 64 d^2 L^2 log T / (kappa gap^2)``."""
    if gap <= 0 or kappa <= 0:
        return math.inf
    return 64.0 * dim ** 2 * feature_bound ** 2 * math.log(max(horizon, 2)) / (kappa * gap ** 2)


def phase_overhead(x: float) -> float:
    """``g(x) = 2x + log(2x)``: exploration spent by doubling phases to reach ``x``."""
    if x <= 0:
        return 0.0
    return 2.0 * x + math.log(2.0 * x)


def _round_combos(instance: MarketInstance) -> Dict[Tuple[int, int, int], int]:
    """Representative round for every (environment, cycle variant, window) on the schedule."""
    rounds = np.arange(1, instance.horizon + 1)
    windows = np.searchsorted(np.asarray(instance.change_points, dtype=int), rounds, side="right")
    lengths = np.array([env.cycle_length for env in instance.environments])
    variants = instance.occurrences % lengths[instance.schedule]
    combos: Dict[Tuple[int, int, int], int] = {}
    for t, key in zip(rounds, zip(instance.schedule, variants, windows)):
        key = tuple(int(k) for k in key)
        if key not in combos:
            combos[key] = int(t)
    return combos


def uniform_min_gap(instance: MarketInstance) -> float:
    """Smallest top-(N+1) gap of any agent over every scheduled round (base features)."""
    gaps = [
        min_gap(instance, agent, t)
        for t in _round_combos(instance).values()
        for agent in range(instance.n_agents)
    ]
    return min(gaps, default=math.inf)


def uniform_min_rank_gap(instance: MarketInstance) -> float:
    """Smallest rank-identification gap of any agent over every scheduled round.

    Raises:
        InvalidScenarioError: if two environments share an agent's top-N ranking
    """
    gaps = [
        min_rank_gap(instance, agent, t)
        for t in _round_combos(instance).values()
        for agent in range(instance.n_agents)
    ]
    return min(gaps, default=math.inf)


def uniform_steady_min_rank_gap(instance: MarketInstance) -> float:
    """Smallest steady rank gap of any agent over every scheduled (environment, window).

    Raises:
        InvalidScenarioError: if two environments share an agent's top-N ranking
    """
    pairs = sorted({(env, window) for env, _, window in _round_combos(instance)})
    gaps = [
        steady_min_rank_gap(instance, agent, env, window)
        for env, window in pairs
        for agent in range(instance.n_agents)
    ]
    return min(gaps, default=math.inf)


def _agent_gap_cycle(instance: MarketInstance, env: int, window: int, agent: int) -> np.ndarray:
    spec = instance.environments[env]
    theta = instance.theta_windows[window][agent]
    top = min(instance.n_agents + 1, instance.n_arms)
    gaps = []
    for variant in spec.feature_cycle:
        mu = np.sort(variant[agent] @ theta)[::-1][:top]
        gaps.append(float(np.min(mu[:-1] - mu[1:])) if mu.size > 1 else math.inf)
    return np.array(gaps)


def reward_gap_period(instance: MarketInstance, env: int, gap: float) -> float:
    """
    Largest number of further occurrences of ``env`` any agent may wait,
    from any occurrence, before one with a top gap of at least ``gap``.

    Returns:
        0 when every occurrence has the gap, ``inf`` when none does
    """
    worst = 0
    for window in range(instance.n_windows):
        for agent in range(instance.n_agents):
            good = _agent_gap_cycle(instance, env, window, agent) >= gap
            if not good.any():
                return math.inf
            cycle = good.size
            for start in range(cycle):
                wait = next(k for k in range(cycle) if good[(start + k) % cycle])
                worst = max(worst, wait)
    return float(worst)


def max_mean(instance: MarketInstance, agent: int) -> float:
    """
    ``mu_{i,max}``: the largest mean of the agent's arm in the agent-optimal
    stable matching, over every environment, cycle variant and window.

    An agent left unmatched by the optimal matching contributes 0.
    """
    best = -math.inf
    for env_id, env in enumerate(instance.environments):
        for window, theta in enumerate(instance.theta_windows):
            rankings = true_rankings(instance, env_id, window).tolist()
            arm = agent_optimal_matching(rankings, env).arm_of(agent)
            if arm == UNMATCHED:
                best = max(best, 0.0)
                continue
            best = max(best, float(np.max(env.feature_cycle[:, agent, arm] @ theta[agent])))
    return best


def _constant_terms(instance: MarketInstance) -> float:
    return instance.n_envs * instance.n_agents ** 2 + instance.n_agents * instance.dim * CONFIDENCE_BAD_ROUNDS


def etpgs_regret_bound(instance: MarketInstance, agent: int, gap: Optional[float] = None) -> float:
    """``(tau(gap_min) + E N^2 + N d pi^2/3) mu_{i,max}``."""
    gap = uniform_min_gap(instance) if gap is None else gap
    tau = exploration_requirement(
        instance.dim, instance.feature_bound, instance.kappa or 0.0, gap, instance.horizon
    )
    return (tau + _constant_terms(instance)) * max_mean(instance, agent)


def ietpgs_regret_bound(
    instance: MarketInstance,
    agent: int,
    gap_grid: Optional[Iterable[float]] = None,
    rank_gap: Optional[float] = None,
) -> float:
    """
    ``min_gap (tau(gap) + sum_e P_e(gap)) + g(tau(rank_gap)) + E N^2 + N d pi^2/3``,
    scaled by ``mu_{i,max}``.

    The default grid holds every per-variant top gap that occurs in the market;
    the default rank gap is the steady one, read on each environment's widest
    occurrence.
    """
    kappa = instance.kappa or 0.0
    d, L, T = instance.dim, instance.feature_bound, instance.horizon
    if gap_grid is None:
        grid: List[float] = sorted({
            float(g)
            for env in range(instance.n_envs)
            for window in range(instance.n_windows)
            for a in range(instance.n_agents)
            for g in _agent_gap_cycle(instance, env, window, a)
            if g > 0
        })
    else:
        grid = [g for g in gap_grid if g > 0]
    discovery = min(
        (
            exploration_requirement(d, L, kappa, g, T)
            + sum(reward_gap_period(instance, env, g) for env in range(instance.n_envs))
            for g in grid
        ),
        default=math.inf,
    )
    rank_gap = uniform_steady_min_rank_gap(instance) if rank_gap is None else rank_gap
    identification = phase_overhead(exploration_requirement(d, L, kappa, rank_gap, T))
    return (discovery + identification + _constant_terms(instance)) * max_mean(instance, agent)


def bound_diagnostics(instance: MarketInstance) -> Dict[str, float]:
    """Gap statistics and per-agent bounds, skipping what the scenario cannot support."""
    out: Dict[str, float] = {"feature_bound": instance.feature_bound}
    if instance.kappa is not None:
        out["kappa"] = instance.kappa
    gap = uniform_min_gap(instance)
    out["delta_min"] = gap
    try:
        rank_gap = uniform_min_rank_gap(instance)
    except InvalidScenarioError as exc:
        logger.info(f"No rank gap for '{instance.name}': {exc}")
        return out
    out["delta_minrank"] = rank_gap
    steady = uniform_steady_min_rank_gap(instance)
    out["delta_minrank_steady"] = steady
    if instance.kappa is None or gap <= 0:
        return out
    out["tau_delta_min"] = exploration_requirement(
        instance.dim, instance.feature_bound, instance.kappa, gap, instance.horizon
    )
    for agent in range(instance.n_agents):
        out[f"etpgs_bound_agent_{agent}"] = etpgs_regret_bound(instance, agent, gap)
        out[f"ietpgs_bound_agent_{agent}"] = ietpgs_regret_bound(instance, agent, rank_gap=steady)
    return out
