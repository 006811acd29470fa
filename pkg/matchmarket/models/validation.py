"""
Scenario validation: distinct environment rankings, within-environment
ranking stability, spectral floor of arm groups and distinct means.
"""

import itertools
import logging
import math
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np

from matchmarket.config import settings
from matchmarket.models.market import MarketInstance
from matchmarket.schemas.run import ClauseFailure, ValidationClause, ValidationReport

logger = logging.getLogger(__name__)

_TOL = 1e-12


def _means(instance: MarketInstance, env: int, variant: int, window: int) -> np.ndarray:
    base = instance.environments[env].feature_cycle[variant]
    return np.einsum("nkd,nd->nk", base, instance.theta_windows[window])


def _rankings(means: np.ndarray) -> np.ndarray:
    return np.argsort(-means, axis=1, kind="stable")


def _group_candidates(instance: MarketInstance, agent: int) -> List[np.ndarray]:
    """Per arm, every base feature vector the agent can see for it."""
    per_arm = []
    for arm in range(instance.n_arms):
        vectors = [
            variant[agent, arm]
            for env in instance.environments
            for variant in env.feature_cycle
        ]
        per_arm.append(np.unique(np.round(np.array(vectors), 14), axis=0))
    return per_arm


def _iter_groups(
    candidates: Sequence[np.ndarray],
    dim: int,
    cap: int,
    rng: np.random.Generator,
) -> Iterator[np.ndarray]:
    """Yield ``(d, d)`` stacks of feature vectors for every group of ``d`` distinct arms.

    Beyond ``cap`` combinations a uniform sample of ``cap`` is drawn instead.
    """
    subsets = list(itertools.combinations(range(len(candidates)), dim))
    total = sum(math.prod(len(candidates[a]) for a in subset) for subset in subsets)
    if total <= cap:
        for subset in subsets:
            for choice in itertools.product(*(candidates[a] for a in subset)):
                yield np.array(choice)
        return
    logger.info(f"Sampling {cap} of {total} arm groups for the spectral floor")
    for _ in range(cap):
        subset = subsets[rng.integers(len(subsets))]
        yield np.array([candidates[a][rng.integers(len(candidates[a]))] for a in subset])


def spectral_floor(
    instance: MarketInstance,
    cap: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
) -> float:
    """
    Lower bound on ``lambda_min(sum_g x x^T)`` over every group of ``d``
    distinct arms, every agent and every environment or cycle variant of
    each arm.

    Bounded perturbations are covered by subtracting the Weyl slack
    ``d * (2 B eps + eps^2)`` where ``B`` is the largest base norm.
    """
    cap = settings.spectral_sample_cap if cap is None else cap
    rng = rng if rng is not None else np.random.default_rng(instance.noise_seed)
    d = instance.dim
    if d > instance.n_arms:
        return 0.0
    floor = math.inf
    for agent in range(instance.n_agents):
        candidates = _group_candidates(instance, agent)
        for group in _iter_groups(candidates, d, cap, rng):
            floor = min(floor, float(np.linalg.eigvalsh(group.T @ group)[0]))
    eps = max(env.perturbation_radius for env in instance.environments)
    if eps > 0.0:
        base_norm = max(
            float(np.linalg.norm(env.feature_cycle, axis=-1).max()) for env in instance.environments
        )
        floor -= d * (2.0 * base_norm * eps + eps * eps)
    return floor


def _check_dimensions(instance: MarketInstance) -> List[ClauseFailure]:
    failures = []
    if instance.n_arms < instance.n_agents:
        failures.append(ClauseFailure(
            clause=ValidationClause.DIMENSIONS,
            detail=f"K={instance.n_arms} arms is fewer than N={instance.n_agents} agents",
        ))
    if instance.dim > instance.n_arms:
        failures.append(ClauseFailure(
            clause=ValidationClause.DIMENSIONS,
            detail=f"d={instance.dim} exceeds K={instance.n_arms}; no group of d distinct arms",
        ))
    return failures


def _check_theta(instance: MarketInstance) -> List[ClauseFailure]:
    failures = []
    for window, theta in enumerate(instance.theta_windows):
        for agent, norm in enumerate(np.linalg.norm(theta, axis=1)):
            if norm > 1.0 + _TOL:
                failures.append(ClauseFailure(
                    clause=ValidationClause.THETA_NORM,
                    agent=agent,
                    window=window,
                    detail=f"||theta|| = {norm:.6g} exceeds 1",
                ))
    return failures


def _check_environment(
    instance: MarketInstance, env: int, window: int
) -> Tuple[List[ClauseFailure], float]:
    """Stability and distinctness of means within one environment."""
    failures = []
    spec = instance.environments[env]
    theta_norms = np.linalg.norm(instance.theta_windows[window], axis=1)
    reference = None
    smallest = math.inf
    top = min(instance.n_agents + 1, instance.n_arms)
    for variant in range(spec.cycle_length):
        means = _means(instance, env, variant, window)
        order = _rankings(means)
        sorted_means = np.take_along_axis(means, order, axis=1)
        gaps = sorted_means[:, :-1] - sorted_means[:, 1:]
        if gaps.shape[1]:
            smallest = min(smallest, float(gaps[:, : top - 1].min()))
        for agent in range(instance.n_agents):
            if gaps.shape[1] and gaps[agent].min() <= _TOL:
                failures.append(ClauseFailure(
                    clause=ValidationClause.DISTINCT_MEANS,
                    agent=agent,
                    environments=[env],
                    window=window,
                    detail=f"cycle variant {variant} has tied means",
                ))
            slack = 2.0 * spec.perturbation_radius * theta_norms[agent]
            if slack > 0.0 and gaps.shape[1] and gaps[agent].min() <= slack:
                failures.append(ClauseFailure(
                    clause=ValidationClause.RANKING_STABILITY,
                    agent=agent,
                    environments=[env],
                    window=window,
                    detail=(
                        f"cycle variant {variant}: gap {gaps[agent].min():.6g} does not "
                        f"survive perturbation radius {spec.perturbation_radius}"
                    ),
                ))
        if reference is None:
            reference = order
            continue
        for agent in np.nonzero(np.any(order != reference, axis=1))[0]:
            failures.append(ClauseFailure(
                clause=ValidationClause.RANKING_STABILITY,
                agent=int(agent),
                environments=[env],
                window=window,
                detail=f"cycle variant {variant} reorders arms to {order[agent].tolist()}",
            ))
    return failures, smallest


def _check_distinct_rankings(instance: MarketInstance, window: int) -> List[ClauseFailure]:
    failures = []
    n = instance.n_agents
    tops = [_rankings(_means(instance, env, 0, window))[:, :n] for env in range(instance.n_envs)]
    for e1, e2 in itertools.combinations(range(instance.n_envs), 2):
        for agent in range(n):
            if np.array_equal(tops[e1][agent], tops[e2][agent]):
                failures.append(ClauseFailure(
                    clause=ValidationClause.DISTINCT_RANKINGS,
                    agent=agent,
                    environments=[e1, e2],
                    window=window,
                    detail=(
                        f"identical top-{n} ranking {tops[e1][agent].tolist()} "
                        f"in environments {e1} and {e2}"
                    ),
                ))
    return failures


def validate_scenario(
    instance: MarketInstance,
    cap: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
) -> ValidationReport:
    """
    Check every clause a learnable scenario must satisfy.

    Args:
        instance: the scenario to check
        cap: maximum number of arm groups evaluated exactly for the spectral floor
        rng: sampling generator when the cap is exceeded

    Returns:
        ValidationReport listing every violated clause
    """
    failures = _check_dimensions(instance) + _check_theta(instance)
    smallest = math.inf
    for window in range(instance.n_windows):
        failures += _check_distinct_rankings(instance, window)
        for env in range(instance.n_envs):
            env_failures, env_gap = _check_environment(instance, env, window)
            failures += env_failures
            smallest = min(smallest, env_gap)

    floor = spectral_floor(instance, cap, rng)
    if floor <= settings.singular_tolerance:
        failures.append(ClauseFailure(
            clause=ValidationClause.SPECTRAL_FLOOR,
            detail=f"some group of {instance.dim} arms is rank deficient (floor {floor:.6g})",
        ))
    elif instance.kappa is not None and floor < instance.kappa - _TOL:
        failures.append(ClauseFailure(
            clause=ValidationClause.SPECTRAL_FLOOR,
            detail=f"computed floor {floor:.6g} is below declared kappa {instance.kappa:.6g}",
        ))

    report = ValidationReport(
        scenario=instance.name,
        passed=not failures,
        failures=failures,
        spectral_floor=floor,
        kappa=instance.kappa,
        min_gap=None if math.isinf(smallest) else smallest,
    )
    if not report.passed:
        logger.info(f"Scenario '{instance.name}' failed clauses {report.clauses()}")
    return report
