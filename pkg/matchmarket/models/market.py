"""
Ground-truth market model: agents, arms, latent environments, feature
generation, rewards and arm-side acceptance.

Indices are 0-based throughout: agents ``0..N-1``, arms ``0..K-1``,
environments ``0..E-1``. Rounds are 1-based (``t = 1..T``).
"""

import bisect
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Sequence

import numpy as np

from matchmarket.exceptions import InvalidScenarioError

logger = logging.getLogger(__name__)

UNMATCHED = -1


class NoiseKind(str, Enum):
    """Reward noise distribution."""
    GAUSSIAN = "gaussian"
    UNIFORM = "uniform"


class ScheduleKind(str, Enum):
    """Environment schedule kinds."""
    ROUND_ROBIN = "round_robin"
    IID = "iid"
    SEQUENCE = "sequence"


@dataclass
class EnvironmentSpec:
    """A latent environment.

    ``feature_cycle`` has shape ``(C, N, K, d)``: the ``nu``-th occurrence of
    the environment uses base features ``feature_cycle[nu % C]``. A cycle of
    length one is the plain "base features" case.
    """

    env_id: int
    arm_prefs: np.ndarray
    feature_cycle: np.ndarray
    perturbation_radius: float = 0.0
    arm_rank: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self.arm_prefs = np.asarray(self.arm_prefs, dtype=int)
        cycle = np.asarray(self.feature_cycle, dtype=float)
        if cycle.ndim == 3:
            cycle = cycle[np.newaxis]
        if cycle.ndim != 4:
            raise ValueError(
                f"Environment {self.env_id}: features must be (C, N, K, d), got {cycle.shape}"
            )
        self.feature_cycle = cycle
        n_arms, n_agents = self.arm_prefs.shape
        if cycle.shape[1:3] != (n_agents, n_arms):
            raise ValueError(
                f"Environment {self.env_id}: features {cycle.shape} disagree with "
                f"arm preferences for {n_agents} agents and {n_arms} arms"
            )
        # arm_rank[j, i] is the position of agent i in arm j's order (0 = best)
        rank = np.empty_like(self.arm_prefs)
        for j, order in enumerate(self.arm_prefs):
            if sorted(order.tolist()) != list(range(n_agents)):
                raise ValueError(
                    f"Environment {self.env_id}: arm {j} preferences are not a "
                    f"permutation of agents"
                )
            rank[j, order] = np.arange(n_agents)
        self.arm_rank = rank

    @property
    def cycle_length(self) -> int:
        return self.feature_cycle.shape[0]

    @property
    def base_features(self) -> np.ndarray:
        return self.feature_cycle[0]

    def features_for(self, occurrence: int) -> np.ndarray:
        return self.feature_cycle[occurrence % self.cycle_length]


@dataclass
class MatchOutcome:
    """Per-agent matched arm (``UNMATCHED`` for rejection) and reward."""

    matched: np.ndarray
    rewards: np.ndarray

    def is_matched(self, agent: int) -> bool:
        return bool(self.matched[agent] != UNMATCHED)


@dataclass
class MarketInstance:
    """The full ground-truth world for one simulation run.

    ``theta_windows[w]`` holds the ``(N, d)`` latent parameters of stationary
    window ``w``; window ``w > 0`` starts at round ``change_points[w - 1]``.
    """

    name: str
    theta_windows: List[np.ndarray]
    environments: List[EnvironmentSpec]
    schedule: np.ndarray
    change_points: List[int] = field(default_factory=list)
    kappa: Optional[float] = None
    noise: NoiseKind = NoiseKind.GAUSSIAN
    noise_seed: int = 0
    occurrences: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self.theta_windows = [np.asarray(th, dtype=float) for th in self.theta_windows]
        self.schedule = np.asarray(self.schedule, dtype=int)
        self.noise = NoiseKind(self.noise)
        if len(self.theta_windows) != len(self.change_points) + 1:
            raise ValueError("Need exactly one theta per stationary window")
        if list(self.change_points) != sorted(set(self.change_points)):
            raise ValueError("Change points must be strictly increasing")
        if self.schedule.size and (
            self.schedule.min() < 0 or self.schedule.max() >= len(self.environments)
        ):
            raise ValueError("Schedule refers to an unknown environment")
        self.occurrences = _occurrence_index(self.schedule, len(self.environments))

    @property
    def theta(self) -> np.ndarray:
        return self.theta_windows[0]

    @property
    def n_agents(self) -> int:
        return self.theta.shape[0]

    @property
    def n_arms(self) -> int:
        return self.environments[0].arm_prefs.shape[0]

    @property
    def dim(self) -> int:
        return self.theta.shape[1]

    @property
    def n_envs(self) -> int:
        return len(self.environments)

    @property
    def horizon(self) -> int:
        return int(self.schedule.size)

    @property
    def n_windows(self) -> int:
        return len(self.theta_windows)

    @property
    def feature_bound(self) -> float:
        """L: the largest norm any realized feature vector can take."""
        bound = 0.0
        for env in self.environments:
            norms = np.linalg.norm(env.feature_cycle, axis=-1)
            bound = max(bound, float(norms.max()) + env.perturbation_radius)
        return bound

    def env_at(self, t: int) -> int:
        return int(self.schedule[t - 1])

    def window_at(self, t: int) -> int:
        return bisect.bisect_right(self.change_points, t)

    def theta_at(self, t: int) -> np.ndarray:
        return self.theta_windows[self.window_at(t)]

    def occurrence_at(self, env: int, t: int) -> int:
        """Number of rounds before ``t`` in which ``env`` was active."""
        if self.env_at(t) == env:
            return int(self.occurrences[t - 1])
        return int(np.count_nonzero(self.schedule[: t - 1] == env))

    def base_features_at(self, t: int, env: Optional[int] = None) -> np.ndarray:
        env = self.env_at(t) if env is None else env
        return self.environments[env].features_for(self.occurrence_at(env, t))

    def window_bounds(self, window: int) -> tuple:
        """Inclusive round range ``(start, end)`` of a stationary window."""
        start = 1 if window == 0 else self.change_points[window - 1]
        end = self.horizon if window == len(self.change_points) else self.change_points[window] - 1
        return start, end


def _occurrence_index(schedule: np.ndarray, n_envs: int) -> np.ndarray:
    counts = np.zeros(n_envs, dtype=int)
    occ = np.empty_like(schedule)
    for idx, env in enumerate(schedule):
        occ[idx] = counts[env]
        counts[env] += 1
    return occ


def build_schedule(
    kind: ScheduleKind,
    n_envs: int,
    horizon: int,
    rng: Optional[np.random.Generator] = None,
    sequence: Optional[Sequence[int]] = None,
) -> np.ndarray:
    """
    Materialize the environment schedule ``e(1..T)``.

    Args:
        kind: round_robin, iid or sequence (the sequence repeats cyclically)
        n_envs: number of environments E
        horizon: number of rounds T
        rng: generator for the iid kind
        sequence: explicit environment ids for the sequence kind

    Returns:
        Integer array of length ``horizon``
    """
    kind = ScheduleKind(kind)
    if kind == ScheduleKind.ROUND_ROBIN:
        return np.arange(horizon) % n_envs
    if kind == ScheduleKind.IID:
        rng = rng if rng is not None else np.random.default_rng(0)
        return rng.integers(0, n_envs, size=horizon)
    if not sequence:
        raise ValueError("A sequence schedule needs a non-empty sequence")
    seq = np.asarray(sequence, dtype=int)
    return np.resize(seq, horizon)


def generate_features(
    instance: MarketInstance,
    env: int,
    t: int,
    rng: Optional[np.random.Generator] = None,
) -> np.ndarray:
    """
    Realized features ``x_ij(t)`` for every (agent, arm) pair.

    The perturbation is uniform in the ball of radius ``perturbation_radius``
    around the base vector of the environment's current occurrence.

    Returns:
        Array of shape ``(N, K, d)``
    """
    spec = instance.environments[env]
    base = spec.features_for(instance.occurrence_at(env, t))
    eps = spec.perturbation_radius
    if eps <= 0.0 or rng is None:
        return base.copy()
    n, k, d = base.shape
    direction = rng.standard_normal((n, k, d))
    norms = np.linalg.norm(direction, axis=-1, keepdims=True)
    norms[norms == 0.0] = 1.0
    radius = eps * rng.random((n, k, 1)) ** (1.0 / d)
    return base + direction / norms * radius


def mean_matrix(instance: MarketInstance, features: np.ndarray, t: int) -> np.ndarray:
    """Mean rewards ``mu_ij(t)`` as an ``(N, K)`` array."""
    return np.einsum("nkd,nd->nk", features, instance.theta_at(t))


def true_mean(
    instance: MarketInstance,
    i: int,
    j: int,
    t: int,
    features: Optional[np.ndarray] = None,
) -> float:
    """Inner product of agent ``i``'s latent vector with ``x_ij(t)``.

    Without ``features`` the unperturbed base vector of round ``t`` is used.
    """
    x = instance.base_features_at(t) if features is None else features
    return float(np.dot(x[i, j], instance.theta_at(t)[i]))


def resolve_collisions(
    proposals: np.ndarray,
    env: EnvironmentSpec,
    means: Optional[np.ndarray] = None,
    rng: Optional[np.random.Generator] = None,
    noise: NoiseKind = NoiseKind.GAUSSIAN,
) -> MatchOutcome:
    """
    Resolve one round of proposals on the arm side.

    Each contested arm keeps its most preferred proposer under the active
    environment's ``arm_prefs``; every other proposer is rejected with
    reward 0. Matched agents receive ``mu + noise``. One noise draw per agent
    is consumed every round so the stream position never depends on the
    matching.

    Args:
        proposals: proposed arm per agent, ``UNMATCHED`` to abstain
        env: active environment
        means: ``(N, K)`` mean rewards; rewards are pure noise when omitted
        rng: noise generator; noise-free when omitted
        noise: gaussian or uniform on [-1, 1]

    Returns:
        MatchOutcome
    """
    proposals = np.asarray(proposals, dtype=int)
    n_agents = proposals.size
    matched = np.full(n_agents, UNMATCHED, dtype=int)
    holder = {}
    for agent, arm in enumerate(proposals):
        if arm == UNMATCHED:
            continue
        current = holder.get(arm)
        if current is None or env.arm_rank[arm, agent] < env.arm_rank[arm, current]:
            holder[arm] = agent
    for arm, agent in holder.items():
        matched[agent] = arm

    if rng is None:
        draws = np.zeros(n_agents)
    elif NoiseKind(noise) == NoiseKind.UNIFORM:
        draws = rng.uniform(-1.0, 1.0, size=n_agents)
    else:
        draws = rng.standard_normal(n_agents)

    rewards = np.zeros(n_agents)
    for agent in range(n_agents):
        arm = matched[agent]
        if arm != UNMATCHED:
            mu = 0.0 if means is None else means[agent, arm]
            rewards[agent] = mu + draws[agent]
    return MatchOutcome(matched=matched, rewards=rewards)


def true_rankings(
    instance: MarketInstance, env: int, window: int = 0, occurrence: int = 0
) -> np.ndarray:
    """Full arm ranking (best first) of every agent, shape ``(N, K)``."""
    base = instance.environments[env].features_for(occurrence)
    means = np.einsum("nkd,nd->nk", base, instance.theta_windows[window])
    return np.argsort(-means, axis=1, kind="stable")


def min_gap(
    instance: MarketInstance, i: int, t: int, features: Optional[np.ndarray] = None
) -> float:
    """
    Minimum pairwise mean gap among agent ``i``'s top ``N+1`` arms.

    Falls back to the top ``K`` arms when ``N + 1 > K``. Returns ``inf`` when
    fewer than two arms take part.
    """
    x = instance.base_features_at(t) if features is None else features
    mu = np.sort(x[i] @ instance.theta_at(t)[i])[::-1]
    top = mu[: min(instance.n_agents + 1, instance.n_arms)]
    if top.size < 2:
        return float("inf")
    return float(np.min(top[:-1] - top[1:]))


def _rank_gap(instance: MarketInstance, i: int, active: int, window: int, mu: np.ndarray) -> float:
    # local import: ranking builds on the market types
    from matchmarket.core.ranking import TopNRanking, inversion_set

    n, k = instance.n_agents, instance.n_arms
    current = TopNRanking(true_rankings(instance, active, window)[i, :n]).as_partial(k)
    best = float("inf")
    for env in range(instance.n_envs):
        if env == active:
            continue
        other = TopNRanking(true_rankings(instance, env, window)[i, :n]).as_partial(k)
        pairs = inversion_set(other, current)
        if not pairs:
            raise InvalidScenarioError(
                f"Agent {i}: environments {env} and {active} share the same top-{n} ranking"
            )
        best = min(best, max(abs(mu[a] - mu[b]) for a, b in pairs))
    return best


def min_rank_gap(
    instance: MarketInstance, i: int, t: int, features: Optional[np.ndarray] = None
) -> float:
    """
    Minimum over other environments of the largest round-``t`` mean gap on a
    pair inverted between the two environments' top-N rankings.

    Gaps are read from the round's own features, so an occurrence whose means
    bunch up (a switch occurrence of a cycled environment) reports its small gap.
    Returns ``inf`` when there is a single environment.

    Raises:
        InvalidScenarioError: if some other environment has no inverted pair
    """
    x = instance.base_features_at(t) if features is None else features
    mu = x[i] @ instance.theta_at(t)[i]
    return _rank_gap(instance, i, instance.env_at(t), instance.window_at(t), mu)


def steady_min_rank_gap(instance: MarketInstance, i: int, env: int, window: int = 0) -> float:
    """
    Rank-identification gap of ``env`` for agent ``i`` on its widest cycle variant.

    For a one-variant environment it equals ``min_rank_gap`` at any of its rounds.

    Raises:
        InvalidScenarioError: if some other environment has no inverted pair
    """
    theta = instance.theta_windows[window][i]
    return max(
        _rank_gap(instance, i, env, window, variant[i] @ theta)
        for variant in instance.environments[env].feature_cycle
    )
