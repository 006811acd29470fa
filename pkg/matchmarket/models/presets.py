"""
Built-in scenarios.
"""

from dataclasses import dataclass
from typing import Callable, Dict, List, Optional

import numpy as np

from matchmarket.schemas.scenario import ScenarioSchema


@dataclass(frozen=True)
class PresetInfo:
    name: str
    description: str
    parameters: Dict[str, float]
    builder: Callable[..., ScenarioSchema]


def _table1(horizon: Optional[int] = None) -> ScenarioSchema:
    """Two agents, two arms; agent 1 keeps the same ranking in both environments."""
    e1 = [[[0.9], [0.5]], [[0.8], [0.4]]]
    e2 = [[[0.5], [0.9]], [[0.8], [0.4]]]
    prefs = [[0, 1], [0, 1]]
    return ScenarioSchema(
        name="table1-counterexample",
        description="Identical top-N ranking for one agent across environments",
        n_agents=2,
        n_arms=2,
        dim=1,
        horizon=horizon or 10_000,
        theta=[[1.0], [1.0]],
        environments=[
            {"env_id": 0, "arm_prefs": prefs, "features": [e1]},
            {"env_id": 1, "arm_prefs": prefs, "features": [e2]},
        ],
        schedule={"kind": "round_robin"},
    )


def _delta_example(
    horizon: Optional[int] = None, delta: float = 0.1, period_c: float = 10
) -> ScenarioSchema:
    """
    One-dimensional market with small top gaps but a large gap on the pair
    that tells the two environments apart.

    Every ``period_c``-th occurrence of an environment uses the switch means;
    the others use the steady means. Features equal means since theta = 1.
    """
    if not 0.0 < delta < 1.0 / 3.0:
        raise ValueError(f"delta must lie in (0, 1/3), got {delta}")
    period = int(period_c)
    if period < 1:
        raise ValueError(f"period_c must be at least 1, got {period_c}")
    d = delta

    def variant(agent1, agent2):
        return [[[m] for m in agent1], [[m] for m in agent2]]

    switch = {
        0: variant((1.0, 2 * d, d), (2 * d, 1.0, d)),
        1: variant((1.0, d, 2 * d), (d, 1.0, 2 * d)),
    }
    steady = {
        0: variant((1.0, 1 - d, d), (1 - d, 1.0, d)),
        1: variant((1.0, d, 1 - d), (d, 1.0, 1 - d)),
    }
    prefs = [[0, 1], [0, 1], [0, 1]]
    return ScenarioSchema(
        name="sec4-delta-example",
        description=f"Switch means every {period}-th occurrence, delta={delta}",
        n_agents=2,
        n_arms=3,
        dim=1,
        horizon=horizon or 100_000,
        theta=[[1.0], [1.0]],
        environments=[
            {
                "env_id": env,
                "arm_prefs": prefs,
                "features": [steady[env]] * (period - 1) + [switch[env]],
            }
            for env in (0, 1)
        ],
        schedule={"kind": "round_robin"},
        kappa=d * d,
    )


_UNIFORM_THETA = np.array([[1.0, 0.0], [0.0, 1.0]])
# (env, agent, arm, d); agent 1 mirrors agent 0 with coordinates and arms 0/1 swapped
_UNIFORM_FEATURES = {
    0: [
        [[3.0, 3.0], [0.6, -0.6], [0.4, 0.0]],
        [[-0.6, 0.6], [3.0, 3.0], [0.0, 0.4]],
    ],
    1: [
        [[0.6, 0.6], [3.0, -3.0], [0.4, 0.0]],
        [[-3.0, 3.0], [0.6, 0.6], [0.0, 0.4]],
    ],
}
_UNIFORM_PREFS = {
    0: [[1, 0], [0, 1], [0, 1]],
    1: [[0, 1], [0, 1], [1, 0]],
}


def _uniform_gap(horizon: Optional[int] = None) -> ScenarioSchema:
    """
    Two agents, three arms, d = 2, minimum top gap 0.2 in every round.

    Each agent has one anchor arm per environment with mean 3.0 whose features
    span both directions; the other two arms sit at 0.6 and 0.4. The anchors
    dominate the design matrix, so the widths of the two small arms fall
    below the 0.2 gap after a few thousand exploration rounds.
    """
    return ScenarioSchema(
        name="uniform-gap-basic",
        description="Uniform top-(N+1) gap of 0.2 with anchor arms and small perturbations",
        n_agents=2,
        n_arms=3,
        dim=2,
        horizon=horizon or 200_000,
        theta=_UNIFORM_THETA.tolist(),
        environments=[
            {
                "env_id": env,
                "arm_prefs": _UNIFORM_PREFS[env],
                "features": [_UNIFORM_FEATURES[env]],
                "perturbation_radius": 0.001,
            }
            for env in (0, 1)
        ],
        schedule={"kind": "round_robin"},
    )


def _piecewise(horizon: Optional[int] = None) -> ScenarioSchema:
    """The uniform-gap market with theta negated at T/4, T/2 and 3T/4."""
    base = _uniform_gap(horizon or 150_000)
    horizon = base.horizon
    flipped = (-_UNIFORM_THETA).tolist()
    thetas = [flipped, _UNIFORM_THETA.tolist(), flipped]
    rounds = sorted({r for r in (horizon // 4, horizon // 2, 3 * horizon // 4) if r >= 2})
    document = base.model_dump()
    document.update(
        name="piecewise-stationary",
        description="Three abrupt sign flips of every latent vector",
        change_points=[{"round": r, "theta": th} for r, th in zip(rounds, thetas)],
    )
    return ScenarioSchema.model_validate(document)


PRESETS: Dict[str, PresetInfo] = {
    info.name: info
    for info in (
        PresetInfo(
            "table1-counterexample",
            "Negative control: one agent's ranking is identical in both environments",
            {},
            _table1,
        ),
        PresetInfo(
            "sec4-delta-example",
            "d=1 market where partial-rank matching beats full separation",
            {"delta": 0.1, "period_c": 10},
            _delta_example,
        ),
        PresetInfo(
            "uniform-gap-basic",
            "N=2, K=3, d=2, E=2 with uniform gap 0.2",
            {},
            _uniform_gap,
        ),
        PresetInfo(
            "piecewise-stationary",
            "uniform-gap-basic with three latent-vector sign flips",
            {},
            _piecewise,
        ),
    )
}


def list_presets() -> List[PresetInfo]:
    return list(PRESETS.values())


def is_preset(name: str) -> bool:
    return name in PRESETS


def build_preset(name: str, horizon: Optional[int] = None, **params: float) -> ScenarioSchema:
    """
    Build a preset scenario.

    Args:
        name: preset name
        horizon: override of the preset's default horizon
        params: preset parameters; unknown ones are rejected

    Returns:
        ScenarioSchema
    """
    if name not in PRESETS:
        raise KeyError(f"Unknown preset '{name}'. Available: {sorted(PRESETS)}")
    info = PRESETS[name]
    unknown = set(params) - set(info.parameters)
    if unknown:
        raise ValueError(f"Preset '{name}' does not take parameters {sorted(unknown)}")
    return info.builder(horizon, **params)
