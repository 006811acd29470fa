"""
Pytest configuration and fixtures for testing.
"""

import numpy as np
import pytest

from matchmarket.models.market import EnvironmentSpec, MarketInstance, build_schedule
from matchmarket.models.presets import build_preset
from matchmarket.schemas.run import RunConfig


def make_env(means, arm_prefs, env_id=0, radius=0.0):
    """One-dimensional environment whose features equal the given ``(N, K)`` means."""
    means = np.asarray(means, dtype=float)
    return EnvironmentSpec(
        env_id=env_id,
        arm_prefs=np.asarray(arm_prefs, dtype=int),
        feature_cycle=means[np.newaxis, :, :, np.newaxis],
        perturbation_radius=radius,
    )


def make_instance(envs, horizon=20, theta=None, change_points=None, thetas=None, kappa=None):
    """Round-robin instance over ``envs`` with unit latent vectors by default."""
    n_agents = envs[0].feature_cycle.shape[1]
    dim = envs[0].feature_cycle.shape[-1]
    theta = np.ones((n_agents, dim)) if theta is None else np.asarray(theta, dtype=float)
    return MarketInstance(
        name="fixture",
        theta_windows=[theta] + list(thetas or []),
        environments=list(envs),
        schedule=build_schedule("round_robin", len(envs), horizon),
        change_points=list(change_points or []),
        kappa=kappa,
    )


@pytest.fixture
def env_factory():
    return make_env


@pytest.fixture
def instance_factory():
    return make_instance


@pytest.fixture
def serial_env():
    """Three agents, three arms; every arm prefers agent 0, then 1, then 2."""
    means = [[0.9, 0.6, 0.3], [0.9, 0.6, 0.3], [0.9, 0.6, 0.3]]
    prefs = [[0, 1, 2], [0, 1, 2], [0, 1, 2]]
    return make_env(means, prefs)


@pytest.fixture
def uniform_schema():
    """uniform-gap-basic shortened to 2000 rounds."""
    return build_preset("uniform-gap-basic", horizon=2000)


@pytest.fixture
def uniform_instance(uniform_schema):
    return uniform_schema.to_instance()


@pytest.fixture
def delta_instance():
    """sec4-delta-example with delta 0.1 and period 10."""
    return build_preset("sec4-delta-example", horizon=1000).to_instance()


@pytest.fixture
def table1_instance():
    return build_preset("table1-counterexample", horizon=200).to_instance()


@pytest.fixture
def short_run_config():
    """Sample run configuration on a short uniform-gap market."""
    return RunConfig(
        scenario="uniform-gap-basic",
        algorithm="etpgs",
        horizon=1500,
        seed=3,
        replications=2,
        trace_level="diagnostics",
    )
