"""
Pydantic schema of scenario JSON documents.
"""

from typing import List, Optional

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator

from matchmarket.models.market import (
    EnvironmentSpec,
    MarketInstance,
    NoiseKind,
    ScheduleKind,
    build_schedule,
)

SCENARIO_SCHEMA_VERSION = "1.0"


class ChangePointSchema(BaseModel):
    """A round from which a new set of latent vectors applies."""

    round: int = Field(..., ge=2, description="First round of the new window")
    theta: List[List[float]] = Field(..., description="N x d latent vectors")


class EnvironmentSchema(BaseModel):
    """One latent environment."""

    env_id: int = Field(..., ge=0, description="Environment id, 0-based")
    arm_prefs: List[List[int]] = Field(..., description="Per arm, agent ids best first")
    features: List[List[List[List[float]]]] = Field(
        ..., description="Cycle of N x K x d base features; occurrence nu uses entry nu mod len"
    )
    perturbation_radius: float = Field(default=0.0, ge=0.0, description="Per-round perturbation radius")

    @field_validator("features", mode="before")
    @classmethod
    def wrap_single_variant(cls, value):
        """Accept a bare N x K x d array as a cycle of length one."""
        if np.asarray(value, dtype=float).ndim == 3:
            return [value]
        return value


class ScheduleSchema(BaseModel):
    """Environment schedule."""

    kind: ScheduleKind = Field(default=ScheduleKind.ROUND_ROBIN)
    sequence: Optional[List[int]] = Field(default=None, description="Environment ids, repeated cyclically")


class ScenarioSchema(BaseModel):
    """Scenario document mirroring the market instance."""

    schema_version: str = Field(default=SCENARIO_SCHEMA_VERSION)
    name: str = Field(..., description="Scenario name")
    description: Optional[str] = Field(default=None)
    n_agents: int = Field(..., ge=1, description="N")
    n_arms: int = Field(..., ge=1, description="K")
    dim: int = Field(..., ge=1, description="d")
    horizon: int = Field(..., ge=1, description="T")
    theta: List[List[float]] = Field(..., description="N x d latent vectors of the first window")
    change_points: List[ChangePointSchema] = Field(default_factory=list)
    environments: List[EnvironmentSchema] = Field(..., min_length=1)
    schedule: ScheduleSchema = Field(default_factory=ScheduleSchema)
    kappa: Optional[float] = Field(default=None, gt=0, description="Spectral floor; computed when omitted")
    noise: NoiseKind = Field(default=NoiseKind.GAUSSIAN)
    noise_seed: int = Field(default=0, ge=0)

    model_config = {
        "json_schema_extra": {
            "example": {
                "name": "two-env-basis",
                "n_agents": 1,
                "n_arms": 2,
                "dim": 2,
                "horizon": 1000,
                "theta": [[0.8, 0.6]],
                "environments": [
                    {"env_id": 0, "arm_prefs": [[0], [0]], "features": [[[1.0, 0.0], [0.0, 1.0]]]},
                    {"env_id": 1, "arm_prefs": [[0], [0]], "features": [[[0.0, 1.0], [1.0, 0.0]]]},
                ],
                "schedule": {"kind": "round_robin"},
            }
        }
    }

    @model_validator(mode="after")
    def check_shapes(self) -> "ScenarioSchema":
        n, k, d = self.n_agents, self.n_arms, self.dim
        thetas = [self.theta] + [cp.theta for cp in self.change_points]
        for theta in thetas:
            if np.asarray(theta, dtype=float).shape != (n, d):
                raise ValueError(f"theta must be {n} x {d}")
        rounds = [cp.round for cp in self.change_points]
        if rounds != sorted(set(rounds)):
            raise ValueError("change point rounds must be strictly increasing")
        ids = sorted(env.env_id for env in self.environments)
        if ids != list(range(len(self.environments))):
            raise ValueError("environment ids must be 0..E-1")
        for env in self.environments:
            if np.asarray(env.arm_prefs).shape != (k, n):
                raise ValueError(f"environment {env.env_id}: arm_prefs must be {k} x {n}")
            if np.asarray(env.features, dtype=float).shape[1:] != (n, k, d):
                raise ValueError(f"environment {env.env_id}: features must be C x {n} x {k} x {d}")
        if self.schedule.kind == ScheduleKind.SEQUENCE:
            seq = self.schedule.sequence or []
            if not seq or any(e < 0 or e >= len(self.environments) for e in seq):
                raise ValueError("sequence schedule needs valid environment ids")
        return self

    def to_instance(
        self,
        horizon: Optional[int] = None,
        schedule_rng: Optional[np.random.Generator] = None,
    ) -> MarketInstance:
        """
        Build the market instance.

        Args:
            horizon: override of the scenario horizon
            schedule_rng: stream for iid schedules (seeded from noise_seed when omitted)

        Returns:
            MarketInstance with kappa filled in
        """
        # validation imports the report schemas
        from matchmarket.models.validation import spectral_floor

        horizon = horizon or self.horizon
        rng = schedule_rng if schedule_rng is not None else np.random.default_rng(self.noise_seed)
        envs = sorted(self.environments, key=lambda env: env.env_id)
        cps = [cp for cp in self.change_points if cp.round <= horizon]
        instance = MarketInstance(
            name=self.name,
            theta_windows=[self.theta] + [cp.theta for cp in cps],
            environments=[
                EnvironmentSpec(
                    env_id=env.env_id,
                    arm_prefs=np.asarray(env.arm_prefs),
                    feature_cycle=np.asarray(env.features, dtype=float),
                    perturbation_radius=env.perturbation_radius,
                )
                for env in envs
            ],
            schedule=build_schedule(
                self.schedule.kind, len(envs), horizon, rng=rng, sequence=self.schedule.sequence
            ),
            change_points=[cp.round for cp in cps],
            kappa=self.kappa,
            noise=self.noise,
            noise_seed=self.noise_seed,
        )
        if instance.kappa is None:
            floor = spectral_floor(instance)
            instance.kappa = floor if floor > 0 else None
        return instance
