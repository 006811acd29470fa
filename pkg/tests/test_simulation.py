"""
Tests for the simulation service: streams, regret accounting, traces and runs.
"""

import numpy as np
import pandas as pd
import pytest
from pydantic import ValidationError

from matchmarket.core.change_detection import ReferenceMode
from matchmarket.exceptions import InvalidScenarioError
from matchmarket.models.run import RoundClass
from matchmarket.schemas.run import RunConfig
from matchmarket.services.regret import RegretLedger
from matchmarket.services.simulation_service import (
    DIAGNOSTIC_COLUMNS,
    TRACE_COLUMNS,
    SimulationService,
    cusum_template,
    make_streams,
    resolve_scenario,
    run_replication,
)


def test_streams_are_reproducible():
    """Test identical (seed, replication) pairs give identical streams."""
    a, b = make_streams(7, 0), make_streams(7, 0)
    assert a.noise.random() == b.noise.random()
    assert a.perturbation.random() == b.perturbation.random()
    assert make_streams(7, 1).noise.random() != make_streams(7, 0).noise.random()


def test_streams_are_independent():
    """Test consuming one stream leaves the others untouched."""
    a, b = make_streams(3, 0), make_streams(3, 0)
    a.perturbation.random(1000)
    assert a.noise.random() == b.noise.random()


_UNIFORM_ENV0_MEANS = np.array([[3.0, 0.6, 0.4], [0.6, 3.0, 0.4]])


def test_ledger_zero_for_optimal_matching(uniform_instance):
    """Test playing the optimal matching books no regret."""
    ledger = RegretLedger(uniform_instance)
    signed = ledger.record(1, _UNIFORM_ENV0_MEANS, np.array([0, 1]))
    assert signed == pytest.approx([0.0, 0.0])
    assert ledger.optimal_position(0, 0, 0) == 0
    assert ledger.optimal_position(1, 0, 0) == 0


def test_ledger_unmatched_agent(uniform_instance):
    """Test an unmatched agent's regret is its optimal mean."""
    ledger = RegretLedger(uniform_instance)
    signed = ledger.record(1, _UNIFORM_ENV0_MEANS, np.array([0, -1]))
    assert signed == pytest.approx([0.0, 3.0])
    assert ledger.cumulative()[0].tolist() == pytest.approx([0.0, 3.0])


def test_ledger_keeps_signed_increment(serial_env, instance_factory):
    """Test a better-than-optimal arm gives a negative signed increment but no regret."""
    ledger = RegretLedger(instance_factory([serial_env], horizon=5))
    means = np.tile([0.9, 0.6, 0.3], (3, 1))
    signed = ledger.record(1, means, np.array([1, 0, 2]))
    assert signed.tolist() == pytest.approx([0.3, -0.3, 0.0])
    assert ledger.total().tolist() == pytest.approx([0.3, 0.0, 0.0])
    assert ledger.signed_total()[1] == pytest.approx(-0.3)


def test_ledger_mu_max_tracks_optimal_arm(serial_env, instance_factory):
    """Test mu_max follows each agent's optimal stable arm, not its best arm."""
    ledger = RegretLedger(instance_factory([serial_env], horizon=5))
    means = np.tile([0.9, 0.6, 0.3], (3, 1))
    ledger.record(1, means, np.array([0, 1, 2]))
    assert ledger.mu_max.tolist() == pytest.approx([0.9, 0.6, 0.3])


def test_resolve_scenario_rejects_unknown_name():
    """Test names that are neither presets nor JSON files are rejected."""
    with pytest.raises(ValueError):
        resolve_scenario("no-such-preset")


def test_resolve_scenario_preset_params():
    """Test preset parameters reach the builder."""
    schema = resolve_scenario("sec4-delta-example", 500, {"delta": 0.05})
    assert schema.kappa == pytest.approx(0.0025)
    assert schema.horizon == 500


def test_run_config_rejects_unknown_algorithm():
    """Test configurations only accept registered algorithm names."""
    with pytest.raises(ValidationError):
        RunConfig(scenario="uniform-gap-basic", algorithm="ucb")


def test_cusum_template_reference_mode(uniform_instance):
    """Test the CUSUM baseline is frozen by default and rolling only on request."""
    config = RunConfig(scenario="uniform-gap-basic", algorithm="cdetpgs")
    state, gamma = cusum_template(uniform_instance, config)
    assert state.mode == ReferenceMode.FROZEN
    assert state.warmup == uniform_instance.dim
    assert gamma == 1
    rolling, _ = cusum_template(uniform_instance, config.model_copy(update={"cd_reference": "rolling"}))
    assert rolling.mode == ReferenceMode.ROLLING


def test_oracle_run_has_zero_regret():
    """Test oracle agents incur zero regret every round."""
    config = RunConfig(scenario="uniform-gap-basic", algorithm="oracle", horizon=400, seed=1)
    result = SimulationService().run(config)
    assert result.summary.final_regret_mean == 0.0
    assert not result.replications[0].cumulative.any()


def test_uniform_preset_exploration_settles_early():
    """Test ETPGS on the uniform-gap market stops exploring long before 1e4 rounds."""
    config = RunConfig(
        scenario="uniform-gap-basic",
        algorithm="etpgs",
        horizon=12_000,
        seed=2024,
        trace_level="off",
    )
    rep = SimulationService().run(config).replications[0]
    curve = rep.cumulative.sum(axis=1)
    assert curve[-1] == pytest.approx(curve[9_999])
    assert (rep.class_counts[RoundClass.EXPLORE.value] <= 2047).all()


def test_invalid_scenario_is_refused():
    """Test a failing scenario is not run without skip_validation."""
    config = RunConfig(scenario="table1-counterexample", algorithm="etpgs", horizon=50)
    with pytest.raises(InvalidScenarioError) as exc_info:
        SimulationService().run(config)
    assert exc_info.value.report is not None
    assert not exc_info.value.report.passed


def test_counterexample_regret_is_linear():
    """Test the shared-ranking agent never settles when rankings are handed to it."""
    horizon = 2000
    config = RunConfig(
        scenario="table1-counterexample",
        algorithm="ranking-oracle",
        horizon=horizon,
        skip_validation=True,
        trace_level="off",
    )
    rep = SimulationService().run(config).replications[0]
    p2 = rep.cumulative[:, 1]
    assert p2[-1] >= 0.4 * horizon * 0.4
    assert p2[horizon // 2 - 1] == pytest.approx(p2[-1] / 2, rel=0.01)
    assert rep.cumulative[-1, 0] == 0.0
    assert rep.pointer_wraps > 0


def test_trace_layout(short_run_config, uniform_schema):
    """Test one trace row per (round, agent) with every documented column."""
    rep = run_replication(uniform_schema, short_run_config, 0)
    trace = rep.trace
    assert list(trace.columns) == TRACE_COLUMNS + DIAGNOSTIC_COLUMNS
    assert len(trace) == 1500 * 2
    assert (trace["trace_version"] == "1.0").all()
    assert trace["cum_regret"].groupby(trace["agent"]).apply(lambda s: s.is_monotonic_increasing).all()


def test_round_classes_cover_every_round(short_run_config, uniform_schema):
    """Test exploration plus GS, exploit and violation rounds add up to T per agent."""
    rep = run_replication(uniform_schema, short_run_config, 0)
    totals = sum(rep.class_counts[cls.value] for cls in RoundClass)
    assert totals.tolist() == [1500, 1500]
    assert rep.class_counts[RoundClass.EXPLORE.value].min() > 0


def test_spectral_invariant_holds(short_run_config, uniform_schema):
    """Test lambda_min(V) stays above kappa times completed exploration blocks."""
    rep = run_replication(uniform_schema, short_run_config, 1)
    assert rep.spectral_violations == 0
    assert (rep.trace["lambda_min"] >= rep.trace["lambda_bound"] - 1e-9).all()


def test_runs_are_deterministic(short_run_config):
    """Test two runs with the same seed give identical traces."""
    first = SimulationService().run(short_run_config)
    second = SimulationService().run(short_run_config)
    pd.testing.assert_frame_equal(first.trace_frame(), second.trace_frame())
    assert first.summary.model_dump() == second.summary.model_dump()


def test_seed_changes_noise(short_run_config):
    """Test a different seed gives a different trace."""
    first = SimulationService().run(short_run_config)
    other = SimulationService().run(short_run_config.model_copy(update={"seed": 99}))
    assert not first.trace_frame()["reward"].equals(other.trace_frame()["reward"])


@pytest.mark.integration
def test_parallel_matches_sequential(short_run_config):
    """Test the replication pool returns the sequential results in order."""
    config = short_run_config.model_copy(update={"trace_level": "off"})
    sequential = SimulationService().run(config)
    parallel = SimulationService().run(config.model_copy(update={"workers": 2}))
    assert [r.replication for r in parallel.replications] == [0, 1]
    for a, b in zip(sequential.replications, parallel.replications):
        assert np.array_equal(a.cumulative, b.cumulative)
