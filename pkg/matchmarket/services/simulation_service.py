"""
Simulation service: scenario resolution, validation, seeded replications
and per-round trace collection.
"""

import logging
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from matchmarket.agents.agent_registry import agent_registry
from matchmarket.agents.base_agent import BaseMatchingAgent
from matchmarket.agents.cd_etpgs_agent import CDETPGSAgent
from matchmarket.agents.coordinator import MarketCoordinator, RoundResult
from matchmarket.config import settings
from matchmarket.core.change_detection import (
    CusumState,
    ReferenceMode,
    default_rate,
    default_threshold,
)
from matchmarket.core.estimation import count_direction_violations
from matchmarket.exceptions import InvalidScenarioError
from matchmarket.models.market import (
    UNMATCHED,
    MarketInstance,
    generate_features,
    mean_matrix,
)
from matchmarket.models.presets import build_preset, is_preset
from matchmarket.models.run import Algorithm, RoundAction, RoundClass, TraceLevel
from matchmarket.models.validation import validate_scenario
from matchmarket.schemas.run import RunConfig, RunSummary, ValidationReport
from matchmarket.schemas.scenario import ScenarioSchema
from matchmarket.services.regret import RegretLedger
from matchmarket.utils.file_utils import load_scenario_file, validate_file_type

logger = logging.getLogger(__name__)

TRACE_VERSION = "1.0"
TRACE_COLUMNS = [
    "trace_version", "replication", "t", "local_t", "env", "window", "agent",
    "action", "round_class", "proposed", "matched", "reward", "mean_reward",
    "regret", "signed_regret", "cum_regret", "exploration_count", "env_flag",
    "tau_end", "phase_index", "forced", "cusum_stat", "detected", "restarted",
]
DIAGNOSTIC_COLUMNS = ["lambda_min", "lambda_bound", "direction_violations"]


@dataclass
class Streams:
    """Independent random streams of one replication."""

    schedule: np.random.Generator
    perturbation: np.random.Generator
    noise: np.random.Generator


def make_streams(seed: int, replication: int) -> Streams:
    """Split ``(seed, replication)`` into schedule, perturbation and noise streams."""
    children = np.random.SeedSequence([seed, replication]).spawn(3)
    return Streams(*(np.random.default_rng(child) for child in children))


@dataclass
class ReplicationResult:
    """Outcome of one replication."""

    replication: int
    cumulative: np.ndarray
    signed_total: np.ndarray
    class_counts: Dict[str, np.ndarray]
    gs_convergence_rounds: int
    exploration_phases: int
    spectral_violations: int
    direction_violations: int
    pointer_wraps: int
    restarts: List[int] = field(default_factory=list)
    restarts_synchronized: bool = True
    change_points: List[int] = field(default_factory=list)
    cd_h: Optional[float] = None
    cd_alpha: Optional[float] = None
    mu_max: Optional[np.ndarray] = None
    delta_max: Optional[np.ndarray] = None
    trace: Optional[pd.DataFrame] = None

    @property
    def total_regret(self) -> float:
        return float(self.cumulative[-1].sum()) if self.cumulative.size else 0.0


@dataclass
class RunResult:
    """All replications of one run plus its summary."""

    config: RunConfig
    scenario: ScenarioSchema
    validation: Optional[ValidationReport]
    replications: List[ReplicationResult]
    summary: Optional[RunSummary] = None

    def trace_frame(self) -> Optional[pd.DataFrame]:
        frames = [rep.trace for rep in self.replications if rep.trace is not None]
        if not frames:
            return None
        return pd.concat(frames, ignore_index=True)


class _TraceBuffer:
    """Column-wise preallocated trace storage, one row per (round, agent)."""

    def __init__(self, n_rows: int, diagnostics: bool):
        columns = TRACE_COLUMNS[1:] + (DIAGNOSTIC_COLUMNS if diagnostics else [])
        self.data = {
            col: np.empty(n_rows, dtype=object if col in ("action", "round_class") else float)
            for col in columns
        }

    def write(self, rows: slice, **values) -> None:
        for col, value in values.items():
            if col in self.data:
                self.data[col][rows] = value

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(self.data)
        int_cols = [
            "replication", "t", "local_t", "env", "window", "agent", "proposed", "matched",
            "exploration_count", "env_flag", "tau_end", "phase_index", "forced", "detected",
            "restarted",
        ] + (["direction_violations"] if "direction_violations" in frame else [])
        frame[int_cols] = frame[int_cols].astype(np.int64)
        frame.insert(0, "trace_version", TRACE_VERSION)
        return frame


def resolve_scenario(
    reference: str, horizon: Optional[int] = None, params: Optional[Dict[str, float]] = None
) -> ScenarioSchema:
    """Preset name or scenario file path to a ScenarioSchema."""
    params = params or {}
    if is_preset(reference):
        return build_preset(reference, horizon=horizon, **params)
    if not validate_file_type(reference):
        raise ValueError(f"'{reference}' is neither a preset nor a .json scenario file")
    if params:
        raise ValueError(f"Parameters {sorted(params)} only apply to presets")
    return load_scenario_file(reference)


def cusum_template(instance: MarketInstance, config: RunConfig) -> Tuple[CusumState, float]:
    """CUSUM tuning for a run, with CLI overrides taking precedence over settings."""
    gamma = config.cd_gamma or max(1, len(instance.change_points))
    n, horizon = instance.n_agents, instance.horizon
    h = config.cd_h or default_threshold(n, horizon, gamma, settings.cd_threshold_scale)
    alpha = config.cd_alpha or default_rate(n, horizon, gamma, settings.cd_rate_scale)
    state = CusumState(
        h=h,
        alpha=alpha,
        drift=settings.cd_drift,
        warmup=settings.cd_warmup or instance.dim,
        mode=ReferenceMode(config.cd_reference or settings.cd_reference_mode),
    )
    return state, gamma


def _cusum_statistic(agent: BaseMatchingAgent) -> float:
    return agent.cusum.statistic if isinstance(agent, CDETPGSAgent) else 0.0


def _classify(
    agent: BaseMatchingAgent,
    action: RoundAction,
    proposed: int,
    matched: int,
    ledger: RegretLedger,
    env: int,
    window: int,
) -> RoundClass:
    if action in (RoundAction.EXPLORE, RoundAction.FORCED):
        return RoundClass.EXPLORE
    i = agent.agent_id
    optimal_arm = ledger.optimal(env, window).arm_of(i)
    at_optimum = proposed == optimal_arm and matched == proposed
    ranking = agent.current_ranking()
    if ranking is not None:
        true_top = tuple(int(a) for a in ledger.rankings(env, window)[i, : agent.n_agents])
        if ranking.arms != true_top:
            return RoundClass.VIOLATION
        if ranking.arms.index(proposed) > ledger.optimal_position(env, window, i):
            return RoundClass.VIOLATION
    return RoundClass.EXPLOIT if at_optimum else RoundClass.GS


def run_replication(
    schema: ScenarioSchema, config: RunConfig, replication: int
) -> ReplicationResult:
    """
    Simulate one seeded replication.

    Args:
        schema: scenario document
        config: run configuration
        replication: replication index, combined with the root seed

    Returns:
        ReplicationResult
    """
    streams = make_streams(config.seed, replication)
    instance = schema.to_instance(config.horizon, schedule_rng=streams.schedule)
    algorithm = Algorithm(config.algorithm)
    cusum = None
    if algorithm == Algorithm.CDETPGS:
        cusum, _ = cusum_template(instance, config)
    agents = agent_registry.create_agents(algorithm, instance, cusum)
    coordinator = MarketCoordinator(instance, agents, noise_rng=streams.noise)
    ledger = RegretLedger(instance)

    horizon, n_agents = instance.horizon, instance.n_agents
    level = TraceLevel(config.trace_level)
    diagnostics = level == TraceLevel.DIAGNOSTICS
    buffer = _TraceBuffer(horizon * n_agents, diagnostics) if level != TraceLevel.OFF else None
    counts = {cls.value: np.zeros(n_agents, dtype=int) for cls in RoundClass}
    gs_rounds = spectral_violations = direction_violations = 0
    phases = 0
    synchronized = True
    cumulative = np.zeros(n_agents)
    kappa = instance.kappa

    for t in range(1, horizon + 1):
        env, window = instance.env_at(t), instance.window_at(t)
        features = generate_features(instance, env, t, streams.perturbation)
        means = mean_matrix(instance, features, t)
        result: RoundResult = coordinator.run_lockstep_round(t, features, means)
        signed = ledger.record(t, means, result.outcome.matched)
        cumulative += np.maximum(signed, 0.0)
        phases += int(result.triggered)

        classes = []
        for agent in agents:
            i = agent.agent_id
            cls = _classify(
                agent, result.actions[i], int(result.proposals[i]),
                int(result.outcome.matched[i]), ledger, env, window,
            )
            classes.append(cls)
            counts[cls.value][i] += 1
        gs_rounds += int(any(cls == RoundClass.GS for cls in classes))

        if result.restarted:
            windows = {getattr(agent, "window_start", None) for agent in agents}
            sizes = {len(agent.memory.entries) for agent in agents}
            synchronized &= windows == {t} and sizes == {0}

        lam = np.zeros(n_agents)
        bound = np.zeros(n_agents)
        dir_viol = np.zeros(n_agents, dtype=int)
        if diagnostics:
            for agent in agents:
                i = agent.agent_id
                design = agent.memory.design
                lam[i] = design.lambda_min()
                bound[i] = (kappa or 0.0) * (design.exploration_count // instance.dim)
                if lam[i] < bound[i] * (1.0 - 1e-9) - 1e-9:
                    spectral_violations += 1
                if algorithm not in (Algorithm.ORACLE, Algorithm.RANKING_ORACLE):
                    dir_viol[i] = count_direction_violations(
                        design, instance.theta_at(t)[i], result.local_t
                    )
            direction_violations += int(dir_viol.sum())

        if buffer is not None:
            rows = slice((t - 1) * n_agents, t * n_agents)
            matched = result.outcome.matched
            mean_reward = np.where(
                matched != UNMATCHED, means[np.arange(n_agents), np.maximum(matched, 0)], 0.0
            )
            buffer.write(
                rows,
                replication=replication,
                t=t,
                local_t=result.local_t,
                env=env,
                window=window,
                agent=np.arange(n_agents),
                action=[a.value for a in result.actions],
                round_class=[c.value for c in classes],
                proposed=result.proposals,
                matched=matched,
                reward=result.outcome.rewards,
                mean_reward=mean_reward,
                regret=np.maximum(signed, 0.0),
                signed_regret=signed,
                cum_regret=cumulative,
                exploration_count=[agent.memory.design.exploration_count for agent in agents],
                env_flag=int(result.env_flag),
                tau_end=coordinator.board.tau_end,
                phase_index=coordinator.board.phase_index,
                forced=int(result.forced),
                cusum_stat=[_cusum_statistic(agent) for agent in agents],
                detected=[int(d) for d in result.detections] if result.detections else 0,
                restarted=int(result.restarted),
                lambda_min=lam,
                lambda_bound=bound,
                direction_violations=dir_viol,
            )

    cd_h = cd_alpha = None
    if cusum is not None:
        cd_h, cd_alpha = cusum.h, cusum.alpha
    logger.info(
        f"Replication {replication} of '{instance.name}' with {algorithm.value}: "
        f"regret {ledger.total().sum():.3f}, {len(coordinator.restart_rounds)} restarts"
    )
    return ReplicationResult(
        replication=replication,
        cumulative=ledger.cumulative(),
        signed_total=ledger.signed_total(),
        class_counts=counts,
        gs_convergence_rounds=gs_rounds,
        exploration_phases=phases,
        spectral_violations=spectral_violations,
        direction_violations=direction_violations,
        pointer_wraps=sum(agent.pointer_wraps for agent in agents),
        restarts=list(coordinator.restart_rounds),
        restarts_synchronized=synchronized,
        change_points=list(instance.change_points),
        cd_h=cd_h,
        cd_alpha=cd_alpha,
        mu_max=ledger.mu_max,
        delta_max=ledger.delta_max,
        trace=buffer.to_frame() if buffer is not None else None,
    )


def _run_replication_args(args: tuple) -> ReplicationResult:
    schema, config, replication = args
    return run_replication(schema, config, replication)


class SimulationService:
    """Service for validating scenarios and running replications."""

    def validate(self, schema: ScenarioSchema, horizon: Optional[int] = None) -> ValidationReport:
        """Validate the scenario as materialized for ``horizon`` rounds."""
        return validate_scenario(schema.to_instance(horizon))

    def run(self, config: RunConfig, schema: Optional[ScenarioSchema] = None) -> RunResult:
        """
        Execute every replication of a run and summarize it.

        Args:
            config: run configuration
            schema: already resolved scenario; resolved from ``config.scenario`` when omitted

        Returns:
            RunResult with replications ordered by index

        Raises:
            InvalidScenarioError: if validation fails and is not skipped
            UnknownAlgorithmError: if the algorithm is not registered
        """
        # local import: summaries depend on the replication results defined here
        from matchmarket.services.summary_service import summarize

        agent_registry.get_agent_class(config.algorithm)
        if schema is None:
            schema = resolve_scenario(config.scenario, config.horizon, config.preset_params)
        report = None
        if not config.skip_validation:
            report = self.validate(schema, config.horizon)
            if not report.passed:
                raise InvalidScenarioError(
                    f"Scenario '{schema.name}' failed validation: {', '.join(report.clauses())}",
                    report,
                )
        logger.info(
            f"Running '{schema.name}' with {config.algorithm.value}: "
            f"{config.replications} replications, seed {config.seed}"
        )
        replications = self._run_all(schema, config)
        result = RunResult(config=config, scenario=schema, validation=report, replications=replications)
        result.summary = summarize(result)
        return result

    def _run_all(self, schema: ScenarioSchema, config: RunConfig) -> List[ReplicationResult]:
        workers = config.workers or settings.max_workers
        args_list = [(schema, config, r) for r in range(config.replications)]
        if workers <= 1 or config.replications == 1:
            return [_run_replication_args(args) for args in args_list]
        results = []
        with ProcessPoolExecutor(max_workers=workers) as executor:
            futures = {executor.submit(_run_replication_args, args): args[2] for args in args_list}
            for future in as_completed(futures):
                results.append(future.result())
        return sorted(results, key=lambda rep: rep.replication)
