"""
Aggregation of replications into a run summary: regret quantiles at
checkpoints, the logarithmic regret fit, round-class totals and change
detection statistics.
"""

import logging
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import stats

from matchmarket.config import settings
from matchmarket.models.run import Algorithm, RoundClass
from matchmarket.schemas.run import CheckpointStats, DetectionStats, LogFit, RunSummary
from matchmarket.services.bounds import bound_diagnostics

logger = logging.getLogger(__name__)


def log_checkpoints(horizon: int, count: Optional[int] = None) -> List[int]:
    """Roughly log-spaced distinct rounds in ``[1, horizon]``, always ending at ``horizon``."""
    count = count or settings.checkpoint_count
    points = np.unique(np.geomspace(1, horizon, num=max(count, 2)).round().astype(int))
    points = points[(points >= 1) & (points <= horizon)]
    if points[-1] != horizon:
        points = np.append(points, horizon)
    return points.tolist()


def fit_log_regret(
    rounds: Sequence[float], regret: Sequence[float], burn_in: Optional[float] = None
) -> Optional[LogFit]:
    """
    Least-squares fit of ``regret ~ a + b log t``.

    Args:
        rounds: checkpoint rounds
        regret: regret at those rounds
        burn_in: absolute round below which points are dropped

    Returns:
        LogFit, or None with fewer than three usable points
    """
    t = np.asarray(rounds, dtype=float)
    y = np.asarray(regret, dtype=float)
    keep = t >= (burn_in or 1.0)
    t, y = t[keep], y[keep]
    if t.size < 3:
        return None
    x = np.log(t)
    if np.ptp(y) == 0.0:
        return LogFit(a=float(y[0]), b=0.0, r_squared=1.0, n_points=int(t.size))
    fit = stats.linregress(x, y)
    return LogFit(
        a=float(fit.intercept), b=float(fit.slope), r_squared=float(fit.rvalue ** 2), n_points=int(t.size)
    )


def checkpoint_table(curves: np.ndarray, checkpoints: Sequence[int]) -> List[CheckpointStats]:
    """
    Regret quantiles across replications.

    Args:
        curves: ``(R, T, N)`` cumulative regret per replication
        checkpoints: 1-based rounds

    Returns:
        One CheckpointStats per checkpoint
    """
    rows = []
    for t in checkpoints:
        at_t = curves[:, t - 1, :]
        totals = pd.Series(at_t.sum(axis=1))
        q = totals.quantile([0.1, 0.5, 0.9])
        rows.append(
            CheckpointStats(
                round=int(t),
                mean=float(totals.mean()),
                q10=float(q.loc[0.1]),
                q50=float(q.loc[0.5]),
                q90=float(q.loc[0.9]),
                per_agent_mean=at_t.mean(axis=0).tolist(),
            )
        )
    return rows


def attribute_detections(
    change_points: Sequence[int], restarts: Sequence[int]
) -> Tuple[List[Optional[int]], int]:
    """
    Pair restarts with the change points they detect.

    The first restart at or after a change point and before the next one is
    its detection; every other restart is a false alarm.

    Returns:
        (delay per change point or None when missed, false alarm count)
    """
    bounds = list(change_points) + [math.inf]
    delays: List[Optional[int]] = [None] * len(change_points)
    false_alarms = 0
    for r in sorted(restarts):
        slot = next((k for k in range(len(change_points)) if change_points[k] <= r < bounds[k + 1]), None)
        if slot is None or delays[slot] is not None:
            false_alarms += 1
        else:
            delays[slot] = r - change_points[slot]
    return delays, false_alarms


def detection_stats(replications: Sequence) -> DetectionStats:
    change_points = list(replications[0].change_points)
    all_delays: List[int] = []
    missed, false_alarms = [], []
    for rep in replications:
        delays, alarms = attribute_detections(change_points, rep.restarts)
        all_delays.extend(d for d in delays if d is not None)
        missed.append(sum(d is None for d in delays))
        false_alarms.append(alarms)
    return DetectionStats(
        true_change_points=change_points,
        detections=[list(rep.restarts) for rep in replications],
        mean_delay=float(np.mean(all_delays)) if all_delays else None,
        missed=missed,
        false_alarms=false_alarms,
        synchronized=all(rep.restarts_synchronized for rep in replications),
    )


def regret_curve_frame(curves: np.ndarray, checkpoints: Sequence[int]) -> pd.DataFrame:
    """Seed-mean cumulative regret at every checkpoint, total and per agent."""
    idx = np.asarray(checkpoints) - 1
    mean = curves.mean(axis=0)[idx]
    frame = pd.DataFrame({"round": np.asarray(checkpoints), "regret": mean.sum(axis=1)})
    for i in range(mean.shape[1]):
        frame[f"regret_agent_{i}"] = mean[:, i]
    return frame


def summarize(result) -> RunSummary:
    """
    Summarize all replications of a run.

    Args:
        result: RunResult with at least one replication

    Returns:
        RunSummary
    """
    reps = result.replications
    if not reps:
        raise ValueError("Cannot summarize a run without replications")
    config = result.config
    curves = np.stack([rep.cumulative for rep in reps])
    horizon = curves.shape[1]
    checkpoints = sorted({t for t in (config.checkpoints or log_checkpoints(horizon)) if 1 <= t <= horizon})
    table = checkpoint_table(curves, checkpoints)
    fit = fit_log_regret(
        [row.round for row in table],
        [row.mean for row in table],
        burn_in=settings.burn_in_fraction * horizon,
    )

    instance = result.scenario.to_instance(config.horizon)
    n_envs, n_agents = instance.n_envs, instance.n_agents

    def class_mean(cls: RoundClass) -> float:
        return float(np.mean([rep.class_counts[cls.value].sum() for rep in reps]))

    detection = None
    if config.algorithm == Algorithm.CDETPGS or instance.change_points:
        detection = detection_stats(reps)

    finals = [float(rep.cumulative[-1].sum()) for rep in reps]
    summary = RunSummary(
        scenario=result.scenario.name,
        config=config,
        horizon=horizon,
        checkpoints=table,
        log_fit=fit,
        final_regret_mean=float(np.mean(finals)),
        final_regret_per_replication=finals,
        signed_regret_mean=float(np.mean([rep.signed_total.sum() for rep in reps])),
        exploration_rounds_mean=class_mean(RoundClass.EXPLORE),
        gs_rounds_mean=float(np.mean([rep.gs_convergence_rounds for rep in reps])),
        violation_rounds_mean=class_mean(RoundClass.VIOLATION),
        gs_round_budget=n_envs * n_agents ** 2,
        exploration_phases_mean=float(np.mean([rep.exploration_phases for rep in reps])),
        spectral_violations=int(sum(rep.spectral_violations for rep in reps)),
        direction_violations_mean=float(np.mean([rep.direction_violations for rep in reps])),
        pointer_wraps=int(sum(rep.pointer_wraps for rep in reps)),
        detection=detection,
        bounds=_bounds(instance, reps),
    )
    logger.info(
        f"Summary of '{summary.scenario}': mean regret {summary.final_regret_mean:.3f} "
        f"over {len(reps)} replications"
    )
    return summary


def _bounds(instance, reps) -> dict:
    out = {k: float(v) for k, v in bound_diagnostics(instance).items() if math.isfinite(v)}
    mu_max = np.max([rep.mu_max for rep in reps if rep.mu_max is not None], axis=0)
    delta_max = np.max([rep.delta_max for rep in reps if rep.delta_max is not None], axis=0)
    for i, (mu, delta) in enumerate(zip(mu_max, delta_max)):
        out[f"mu_max_agent_{i}"] = float(mu)
        out[f"delta_max_agent_{i}"] = float(delta)
    if reps[0].cd_h is not None:
        out["cd_h"] = float(reps[0].cd_h)
        out["cd_alpha"] = float(reps[0].cd_alpha)
    return out
