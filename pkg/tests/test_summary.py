"""
Tests for regret checkpoints, the logarithmic fit and detection statistics.
"""

from types import SimpleNamespace

import numpy as np
import pytest

from matchmarket.services.summary_service import (
    attribute_detections,
    checkpoint_table,
    detection_stats,
    fit_log_regret,
    log_checkpoints,
    regret_curve_frame,
)


def test_log_checkpoints_end_at_horizon():
    """Test checkpoints are increasing, start at 1 and end at T."""
    points = log_checkpoints(1000, 12)
    assert points[0] == 1
    assert points[-1] == 1000
    assert points == sorted(set(points))


def test_log_checkpoints_short_horizon():
    """Test a tiny horizon still yields its last round."""
    assert log_checkpoints(3, 50) == [1, 2, 3]


def test_fit_constant_curve():
    """Test a flat regret curve has zero slope."""
    fit = fit_log_regret([10, 100, 1000, 10000], [5.0] * 4)
    assert fit.b == 0.0
    assert fit.a == 5.0
    assert fit.r_squared == 1.0


def test_fit_recovers_log_slope():
    """Test c log t is fitted with slope c."""
    t = np.array(log_checkpoints(100_000, 30), dtype=float)
    fit = fit_log_regret(t, 3.0 + 7.5 * np.log(t))
    assert fit.b == pytest.approx(7.5)
    assert fit.a == pytest.approx(3.0)
    assert fit.r_squared == pytest.approx(1.0)


def test_fit_burn_in_and_few_points():
    """Test early rounds are dropped and short curves are not fitted."""
    assert fit_log_regret([1, 2], [0.0, 1.0]) is None
    fit = fit_log_regret([1, 10, 100, 1000, 10000], [50.0, 1.0, 2.0, 3.0, 4.0], burn_in=10)
    assert fit.n_points == 4
    assert fit.b > 0


def test_checkpoint_table_single_replication():
    """Test one replication gives quantiles equal to its own regret."""
    curves = np.cumsum(np.ones((1, 10, 2)), axis=1)
    (row,) = checkpoint_table(curves, [5])
    assert row.round == 5
    assert row.mean == row.q10 == row.q50 == row.q90 == 10.0
    assert row.per_agent_mean == [5.0, 5.0]


def test_checkpoint_table_quantiles():
    """Test quantiles across replications of total regret."""
    curves = np.zeros((5, 4, 1))
    curves[:, -1, 0] = [1.0, 2.0, 3.0, 4.0, 5.0]
    (row,) = checkpoint_table(curves, [4])
    assert row.q50 == 3.0
    assert row.q10 == pytest.approx(1.4)
    assert row.q90 == pytest.approx(4.6)


def test_regret_curve_frame_columns():
    """Test the curve file has total and per-agent regret."""
    curves = np.cumsum(np.ones((2, 6, 2)), axis=1)
    frame = regret_curve_frame(curves, [1, 6])
    assert list(frame.columns) == ["round", "regret", "regret_agent_0", "regret_agent_1"]
    assert frame["regret"].tolist() == [2.0, 12.0]


def test_attribute_detections():
    """Test first restarts after each change are detections and the rest false alarms."""
    delays, alarms = attribute_detections([100, 200], [90, 105, 150, 210])
    assert delays == [5, 10]
    assert alarms == 2


def test_attribute_detections_missed():
    """Test a change point with no restart before the next one is missed."""
    delays, alarms = attribute_detections([100, 200], [250])
    assert delays == [None, 50]
    assert alarms == 0


def test_detection_stats():
    """Test missed changes, delays and synchronization are aggregated."""
    reps = [
        SimpleNamespace(change_points=[100, 200], restarts=[110, 220], restarts_synchronized=True),
        SimpleNamespace(change_points=[100, 200], restarts=[130], restarts_synchronized=True),
    ]
    stats = detection_stats(reps)
    assert stats.missed == [0, 1]
    assert stats.false_alarms == [0, 0]
    assert stats.mean_delay == pytest.approx(20.0)
    assert stats.synchronized
    assert stats.detections == [[110, 220], [130]]
