"""
Tests for built-in scenarios and scenario files.
"""

import numpy as np
import pytest

from matchmarket.exceptions import ScenarioIOError
from matchmarket.models.presets import build_preset, is_preset, list_presets
from matchmarket.utils.file_utils import load_scenario_file, save_scenario_file


def test_list_presets():
    """Test every built-in scenario is listed."""
    names = {info.name for info in list_presets()}
    assert names == {
        "table1-counterexample",
        "sec4-delta-example",
        "uniform-gap-basic",
        "piecewise-stationary",
    }
    assert is_preset("uniform-gap-basic")
    assert not is_preset("uniform")


def test_unknown_preset():
    """Test unknown preset names raise KeyError."""
    with pytest.raises(KeyError):
        build_preset("no-such-preset")


def test_preset_rejects_foreign_params():
    """Test parameters a preset does not take are rejected."""
    with pytest.raises(ValueError):
        build_preset("uniform-gap-basic", delta=0.1)


@pytest.mark.parametrize("delta", [0.0, 1.0 / 3.0, 0.5])
def test_delta_out_of_range(delta):
    """Test delta must lie strictly between 0 and 1/3."""
    with pytest.raises(ValueError):
        build_preset("sec4-delta-example", delta=delta)


def test_period_must_be_positive():
    """Test the switch period must be at least one."""
    with pytest.raises(ValueError):
        build_preset("sec4-delta-example", period_c=0)


def test_default_horizons():
    """Test presets keep their default horizons unless overridden."""
    assert build_preset("uniform-gap-basic").horizon == 200_000
    assert build_preset("piecewise-stationary").horizon == 150_000
    assert build_preset("uniform-gap-basic", horizon=50).horizon == 50


def test_piecewise_change_points():
    """Test the latent vectors flip sign at T/4, T/2 and 3T/4."""
    instance = build_preset("piecewise-stationary", horizon=1000).to_instance()
    assert instance.change_points == [250, 500, 750]
    assert np.allclose(instance.theta_at(300), -instance.theta_at(100))
    assert np.allclose(instance.theta_at(600), instance.theta_at(100))
    assert np.allclose(instance.theta_at(1000), -instance.theta_at(1))


def test_uniform_features_give_target_means(uniform_instance):
    """Test <x_ij, theta_i> reproduces the uniform-gap means."""
    mu = uniform_instance.base_features_at(1)[0] @ uniform_instance.theta_at(1)[0]
    assert np.sort(mu)[::-1] == pytest.approx([3.0, 0.6, 0.4])


def test_scenario_file_roundtrip(tmp_path):
    """Test a saved scenario loads back unchanged."""
    schema = build_preset("sec4-delta-example", horizon=300, delta=0.05, period_c=4)
    path = save_scenario_file(schema, str(tmp_path / "nested" / "delta.json"))
    assert load_scenario_file(path) == schema


def test_scenario_file_errors(tmp_path):
    """Test missing files, wrong extensions and malformed JSON raise ScenarioIOError."""
    with pytest.raises(ScenarioIOError):
        load_scenario_file(str(tmp_path / "missing.json"))
    with pytest.raises(ScenarioIOError):
        load_scenario_file(str(tmp_path / "scenario.yaml"))
    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    with pytest.raises(ScenarioIOError):
        load_scenario_file(str(broken))
