"""
Tests for run configuration loading.
"""

import os
import tempfile

import pytest

from cavity_qubit_analyzer.errors import ConfigError
from cavity_qubit_analyzer.utils.config import CONFIG_ENV, RunConfig, load_config


@pytest.fixture
def config_path():
    """Create a temporary config file."""
    text = "\n".join(
        [
            "# lab defaults",
            "[purcell]",
            "alpha = 0.05",
            "",
            "[fit]",
            "interval = sd",
            "max_iterations = 50",
            "simulation.seed = 12  # dotted keys work anywhere",
        ]
    )
    with tempfile.NamedTemporaryFile("w", suffix=".cfg", delete=False) as f:
        f.write(text + "\n")
        temp_path = f.name

    yield temp_path

    # Clean up
    os.unlink(temp_path)


def test_defaults():
    config = RunConfig()
    assert config.purcell.alpha == 0.053
    assert config.spin.gamma == 2.8
    assert config.spin.preset_d("nanobeam-hh") == 1328.0
    assert config.fit.max_iterations == 200
    assert config.fit.interval == "ci95"
    assert config.simulation.seed == 0


def test_load_file(config_path):
    config = RunConfig.load(config_path)
    assert config.purcell.alpha == 0.05
    assert config.fit.interval == "sd"
    assert config.fit.max_iterations == 50
    assert config.simulation.seed == 12


def test_precedence(config_path):
    """CLI value > config file > built-in default."""
    config = RunConfig.load(config_path)
    assert config.resolve("purcell", "alpha", 0.06) == 0.06
    assert config.resolve("purcell", "alpha") == 0.05
    assert config.resolve("spin", "gamma") == 2.8
    with pytest.raises(ConfigError):
        config.resolve("spin", "zeta")


def test_bare_keys():
    config = RunConfig.from_text("linewidth = 4.5\ndeshelve = 0.02\n")
    assert config.spin.linewidth == 4.5
    assert config.emitter.deshelve == 0.02


def test_unknown_key_suggests():
    with pytest.raises(ConfigError) as excinfo:
        RunConfig.from_text("[purcell]\nalhpa = 0.05\n")
    assert "purcell.alpha" in str(excinfo.value)


def test_unknown_section():
    with pytest.raises(ConfigError) as excinfo:
        RunConfig.from_text("[purcel]\nalpha = 0.05\n")
    assert "purcell" in str(excinfo.value)


def test_invalid_values():
    with pytest.raises(ConfigError):
        RunConfig.from_text("purcell.alpha = 1.5\n")
    with pytest.raises(ConfigError):
        RunConfig.from_text("fit.interval = ci99\n")
    with pytest.raises(ConfigError):
        RunConfig.from_text("just some words\n")


def test_missing_file():
    with pytest.raises(ConfigError):
        RunConfig.load("/nonexistent/analyzer.cfg")


def test_load_config_from_environment(config_path, monkeypatch):
    monkeypatch.setenv(CONFIG_ENV, config_path)
    assert load_config().purcell.alpha == 0.05
    monkeypatch.delenv(CONFIG_ENV)
    assert load_config().purcell.alpha == 0.053


def test_student_t_interval_accepted():
    config = RunConfig.from_text("[fit]\ninterval = t95\n")
    assert config.fit.interval == "t95"
