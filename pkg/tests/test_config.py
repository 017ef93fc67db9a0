"""Tests for configuration loading, validation and the example file."""

import tempfile
from pathlib import Path

import pytest
import yaml

from pitrace.config import (
    PitraceConfig,
    RunDefaults,
    create_example_config,
    load_config,
    save_config,
)
from pitrace.errors import PitraceError


@pytest.fixture
def temp_config_dir():
    """Create a temporary directory for config files."""
    with tempfile.TemporaryDirectory() as tmpdir:
        yield tmpdir


def write_yaml(directory, data) -> str:
    path = Path(directory) / "config.yaml"
    with open(path, "w") as f:
        yaml.dump(data, f)
    return str(path)


class TestLoadConfig:
    def test_missing_file_gives_defaults(self, temp_config_dir, monkeypatch):
        monkeypatch.delenv("PITRACE_OUTPUT_DIR", raising=False)
        config = load_config(str(Path(temp_config_dir) / "absent.yaml"))
        assert config.output_dir == "."
        assert config.run.criterion == "total"
        assert config.run.max_iterations is None
        assert config.verify.tier == 1

    def test_output_dir_from_environment(self, temp_config_dir, monkeypatch):
        monkeypatch.setenv("PITRACE_OUTPUT_DIR", "/data/out")
        path = write_yaml(temp_config_dir, {"log_level": "DEBUG"})
        assert load_config(path).output_dir == "/data/out"

    def test_file_overrides_environment(self, temp_config_dir, monkeypatch):
        monkeypatch.setenv("PITRACE_OUTPUT_DIR", "/data/out")
        path = write_yaml(temp_config_dir, {"output_dir": "results"})
        assert load_config(path).output_dir == "results"

    def test_sections(self, temp_config_dir):
        path = write_yaml(
            temp_config_dir,
            {
                "run": {"criterion": "average", "tie_mode": "strict", "max_iterations": 50},
                "bench": {"format": "json", "workers": 4},
                "verify": {"tier": 2},
            },
        )
        config = load_config(path)
        assert config.run == RunDefaults("average", "strict", True, 50)
        assert config.bench.format == "json"
        assert config.bench.workers == 4
        assert config.verify.tier == 2

    def test_empty_file(self, temp_config_dir):
        path = Path(temp_config_dir) / "config.yaml"
        path.write_text("")
        assert load_config(str(path)).log_level == "INFO"

    @pytest.mark.parametrize(
        "data",
        [
            {"run": {"criterion": "discounted"}},
            {"run": {"tie_mode": "random"}},
            {"run": {"max_iterations": 0}},
            {"run": {"unknown": 1}},
            {"bench": {"format": "xml"}},
            {"bench": {"workers": 0}},
            {"verify": {"tier": 3}},
            {"log_level": "CHATTY"},
        ],
    )
    def test_invalid_values(self, temp_config_dir, data):
        path = write_yaml(temp_config_dir, data)
        with pytest.raises(PitraceError, match="Failed to load configuration"):
            load_config(path)


def test_save_and_load_round_trip(temp_config_dir):
    config = PitraceConfig(output_dir="out", log_level="WARNING")
    config.run.criterion = "average"
    config.bench.workers = 3
    path = save_config(config, str(Path(temp_config_dir) / "nested" / "config.yaml"))
    assert load_config(str(path)) == config


def test_example_config_is_loadable(temp_config_dir):
    path = create_example_config(str(Path(temp_config_dir) / "example.yaml"))
    config = load_config(str(path))
    assert config.output_dir == "./pitrace-out"
    assert config.run.tie_mode == "lowest"
    assert config.bench.format == "csv"


def test_shipped_example_config_is_loadable():
    shipped = Path(__file__).parent.parent / "configs" / "example.yaml"
    config = load_config(str(shipped))
    assert config.verify.tier in (1, 2)
