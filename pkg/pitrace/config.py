"""
Configuration file for pitrace defaults.
"""

import logging
import os
import platform
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import yaml

from .constants import DEFAULT_OUTPUT_DIR, OUTPUT_DIR_ENV, Criterion, TieMode
from .errors import PitraceError

logger = logging.getLogger(__name__)

BENCH_FORMATS = ("csv", "json")


@dataclass
class RunDefaults:
    """Defaults for the run subcommand."""

    criterion: str = "total"  # total, average
    tie_mode: str = "lowest"  # lowest, strict
    record_values: bool = True
    max_iterations: Optional[int] = None  # None = 16 * 2^n + 64, or 10^6 for files


@dataclass
class BenchDefaults:
    """Defaults for the bench subcommand."""

    criterion: str = "total"
    format: str = "csv"  # csv, json
    workers: int = 1
    record_values: bool = False


@dataclass
class VerifyDefaults:
    tier: int = 1  # 1 = strict checks, 2 = also per-iteration oracle matching


@dataclass
class PitraceConfig:
    """Main configuration."""

    output_dir: str = field(
        default_factory=lambda: os.getenv(OUTPUT_DIR_ENV, DEFAULT_OUTPUT_DIR)
    )
    log_level: str = "INFO"
    log_file: Optional[str] = None
    run: RunDefaults = field(default_factory=RunDefaults)
    bench: BenchDefaults = field(default_factory=BenchDefaults)
    verify: VerifyDefaults = field(default_factory=VerifyDefaults)


def get_default_config_path() -> Path:
    """Get the default configuration file path."""
    home = Path.home()

    if platform.system() == "Darwin":
        return home / "Library" / "Application Support" / "pitrace" / "config.yaml"
    else:
        return home / ".config" / "pitrace" / "config.yaml"


def _check(config: PitraceConfig) -> None:
    for section in (config.run, config.bench):
        Criterion(section.criterion)
    TieMode(config.run.tie_mode)
    if config.bench.format not in BENCH_FORMATS:
        raise ValueError(f"bench.format must be one of {BENCH_FORMATS}")
    if config.bench.workers < 1:
        raise ValueError("bench.workers must be at least 1")
    if config.verify.tier not in (1, 2):
        raise ValueError("verify.tier must be 1 or 2")
    max_iterations = config.run.max_iterations
    if max_iterations is not None and max_iterations < 1:
        raise ValueError("run.max_iterations must be at least 1")
    if not isinstance(logging.getLevelName(config.log_level.upper()), int):
        raise ValueError(f"Unknown log_level {config.log_level!r}")


def load_config(config_path: Optional[str] = None) -> PitraceConfig:
    """Load configuration from a YAML file; a missing file yields the defaults."""
    explicit = config_path is not None
    if config_path is None:
        config_path = get_default_config_path()
    else:
        config_path = Path(config_path)

    if not config_path.exists():
        if explicit:
            logger.warning(f"Config file {config_path} not found, using defaults")
        return PitraceConfig()

    try:
        with open(config_path, "r") as f:
            data = yaml.safe_load(f) or {}

        config = PitraceConfig(
            log_level=data.get("log_level", "INFO"),
            log_file=data.get("log_file"),
            run=RunDefaults(**data.get("run", {})),
            bench=BenchDefaults(**data.get("bench", {})),
            verify=VerifyDefaults(**data.get("verify", {})),
        )
        if data.get("output_dir"):
            config.output_dir = str(data["output_dir"])
        _check(config)
        return config

    except Exception as e:
        raise PitraceError(f"Failed to load configuration from {config_path}: {e}")


def save_config(config: PitraceConfig, config_path: Optional[str] = None) -> Path:
    """Save configuration to a YAML file."""
    if config_path is None:
        config_path = get_default_config_path()
    else:
        config_path = Path(config_path)

    config_path.parent.mkdir(parents=True, exist_ok=True)
    with open(config_path, "w") as f:
        yaml.dump(asdict(config), f, default_flow_style=False, indent=2, sort_keys=False)
    return config_path


def create_example_config(config_path: str) -> Path:
    """Write a commented example configuration."""
    example = """# pitrace configuration
# Flags given on the command line override these values.

# Where generate/run/verify write files when no explicit path is given.
# Falls back to $PITRACE_OUTPUT_DIR, then the current directory.
output_dir: ./pitrace-out

log_level: INFO
# log_file: /tmp/pitrace.log

run:
  criterion: total  # total, average
  tie_mode: lowest  # lowest, strict
  record_values: true
  max_iterations: null  # null = 16 * 2^n + 64 for generated instances

bench:
  criterion: total
  format: csv  # csv, json
  workers: 1
  record_values: false

verify:
  tier: 1  # 1 = milestones, assumptions, closed forms, monotonicity; 2 = + phase audit
"""
    path = Path(config_path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(example)
    return path
