"""Experiment configuration, presets, snapshot I/O and the command line."""

from .config import METHODS, ExperimentConfig, QuadratureSpec, RungSpec, load_config, parse_config
from .defaults import default_config
from .experiment import ExperimentResult, prepare_case, run_experiment, run_reference, write_outputs
from .moment_io import Snapshot, compare_snapshots, read_snapshot, write_snapshot
from .presets import PRESETS, Case, build_preset, preset_names

__all__ = [
    "METHODS",
    "ExperimentConfig",
    "QuadratureSpec",
    "RungSpec",
    "load_config",
    "parse_config",
    "default_config",
    "ExperimentResult",
    "prepare_case",
    "run_experiment",
    "run_reference",
    "write_outputs",
    "Snapshot",
    "compare_snapshots",
    "read_snapshot",
    "write_snapshot",
    "PRESETS",
    "Case",
    "build_preset",
    "preset_names",
]
