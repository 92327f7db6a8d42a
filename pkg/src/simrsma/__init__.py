"""Stacked-metasurface RSMA downlink: channel model, max-min optimisers, baselines."""

__version__ = "0.1.0"

from .config import ConfigError, SystemConfig
from .geometry import ChannelRealization, Geometry, build_geometry, realize
from .harness import ExperimentSpec, TrialResult, emit_csv, run_sweep, run_trial
from .kernels import BACKEND
from .rates import PowerAllocation, RateReport, jain_index, rate_report
from .schemes import SCHEMES, Solution, solve

__all__ = [
    "BACKEND", "ChannelRealization", "ConfigError", "ExperimentSpec", "Geometry",
    "PowerAllocation", "RateReport", "SCHEMES", "Solution", "SystemConfig", "TrialResult",
    "build_geometry", "emit_csv", "jain_index", "rate_report", "realize", "run_sweep",
    "run_trial", "solve",
]
