"""Experiment configuration, Monte Carlo sweeps, statistics and output."""

from .config import EXPERIMENTS, ConfigError, ExperimentConfig, config_from_dict, default_config, load_config
from .experiments import run_experiment
from .results import curves_to_csv, plot_data, read_curves, write_results
from .stats import CurvePoint, RateCurve, measure_dof, summarize

__all__ = [
    "EXPERIMENTS",
    "ConfigError",
    "CurvePoint",
    "ExperimentConfig",
    "RateCurve",
    "config_from_dict",
    "curves_to_csv",
    "default_config",
    "load_config",
    "measure_dof",
    "plot_data",
    "read_curves",
    "run_experiment",
    "summarize",
    "write_results",
]
