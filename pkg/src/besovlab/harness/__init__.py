"""Experiment configuration, orchestration and report emission."""

from .config import (
    BesovQuery, ExperimentConfig, LndSettings, LocalTimeSettings, config_hash, load_config, parse_config,
)
from .report import emit_report, read_profiles_csv
from .runner import ReplicateRecord, ReportBundle, aggregate, max_threads, run_experiment

__all__ = [
    "BesovQuery", "ExperimentConfig", "LndSettings", "LocalTimeSettings", "ReplicateRecord", "ReportBundle",
    "aggregate", "config_hash", "emit_report", "load_config", "max_threads", "parse_config",
    "read_profiles_csv", "run_experiment",
]
