"""Experiment harness and command line interface."""

from .config import ExperimentConfig
from .experiments import (
    gaussian_kernel,
    run,
    run_bench,
    run_counterexample,
    run_lp_check,
    run_norm_ratio_probe,
    run_paraproduct_study,
)
from .report import render, to_csv, to_json, without_timing, write_report

__all__ = [
    "ExperimentConfig",
    "gaussian_kernel",
    "run",
    "run_bench",
    "run_counterexample",
    "run_lp_check",
    "run_norm_ratio_probe",
    "run_paraproduct_study",
    "render",
    "to_csv",
    "to_json",
    "without_timing",
    "write_report",
]
