"""Experiment harness: metrics, repeated-split runs, sweeps and diagnostics."""

from .biasvar import Decomposition, RegressionTask, bias_variance_diagnostic, bootstrap_polyfit, polynomial_task
from .experiment import (
    ExperimentConfig,
    ExperimentResult,
    multiplier_check,
    multiplier_verdict,
    run_experiment,
    sweep,
)
from .metrics import rmse, standard_error
from .storage import StorageRow, crossover_size, storage_report

__all__ = [
    "Decomposition", "RegressionTask", "bias_variance_diagnostic", "bootstrap_polyfit",
    "polynomial_task", "ExperimentConfig", "ExperimentResult", "multiplier_check",
    "multiplier_verdict", "run_experiment", "sweep", "rmse", "standard_error", "StorageRow",
    "crossover_size", "storage_report",
]
