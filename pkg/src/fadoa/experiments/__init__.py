"""Monte Carlo harness, metrics, configuration and CLI."""
from .config import ExperimentConfig
from .harness import MetricsRow, MetricsTable, correlation_map, run_sweep
from .metrics import TrialRecord, aggregate_rmse, match_estimates, posr, rmse

__all__ = [
    "ExperimentConfig",
    "MetricsRow",
    "MetricsTable",
    "TrialRecord",
    "aggregate_rmse",
    "correlation_map",
    "match_estimates",
    "posr",
    "rmse",
    "run_sweep",
]
