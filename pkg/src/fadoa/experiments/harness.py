"""Monte Carlo sweeps and CSV output.

Each trial ``i`` of a sweep point draws its undisplaced-array data from
``substream(seed, i, 0)`` and reconfiguration ``k`` from
``substream(seed, i, k)``.  The baselines and the reconfigurable estimator's
prescan therefore see identical data, and results do not depend on
evaluation order.
"""
from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from ..array_model import AnglePair, ArrayGeometry, correlation_grid
from ..baselines import BASELINES, Method
from ..crlb import crlb_rmse
from ..fa_pipeline import SearchParams, SimulatedAcquisition, run_fa_estimator
from ..signal_sim import SourceScenario
from .config import ExperimentConfig
from .metrics import TrialRecord, aggregate_rmse, match_estimates, posr

log = logging.getLogger(__name__)

CSV_HEADER = "method,sweep_var,sweep_value,trials,rmse_deg,posr,mean_runtime_ms"


@dataclass(frozen=True)
class MetricsRow:
    method: str
    sweep_var: str
    sweep_value: float
    trials: int
    rmse_deg: float
    posr: float
    mean_runtime_ms: float = math.nan

    def to_csv(self) -> str:
        return (
            f"{self.method},{self.sweep_var},{self.sweep_value:.6f},{self.trials},"
            f"{self.rmse_deg:.6f},{self.posr:.6f},{self.mean_runtime_ms:.6f}"
        )


@dataclass
class MetricsTable:
    rows: list[MetricsRow]
    records: list[TrialRecord]

    def row(self, method: str, sweep_value: float) -> MetricsRow:
        for r in self.rows:
            if r.method == method and r.sweep_value == sweep_value:
                return r
        raise KeyError((method, sweep_value))

    def to_csv(self) -> str:
        return "\n".join([CSV_HEADER, *(r.to_csv() for r in self.rows)]) + "\n"

    def write_csv(self, path) -> None:
        Path(path).write_text(self.to_csv(), newline="\n")

    def write_trials_csv(self, path) -> None:
        lines = ["method,sweep_value,trial,success,errors_deg,estimates"]
        for r in self.records:
            errs = ";".join(f"{e:.6f}" for e in r.errors)
            ests = ";".join(f"{a.theta_deg:.6f}:{a.phi_deg:.6f}" for a in r.estimates)
            lines.append(f"{r.method},{r.sweep_value:.6f},{r.trial},{int(r.success)},{errs},{ests}")
        Path(path).write_text("\n".join(lines) + "\n", newline="\n")


def estimate_once(
    method: str,
    scenario: SourceScenario,
    geometry: ArrayGeometry,
    trial: int,
    virtual_angle: AnglePair,
    params: SearchParams,
    noise_scale: float = 1.0,
) -> list[AnglePair]:
    """Estimates produced by ``method`` on trial ``trial`` of ``scenario``."""
    acquire = SimulatedAcquisition(scenario, trial, noise_scale)
    base = geometry.fixed()
    if method == "fa":
        return run_fa_estimator(acquire, base, scenario.n_sources, virtual_angle, None, params).estimates
    return BASELINES[Method(method)](acquire(base, 0), base, scenario.n_sources).estimates


def run_trial(
    method: str,
    scenario: SourceScenario,
    geometry: ArrayGeometry,
    trial: int,
    sweep_value: float,
    virtual_angle: AnglePair,
    params: SearchParams,
    threshold_deg: float,
    timing: bool = False,
    noise_scale: float = 1.0,
) -> TrialRecord:
    t0 = time.perf_counter()
    estimates = estimate_once(method, scenario, geometry, trial, virtual_angle, params, noise_scale)
    elapsed = (time.perf_counter() - t0) * 1e3 if timing else math.nan
    errors, success = match_estimates(estimates, scenario.sources, threshold_deg)
    return TrialRecord(method, float(sweep_value), trial, tuple(estimates), tuple(errors), success, elapsed)


def summarize(method: str, sweep_var: str, sweep_value: float, records: Sequence[TrialRecord]) -> MetricsRow:
    records = sorted(records, key=lambda r: r.trial)
    errors = np.array([r.errors for r in records])
    runtime = float(np.mean([r.runtime_ms for r in records]))
    return MetricsRow(method, sweep_var, float(sweep_value), len(records), aggregate_rmse(errors), posr(records), runtime)


def run_sweep(config: ExperimentConfig, noise_scale: float = 1.0, progress=None) -> MetricsTable:
    """Run every method at every sweep value; writes CSV when ``config.out`` is set.

    ``crlb`` rows carry the analytic bound in ``rmse_deg`` with ``trials = 0``
    and ``nan`` for PoSR and runtime.
    """
    geometry = config.geometry()
    params = config.search_params()
    virtual = config.virtual_angle()
    rows: list[MetricsRow] = []
    records: list[TrialRecord] = []
    for value in config.sweep_values:
        scenario = config.scenario(value)
        for method in config.methods:
            if method == "crlb":
                bound = crlb_rmse(scenario, geometry.fixed())
                rows.append(MetricsRow(method, config.sweep_var, float(value), 0, bound, math.nan))
                continue
            recs = [
                run_trial(
                    method, scenario, geometry, i, value, virtual, params,
                    config.resolution_threshold_deg, config.timing, noise_scale,
                )
                for i in range(config.trials)
            ]
            row = summarize(method, config.sweep_var, value, recs)
            log.info("%s %s=%g rmse=%.4f posr=%.3f", method, config.sweep_var, value, row.rmse_deg, row.posr)
            if progress is not None:
                progress(row)
            rows.append(row)
            records.extend(recs)
    table = MetricsTable(rows, records)
    if config.out:
        table.write_csv(config.out)
    if config.trials_out:
        table.write_trials_csv(config.trials_out)
    return table


def correlation_map(
    true_angle: AnglePair,
    geometry: ArrayGeometry,
    theta_grid,
    phi_grid,
    path=None,
) -> np.ndarray:
    """Steering-vector correlation of ``true_angle`` against a theta x phi grid.

    Written as ``theta_deg,phi_deg,eta`` rows (theta-major) when ``path`` is given.
    """
    theta_grid = np.asarray(theta_grid, float)
    phi_grid = np.asarray(phi_grid, float)
    eta = correlation_grid(true_angle, geometry, theta_grid, phi_grid)
    if path is not None:
        lines = ["theta_deg,phi_deg,eta"]
        for i, t in enumerate(theta_grid):
            for j, p in enumerate(phi_grid):
                lines.append(f"{t:.6f},{p:.6f},{eta[i, j]:.9f}")
        Path(path).write_text("\n".join(lines) + "\n", newline="\n")
    return eta
