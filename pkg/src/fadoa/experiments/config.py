"""Experiment configuration: a flat TOML file of ``key = value`` lines.

Unknown keys are rejected.  Every key is optional; defaults reproduce the
single end-fire source scenario (8x8 array, source at (86, 86), 500
snapshots, virtual angle (30, 30)).
"""
from __future__ import annotations

import dataclasses
import sys
from dataclasses import dataclass
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from ..array_model import AnglePair, ArrayGeometry
from ..errors import ConfigError
from ..signal_sim import SourceScenario

METHODS = ("fa", "music2d", "esprit", "omp", "crlb")
SWEEP_VARS = ("snr_db", "snapshots")


@dataclass(frozen=True)
class ExperimentConfig:
    n_x: int = 8
    n_z: int = 8
    spacing: float = 0.5
    wavelength: float = 1.0
    sources: tuple = ((86.0, 86.0),)
    snr_db: float = 10.0
    snapshots: int = 500
    seed: int = 2025
    virtual: tuple = (30.0, 30.0)
    sweep_var: str = "snr_db"
    snr_values: tuple = (-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0)
    snapshot_values: tuple = (50, 100, 200, 300, 400, 500)
    methods: tuple = METHODS
    trials: int = 100
    resolution_threshold_deg: float = 2.5
    fast: bool = False
    timing: bool = False
    out: str | None = None
    trials_out: str | None = None
    # estimator knobs; None keeps the library default
    candidate_radius_deg: float | None = None
    candidate_step_deg: float | None = None
    local_radius_deg: float | None = None
    local_step_deg: float | None = None
    refine_levels: int | None = None
    min_separation_deg: float | None = None

    def __post_init__(self):
        try:
            object.__setattr__(self, "sources", tuple(tuple(float(x) for x in s) for s in self.sources))
            object.__setattr__(self, "virtual", tuple(float(x) for x in self.virtual))
            object.__setattr__(self, "snr_values", tuple(float(x) for x in self.snr_values))
            object.__setattr__(self, "snapshot_values", tuple(int(x) for x in self.snapshot_values))
            object.__setattr__(self, "methods", tuple(str(m).strip().lower() for m in self.methods))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"malformed config value: {exc}") from exc
        self._validate()

    def _validate(self):
        if self.trials < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials}")
        if self.resolution_threshold_deg <= 0:
            raise ConfigError("resolution_threshold_deg must be positive")
        if self.sweep_var not in SWEEP_VARS:
            raise ConfigError(f"sweep_var must be one of {SWEEP_VARS}, got {self.sweep_var!r}")
        if not self.sweep_values:
            raise ConfigError(f"no values to sweep for {self.sweep_var}")
        if self.sweep_var == "snapshots" and min(self.sweep_values) < 1:
            raise ConfigError("snapshot counts must be >= 1")
        bad = [m for m in self.methods if m not in METHODS]
        if bad or not self.methods:
            raise ConfigError(f"unknown methods {bad}; choose from {', '.join(METHODS)}")
        if not self.sources or any(len(s) != 2 for s in self.sources):
            raise ConfigError("sources must be a list of [theta, phi] pairs")
        if len(self.virtual) != 2:
            raise ConfigError("virtual must be a [theta, phi] pair")
        try:
            self.geometry()
            self.scenario()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if len(self.sources) > self.n_x * self.n_z - 1:
            raise ConfigError("too many sources for the array size")

    @property
    def sweep_values(self) -> tuple:
        return self.snr_values if self.sweep_var == "snr_db" else self.snapshot_values

    def geometry(self) -> ArrayGeometry:
        return ArrayGeometry(self.n_x, self.n_z, self.spacing, self.wavelength)

    def scenario(self, sweep_value=None) -> SourceScenario:
        snr, snaps = self.snr_db, self.snapshots
        if sweep_value is not None:
            if self.sweep_var == "snr_db":
                snr = float(sweep_value)
            else:
                snaps = int(sweep_value)
        return SourceScenario(tuple(AnglePair(*s) for s in self.sources), snr, snaps, self.seed)

    def virtual_angle(self) -> AnglePair:
        return AnglePair(*self.virtual)

    def search_params(self):
        from ..fa_pipeline import SearchParams

        knobs = {
            f.name: getattr(self, f.name)
            for f in dataclasses.fields(SearchParams)
            if hasattr(self, f.name) and getattr(self, f.name) is not None
        }
        return SearchParams.fast(**knobs) if self.fast and "candidate_step_deg" not in knobs else SearchParams(**knobs)

    def replace(self, **changes) -> ExperimentConfig:
        return dataclasses.replace(self, **{k: v for k, v in changes.items() if v is not None})

    @classmethod
    def from_mapping(cls, data: dict) -> ExperimentConfig:
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_file(cls, path) -> ExperimentConfig:
        try:
            with open(Path(path), "rb") as fh:
                data = tomllib.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"bad config {path}: {exc}") from exc
        nested = [k for k, v in data.items() if isinstance(v, dict)]
        if nested:
            raise ConfigError(f"config must be flat; found tables {nested}")
        return cls.from_mapping(data)
