"""DOA estimation with a y-reconfigurable array by virtual-angle verification.

For each candidate true angle on a search grid the array is displaced so that
a source at that candidate would look, to the undisplaced grid manifold,
exactly like a source at a benign preset *virtual* angle.  Snapshots are
acquired in that configuration, MUSIC is run in a small neighbourhood of the
virtual angle, and the candidate is scored by how far the recovered peak sits
from the virtual angle.  The ``L`` best-scoring candidates are the estimate.

The estimator never sees the true source angles: data comes from an
*acquisition* callable ``acquire(geometry, k) -> SnapshotMatrix``.
:class:`SimulatedAcquisition` provides one backed by :mod:`fadoa.signal_sim`.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .array_model import AnglePair, ArrayGeometry, manifold, solve_y_displacements, steering_function
from .errors import EmptyTrajectory, SingularTrueAngle
from .signal_sim import SnapshotMatrix, SourceScenario, generate_snapshots, substream
from .subspace import (
    ANGLE_DOMAIN,
    SearchGrid,
    find_top_peaks,
    global_search_grid,
    local_axis,
    local_grid,
    sample_covariance,
    subspace_split,
)

log = logging.getLogger(__name__)

DEFAULT_VIRTUAL = AnglePair(30.0, 30.0)

Acquire = Callable[[ArrayGeometry, int], SnapshotMatrix]


@dataclass(frozen=True)
class SearchParams:
    """Grid and selection settings for the reconfigurable-array estimator.

    ``refine_levels`` extra passes around the local peak each shrink the step
    tenfold (radius = previous step).  Candidates differing only in azimuth
    near end-fire move the virtual peak by a few hundredths of a degree per
    degree, which a 0.1 degree search alone cannot separate.
    """

    local_radius_deg: float = 2.0
    local_step_deg: float = 0.1
    refine_levels: int = 2
    candidate_radius_deg: float = 5.0
    candidate_step_deg: float = 0.1
    prescan_step_deg: float = 1.0
    end_fire_threshold_deg: float = 80.0
    min_separation_deg: float = 2.5
    virtual_max_deg: float = 70.0
    virtual_margin_deg: float = 10.0
    domain: tuple = ANGLE_DOMAIN

    @classmethod
    def fast(cls, **overrides) -> SearchParams:
        """Coarse 1 degree candidate grid; bounds the reconfiguration count."""
        return cls(candidate_step_deg=1.0, **overrides)


@dataclass(frozen=True)
class TrajectoryEntry:
    k: int
    candidate_true_angle: AnglePair
    y_displacements: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class ConfigScore:
    k: int
    measured_peak: AnglePair
    epsilon: float


@dataclass(frozen=True)
class PrescanPeak:
    angle: AnglePair
    end_fire: bool


@dataclass
class FaEstimate:
    estimates: list[AnglePair]
    scores: list[ConfigScore]
    virtual_angle: AnglePair
    trajectory: list[TrajectoryEntry] = field(default_factory=list, repr=False)
    prescan: list[PrescanPeak] = field(default_factory=list)
    #: fewer than L candidates satisfied the separation constraint
    padded: bool = False


def validate_virtual_angle(virtual_angle: AnglePair, params: SearchParams = SearchParams()) -> None:
    for name, value, (lo, hi) in (
        ("theta", virtual_angle.theta_deg, params.domain[0]),
        ("phi", virtual_angle.phi_deg, params.domain[1]),
    ):
        if value > params.virtual_max_deg:
            raise ValueError(f"virtual {name} = {value} lies in the end-fire region (> {params.virtual_max_deg})")
        if value < lo + params.virtual_margin_deg or value > hi - params.virtual_margin_deg:
            raise ValueError(f"virtual {name} = {value} is within {params.virtual_margin_deg} deg of the domain edge")


def build_trajectory(
    search_grid: Sequence[AnglePair],
    virtual_angle: AnglePair,
    geometry: ArrayGeometry,
    params: SearchParams = SearchParams(),
) -> list[TrajectoryEntry]:
    """One displacement configuration per non-singular grid candidate, ``k = 1..K``."""
    validate_virtual_angle(virtual_angle, params)
    if not search_grid:
        raise ValueError("search grid is empty")
    entries = []
    for cand in search_grid:
        try:
            dy = solve_y_displacements(cand, virtual_angle, geometry)
        except SingularTrueAngle:
            log.info("skipping singular candidate %s", cand)
            continue
        entries.append(TrajectoryEntry(len(entries) + 1, cand, dy))
    if not entries:
        raise EmptyTrajectory("every candidate in the search grid is singular")
    return entries


def coarse_prescan(
    Y_upa: SnapshotMatrix,
    geometry: ArrayGeometry,
    n_sources: int,
    params: SearchParams = SearchParams(),
) -> list[PrescanPeak]:
    """Conventional MUSIC on undisplaced-array data; flags end-fire peaks."""
    if n_sources < 1:
        raise ValueError("need at least one source")
    dec = subspace_split(sample_covariance(Y_upa), n_sources)
    spectrum = global_search_grid(geometry, params.prescan_step_deg, params.domain).spectrum(dec)
    thr = params.end_fire_threshold_deg
    return [
        PrescanPeak(a, a.theta_deg >= thr or a.phi_deg >= thr) for a in find_top_peaks(spectrum, n_sources).angles
    ]


def candidate_grid(centers: Sequence[AnglePair], params: SearchParams = SearchParams()) -> list[AnglePair]:
    """Union of square windows around ``centers`` on the candidate lattice.

    Window centres snap to multiples of ``candidate_step_deg`` so that the
    lattice is shared between windows; output is sorted by (theta, phi).
    """
    step = params.candidate_step_deg
    points = set()
    for c in centers:
        axes = []
        for value, bounds in zip(c, params.domain):
            snapped = round(value / step) * step
            axes.append(local_axis(snapped, params.candidate_radius_deg, step, bounds))
        for t in axes[0]:
            for p in axes[1]:
                points.add((round(float(t), 9), round(float(p), 9)))
    return [AnglePair(t, p) for t, p in sorted(points)]


def _refined_peak(dec, coarse: SearchGrid, params: SearchParams, virtual_fn) -> AnglePair:
    peak, _ = coarse.argmax(dec)
    step = params.local_step_deg
    for _ in range(params.refine_levels):
        fine = step / 10.0
        peak, _ = local_grid(peak, step, fine, virtual_fn, params.domain).argmax(dec)
        step = fine
    return peak


def score_configuration(
    Y: SnapshotMatrix,
    n_sources: int,
    virtual_angle: AnglePair,
    coarse: SearchGrid,
    params: SearchParams,
    virtual_fn,
    k: int = 0,
) -> ConfigScore:
    dec = subspace_split(sample_covariance(Y), n_sources)
    peak = _refined_peak(dec, coarse, params, virtual_fn)
    return ConfigScore(k, peak, peak.error_to(virtual_angle))


def select_candidates(
    trajectory: Sequence[TrajectoryEntry],
    scores: Sequence[ConfigScore],
    n_sources: int,
    min_separation_deg: float,
) -> tuple[list[AnglePair], bool]:
    """Candidates with the smallest scores, ties to smaller ``k``.

    A candidate within Euclidean ``min_separation_deg`` of one already chosen is
    passed over, so adjacent grid points cannot claim two slots for one
    source.  If that leaves too few, the best skipped ones fill the gap and
    the second return value is True.
    """
    by_k = {e.k: e for e in trajectory}
    ranked = sorted(scores, key=lambda s: (s.epsilon, s.k))
    chosen: list[AnglePair] = []
    skipped: list[AnglePair] = []
    for s in ranked:
        cand = by_k[s.k].candidate_true_angle
        if all(cand.distance_to(c) >= min_separation_deg for c in chosen):
            chosen.append(cand)
        else:
            skipped.append(cand)
        if len(chosen) == n_sources:
            return chosen, False
    chosen += skipped[: n_sources - len(chosen)]
    return chosen, True


def run_fa_estimator(
    acquire: Acquire,
    geometry: ArrayGeometry,
    n_sources: int,
    virtual_angle: AnglePair = DEFAULT_VIRTUAL,
    search_grid: Sequence[AnglePair] | None = None,
    params: SearchParams = SearchParams(),
) -> FaEstimate:
    """Run the full estimator against an acquisition callable.

    ``acquire(geometry, 0)`` supplies the undisplaced prescan data when
    ``search_grid`` is None; configuration ``k`` of the trajectory is
    acquired with ``acquire(reconfigured_geometry, k)``.
    """
    validate_virtual_angle(virtual_angle, params)
    base = geometry.fixed()
    prescan: list[PrescanPeak] = []
    if search_grid is None:
        prescan = coarse_prescan(acquire(base, 0), base, n_sources, params)
        search_grid = candidate_grid([p.angle for p in prescan], params)
    trajectory = build_trajectory(search_grid, virtual_angle, base, params)

    virtual_fn = steering_function(base, displaced=False)
    coarse = local_grid(virtual_angle, params.local_radius_deg, params.local_step_deg, virtual_fn, params.domain)
    scores = []
    for entry in trajectory:
        Y = acquire(base.reconfigured(entry.y_displacements), entry.k)
        scores.append(score_configuration(Y, n_sources, virtual_angle, coarse, params, virtual_fn, entry.k))

    estimates, padded = select_candidates(trajectory, scores, n_sources, params.min_separation_deg)
    return FaEstimate(estimates, scores, virtual_angle, trajectory, prescan, padded)


@dataclass(frozen=True)
class SimulatedAcquisition:
    """Acquisition backed by the snapshot simulator.

    Configuration ``k`` of trial ``trial`` draws from ``substream(seed, trial, k)``
    so every configuration sees fresh, reproducible source and noise samples.
    """

    scenario: SourceScenario
    trial: int = 0
    noise_scale: float = 1.0

    def __call__(self, geometry: ArrayGeometry, k: int) -> SnapshotMatrix:
        rng = substream(self.scenario.seed, self.trial, k)
        return generate_snapshots(manifold(self.scenario.sources, geometry), self.scenario, rng, self.noise_scale)


def estimate_fa_doa(
    scenario: SourceScenario,
    geometry: ArrayGeometry,
    virtual_angle: AnglePair = DEFAULT_VIRTUAL,
    search_grid: Sequence[AnglePair] | None = None,
    params: SearchParams = SearchParams(),
    trial: int = 0,
    noise_scale: float = 1.0,
) -> FaEstimate:
    """Simulate ``scenario`` and estimate its DOAs with the reconfigurable array."""
    scenario.check_identifiable(geometry.n_elements)
    acquire = SimulatedAcquisition(scenario, trial, noise_scale)
    return run_fa_estimator(acquire, geometry, scenario.n_sources, virtual_angle, search_grid, params)
