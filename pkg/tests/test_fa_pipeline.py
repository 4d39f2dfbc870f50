import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fadoa.array_model import AnglePair, ArrayGeometry, steering_fa, steering_upa
from fadoa.errors import EmptyTrajectory
from fadoa.fa_pipeline import (
    ConfigScore,
    SearchParams,
    SimulatedAcquisition,
    TrajectoryEntry,
    build_trajectory,
    candidate_grid,
    coarse_prescan,
    estimate_fa_doa,
    run_fa_estimator,
    select_candidates,
    validate_virtual_angle,
)
from fadoa.signal_sim import SourceScenario

G8 = ArrayGeometry(8, 8)
V = AnglePair(30, 30)


def square(center, half, step=1.0):
    t0, p0 = center
    n = int(round(half / step))
    return [AnglePair(t0 + i * step, p0 + j * step) for i in range(-n, n + 1) for j in range(-n, n + 1)]


# -- trajectory ---------------------------------------------------------------

def test_trajectory_at_virtual_angle():
    (entry,) = build_trajectory([V], V, G8)
    assert entry.k == 1 and entry.candidate_true_angle == V
    assert np.array_equal(entry.y_displacements, np.zeros(64))


def test_trajectory_skips_singular(caplog):
    grid = [AnglePair(86, 86), AnglePair(90, 90), AnglePair(85, 85)]
    with caplog.at_level("INFO", logger="fadoa.fa_pipeline"):
        traj = build_trajectory(grid, V, G8)
    assert [e.candidate_true_angle for e in traj] == [grid[0], grid[2]]
    assert [e.k for e in traj] == [1, 2]
    assert "singular" in caplog.text


def test_trajectory_entries_satisfy_equivalence():
    grid = square((86, 86), 2)
    traj = build_trajectory(grid, V, G8)
    assert len(traj) == 25
    target = steering_upa(V, G8)
    for e in traj:
        a = steering_fa(e.candidate_true_angle, G8.reconfigured(e.y_displacements))
        assert np.max(np.abs(a - target)) < 1e-10


def test_trajectory_all_singular():
    with pytest.raises(EmptyTrajectory):
        build_trajectory([AnglePair(90, 90), AnglePair(0, 10)], V, G8)


def test_trajectory_empty_grid():
    with pytest.raises(ValueError):
        build_trajectory([], V, G8)


@pytest.mark.parametrize("virtual", [AnglePair(75, 30), AnglePair(30, 85), AnglePair(5, 30), AnglePair(30, 9.9)])
def test_virtual_angle_validation(virtual):
    with pytest.raises(ValueError):
        validate_virtual_angle(virtual)


def test_virtual_angle_accepts_benign():
    validate_virtual_angle(AnglePair(45, 20))
    validate_virtual_angle(AnglePair(70, 10))


# -- candidate grid ---------------------------------------------------------------

def test_candidate_grid_window_and_lattice():
    grid = candidate_grid([AnglePair(86.3, 84.6)], SearchParams.fast())
    thetas = sorted({a.theta_deg for a in grid})
    phis = sorted({a.phi_deg for a in grid})
    assert thetas == [81.0, 82.0, 83.0, 84.0, 85.0, 86.0, 87.0, 88.0, 89.0, 90.0]
    assert phis == [float(x) for x in range(80, 91)]
    assert grid == sorted(grid, key=tuple)


def test_candidate_grid_union_has_no_duplicates():
    grid = candidate_grid([AnglePair(86, 86), AnglePair(84, 85)], SearchParams.fast())
    assert len(grid) == len(set(map(tuple, grid)))
    # windows 81..90 x 81..90 and 79..89 x 80..90 overlap in 81..89 x 81..90
    assert len(grid) == 100 + 121 - 90


def test_candidate_grid_fine_step():
    grid = candidate_grid([AnglePair(40, 40)], SearchParams(candidate_radius_deg=0.2, candidate_step_deg=0.1))
    assert len(grid) == 25
    assert AnglePair(40.1, 39.8) in grid


# -- selection ------------------------------------------------------------------

def _scored(cands, eps):
    traj = [TrajectoryEntry(k, c, np.zeros(1)) for k, c in enumerate(cands, 1)]
    scores = [ConfigScore(k, V, e) for k, e in enumerate(eps, 1)]
    return traj, scores


def test_selection_ties_go_to_smaller_k():
    traj, scores = _scored([AnglePair(80, 80), AnglePair(70, 70), AnglePair(60, 60)], [0.5, 0.1, 0.1])
    est, padded = select_candidates(traj, scores, 1, 2.5)
    assert est == [AnglePair(70, 70)] and not padded


def test_selection_separation():
    cands = [AnglePair(86, 86), AnglePair(86, 87), AnglePair(81, 85)]
    traj, scores = _scored(cands, [0.0, 0.01, 0.02])
    est, padded = select_candidates(traj, scores, 2, 2.5)
    assert est == [AnglePair(86, 86), AnglePair(81, 85)] and not padded


def test_selection_pads_when_too_close():
    cands = [AnglePair(86, 86), AnglePair(86, 87)]
    traj, scores = _scored(cands, [0.0, 0.01])
    est, padded = select_candidates(traj, scores, 2, 2.5)
    assert est == cands and padded


# -- estimator --------------------------------------------------------------------

def test_noiseless_exactness_single_source():
    sc = SourceScenario([AnglePair(86, 86)], 10, 50, seed=1)
    est = estimate_fa_doa(sc, G8, search_grid=square((86, 86), 2), params=SearchParams.fast(), noise_scale=0)
    assert est.estimates == [AnglePair(86, 86)]
    best = min(est.scores, key=lambda s: s.epsilon)
    assert best.epsilon < 1e-6
    assert len(est.scores) == 25 and [s.k for s in est.scores] == list(range(1, 26))


def test_noiseless_exactness_two_sources():
    truth = [AnglePair(86, 86), AnglePair(81, 85)]
    sc = SourceScenario(truth, 10, 50, seed=2)
    grid = sorted(set(square((86, 86), 1) + square((81, 85), 1)), key=tuple)
    est = estimate_fa_doa(sc, G8, search_grid=grid, params=SearchParams.fast(), noise_scale=0)
    assert sorted(est.estimates, key=tuple) == sorted(truth, key=tuple)
    assert not est.padded


def test_score_epsilon_recomputable():
    sc = SourceScenario([AnglePair(84, 87)], 10, 40, seed=3)
    est = estimate_fa_doa(sc, G8, search_grid=square((84, 87), 1), params=SearchParams.fast())
    for s in est.scores:
        assert s.epsilon == pytest.approx(s.measured_peak.error_to(est.virtual_angle), abs=1e-12)


@pytest.mark.parametrize("virtual", [AnglePair(30, 30), AnglePair(45, 20)])
def test_virtual_angle_independence(virtual):
    sc = SourceScenario([AnglePair(85, 87)], 10, 20, seed=4)
    est = estimate_fa_doa(sc, G8, virtual, search_grid=square((85, 87), 2), params=SearchParams.fast(), noise_scale=0)
    assert est.estimates == [AnglePair(85, 87)]


@settings(max_examples=15)
@given(st.integers(82, 88), st.integers(82, 88))
def test_monotone_scoring_noiseless(t, p):
    truth = AnglePair(t, p)
    sc = SourceScenario([truth], 10, 20, seed=5)
    params = SearchParams.fast()
    est = estimate_fa_doa(sc, G8, search_grid=square((t, p), 2), params=params, noise_scale=0)
    by_k = {e.k: e.candidate_true_angle for e in est.trajectory}
    eps_truth = next(s.epsilon for s in est.scores if by_k[s.k] == truth)
    for s in est.scores:
        if by_k[s.k].distance_to(truth) > params.local_step_deg:
            assert eps_truth <= s.epsilon


def test_determinism():
    sc = SourceScenario([AnglePair(86, 86)], 10, 100, seed=6)
    kw = dict(search_grid=square((86, 86), 1), params=SearchParams.fast(), trial=3)
    a, b = estimate_fa_doa(sc, G8, **kw), estimate_fa_doa(sc, G8, **kw)
    assert a.estimates == b.estimates and a.scores == b.scores


def test_full_pipeline_with_prescan():
    sc = SourceScenario([AnglePair(86, 86)], 10, 500, seed=7)
    est = estimate_fa_doa(sc, G8, params=SearchParams.fast())
    assert len(est.prescan) == 1 and est.prescan[0].end_fire
    assert est.estimates[0].distance_to(AnglePair(86, 86)) <= 2.0
    assert len(est.trajectory) == len(est.scores)


def test_custom_acquisition_sees_each_configuration():
    seen = []
    sim = SimulatedAcquisition(SourceScenario([AnglePair(86, 86)], 10, 30, seed=8), noise_scale=0)

    def acquire(geometry, k):
        seen.append((k, geometry.is_fixed))
        return sim(geometry, k)

    run_fa_estimator(acquire, G8, 1, search_grid=square((86, 86), 1), params=SearchParams.fast())
    assert [k for k, _ in seen] == list(range(1, 10))
    assert not any(fixed for _, fixed in seen)


def test_rejects_unidentifiable_scenario():
    sc = SourceScenario([AnglePair(80, 80), AnglePair(81, 81)], 10, 10)
    with pytest.raises(ValueError):
        estimate_fa_doa(sc, ArrayGeometry(1, 2))


# -- prescan ------------------------------------------------------------------------

def test_prescan_benign_not_flagged():
    acq = SimulatedAcquisition(SourceScenario([AnglePair(30, 30)], 20, 500, seed=9))
    (peak,) = coarse_prescan(acq(G8, 0), G8, 1)
    assert not peak.end_fire and peak.angle.distance_to(AnglePair(30, 30)) <= 1.5


def test_prescan_requires_sources():
    acq = SimulatedAcquisition(SourceScenario([AnglePair(30, 30)], 20, 50))
    with pytest.raises(ValueError):
        coarse_prescan(acq(G8, 0), G8, 0)


def test_prescan_window_covers_endfire_truth():
    sc = SourceScenario([AnglePair(86, 86)], 10, 500, seed=10)
    radius = SearchParams().candidate_radius_deg
    inside = flagged = 0
    for trial in range(100):
        (peak,) = coarse_prescan(SimulatedAcquisition(sc, trial)(G8, 0), G8, 1)
        flagged += peak.end_fire
        inside += abs(peak.angle.theta_deg - 86) <= radius and abs(peak.angle.phi_deg - 86) <= radius
    assert inside >= 90
    assert flagged >= 90
