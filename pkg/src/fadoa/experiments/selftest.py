"""Quick built-in property checks behind ``fadoa selftest``.

These are fast spot checks of the core invariants; the full suite lives in
the pytest tests.
"""
from __future__ import annotations

import numpy as np

from ..array_model import (
    AnglePair,
    ArrayGeometry,
    correlation_grid,
    solve_y_displacements,
    steering_fa,
    steering_upa,
)
from ..fa_pipeline import SearchParams, estimate_fa_doa
from ..signal_sim import SourceScenario, substream
from ..subspace import music_spectrum, sample_covariance, subspace_split, uniform_grid
from ..array_model import steering_function
from .config import ExperimentConfig
from .harness import run_sweep


def _equivalence() -> bool:
    rng = substream(1)
    g = ArrayGeometry(8, 8)
    virtual = AnglePair(30, 30)
    worst = 0.0
    for t, p in rng.uniform(80, 89.9, size=(200, 2)):
        true = AnglePair(t, p)
        fa = steering_fa(true, g.reconfigured(solve_y_displacements(true, virtual, g)))
        worst = max(worst, float(np.max(np.abs(fa - steering_upa(virtual, g)))))
    return worst < 1e-10


def _unit_modulus() -> bool:
    rng = substream(2)
    g = ArrayGeometry(4, 5, y_displacements=rng.normal(size=20) * 3)
    a = steering_fa(AnglePair(*rng.uniform(0, 90, 2)), g)
    return bool(np.all(np.abs(np.abs(a) - 1) < 1e-12))


def _subspace() -> bool:
    rng = substream(3)
    ok = True
    for _ in range(20):
        x = rng.normal(size=(6, 12)) + 1j * rng.normal(size=(6, 12))
        R = sample_covariance(x)
        dec = subspace_split(R, 2)
        ok &= bool(np.allclose(R, R.conj().T, atol=0))
        ok &= float(np.max(np.abs(dec.signal_basis.conj().T @ dec.noise_basis))) < 1e-8
        ok &= float(dec.eigenvalues.min()) >= -1e-9 * float(np.trace(R).real)
    return ok


def _rotation_invariance() -> bool:
    rng = substream(4)
    g = ArrayGeometry(3, 3)
    x = rng.normal(size=(9, 20)) + 1j * rng.normal(size=(9, 20))
    dec = subspace_split(sample_covariance(x), 2)
    q, _ = np.linalg.qr(rng.normal(size=(7, 7)) + 1j * rng.normal(size=(7, 7)))
    grid = uniform_grid(0, 90, 5)
    fn = steering_function(g, False)
    p1 = music_spectrum(dec.noise_basis, grid, grid, fn).values
    p2 = music_spectrum(dec.noise_basis @ q, grid, grid, fn).values
    return float(np.max(np.abs(p1 - p2) / p1)) < 1e-9


def _end_fire_ambiguity() -> bool:
    grid = uniform_grid(0, 90, 0.5)
    tt, pp = np.meshgrid(grid, grid, indexing="ij")
    eta = correlation_grid(AnglePair(86, 86), ArrayGeometry(10, 10), grid, grid)
    far = np.hypot(tt - 86, pp - 86) >= 2
    return float(eta[far].max()) > 0.9


def _noiseless_exactness() -> bool:
    scenario = SourceScenario([AnglePair(86, 86)], 10, 50, seed=5)
    grid = [AnglePair(t, p) for t in (85, 86, 87) for p in (85, 86, 87)]
    est = estimate_fa_doa(scenario, ArrayGeometry(8, 8), search_grid=grid, params=SearchParams.fast(), noise_scale=0)
    best = min(s.epsilon for s in est.scores)
    return est.estimates == [AnglePair(86, 86)] and best < 1e-6


def _determinism() -> bool:
    cfg = ExperimentConfig(trials=2, snr_values=(10.0,), methods=("music2d", "esprit"), snapshots=50)
    return run_sweep(cfg).to_csv() == run_sweep(cfg).to_csv()


CHECKS = [
    ("equivalence identity (200 end-fire angles)", _equivalence),
    ("unit-modulus steering vectors", _unit_modulus),
    ("covariance / subspace invariants", _subspace),
    ("MUSIC spectrum invariant to noise-basis rotation", _rotation_invariance),
    ("end-fire correlation ambiguity", _end_fire_ambiguity),
    ("noiseless exactness of the FA estimator", _noiseless_exactness),
    ("sweep determinism", _determinism),
]


def run_selftest(out=print) -> bool:
    all_ok = True
    for name, check in CHECKS:
        try:
            ok = bool(check())
        except Exception as exc:  # report and keep going
            out(f"FAIL {name}: {type(exc).__name__}: {exc}")
            all_ok = False
            continue
        out(f"{'PASS' if ok else 'FAIL'} {name}")
        all_ok &= ok
    return all_ok
