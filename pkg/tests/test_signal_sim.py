import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fadoa.array_model import AnglePair, ArrayGeometry, manifold
from fadoa.signal_sim import (
    SourceScenario,
    complex_gaussian,
    generate_snapshots,
    noise_power_for_snr,
    signal_power_for_snr,
    substream,
)


def test_power_convention():
    assert noise_power_for_snr(0) == 1.0 and signal_power_for_snr(0) == 1.0
    assert signal_power_for_snr(10) == pytest.approx(10.0)
    assert signal_power_for_snr(-10) == pytest.approx(0.1)
    assert noise_power_for_snr(-37.5) == 1.0


@pytest.mark.parametrize("bad", [np.nan, np.inf])
def test_power_convention_rejects_nonfinite(bad):
    with pytest.raises(ValueError):
        noise_power_for_snr(bad)


@pytest.mark.parametrize(
    "kwargs",
    [dict(sources=(), snr_db=0, snapshots=1), dict(sources=[(1, 1)], snr_db=0, snapshots=0),
     dict(sources=[(1, 1)], snr_db=0, snapshots=2.5), dict(sources=[(1, 1)], snr_db=np.nan, snapshots=3)],
)
def test_scenario_validation(kwargs):
    with pytest.raises(ValueError):
        SourceScenario(**kwargs)


def test_scenario_identifiability():
    sc = SourceScenario([(1, 1), (2, 2), (3, 3)], 0, 5)
    sc.check_identifiable(4)
    with pytest.raises(ValueError):
        sc.check_identifiable(3)


def test_scenario_coerces_tuples():
    sc = SourceScenario([(86, 86)], 10, 500)
    assert sc.sources == (AnglePair(86, 86),)


def test_manifold_shape_mismatch():
    sc = SourceScenario([(10, 10), (20, 20)], 0, 4)
    with pytest.raises(ValueError):
        generate_snapshots(np.ones((4, 1)), sc)


def test_noiseless_single_source_is_rank_one():
    g = ArrayGeometry(4, 4)
    sc = SourceScenario([(40, 20)], 5, 50, seed=3)
    a = manifold(sc.sources, g)
    Y = generate_snapshots(a, sc, noise_scale=0).data
    coeff = a[:, 0].conj() @ Y / 16
    np.testing.assert_allclose(Y, np.outer(a[:, 0], coeff), atol=1e-12)
    s = np.linalg.svd(Y @ Y.conj().T / 50, compute_uv=False)
    assert s[1] < 1e-12 * s[0]


def test_snr_matches_definition():
    # same substream with and without noise separates the two components exactly
    g = ArrayGeometry(8, 8)
    sc = SourceScenario([(30, 30)], 10, 500, seed=11)
    A = manifold(sc.sources, g)
    clean = generate_snapshots(A, sc, substream(11, 0), noise_scale=0).data
    noisy = generate_snapshots(A, sc, substream(11, 0)).data
    ratio = np.mean(np.abs(clean) ** 2) / np.mean(np.abs(noisy - clean) ** 2)
    assert abs(10 * np.log10(ratio) - 10) <= 0.5


def test_determinism():
    g = ArrayGeometry(3, 3)
    sc = SourceScenario([(30, 30), (50, 10)], 3, 20, seed=99)
    A = manifold(sc.sources, g)
    y1, y2 = generate_snapshots(A, sc).data, generate_snapshots(A, sc).data
    assert np.array_equal(y1, y2)
    y3 = generate_snapshots(A, SourceScenario(sc.sources, 3, 20, seed=100)).data
    assert not np.array_equal(y1, y3)


def test_sources_uncorrelated():
    sc = SourceScenario([(1, 1), (2, 2)], 0, 100_000, seed=4)
    S = generate_snapshots(np.eye(2), sc, noise_scale=0).data
    C = S @ S.conj().T / S.shape[1]
    assert abs(C[0, 1]) < 0.05 * min(C[0, 0].real, C[1, 1].real)


def test_unit_noise_power():
    sc = SourceScenario([(1, 1)], 0, 10_000, seed=8)
    W = generate_snapshots(np.zeros((8, 1)), sc).data
    assert np.mean(np.sum(np.abs(W) ** 2, axis=0)) / 8 == pytest.approx(1.0, rel=0.05)


def test_noise_is_circular():
    z = complex_gaussian(substream(5), (200_000,), power=2.0)
    assert np.mean(np.abs(z) ** 2) == pytest.approx(2.0, rel=0.02)
    assert abs(np.mean(z * z)) < 0.02  # pseudo-covariance vanishes


@given(st.integers(0, 2**64 - 1), st.integers(0, 1000), st.integers(0, 1000))
def test_substreams_are_reproducible_and_distinct(seed, trial, k):
    a = substream(seed, trial, k).standard_normal(4)
    assert np.array_equal(a, substream(seed, trial, k).standard_normal(4))
    assert not np.array_equal(a, substream(seed, trial, k + 1).standard_normal(4))
