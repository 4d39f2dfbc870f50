"""Narrow-band snapshot simulation ``Y = A S + W``.

Noise is fixed at unit power and each source is scaled to ``10**(snr_db/10)``.
Sources and noise are i.i.d. circular complex Gaussian, temporally white and
mutually uncorrelated.  Randomness comes from explicit ``numpy`` generators;
:func:`substream` derives independent, schedule-independent streams from
``(seed, trial, k)`` so Monte Carlo runs are reproducible.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .array_model import AnglePair


@dataclass(frozen=True)
class SourceScenario:
    sources: tuple[AnglePair, ...]
    snr_db: float
    snapshots: int
    seed: int = 0

    def __post_init__(self):
        sources = tuple(s if isinstance(s, AnglePair) else AnglePair(*s) for s in self.sources)
        if not sources:
            raise ValueError("scenario needs at least one source")
        if int(self.snapshots) != self.snapshots or self.snapshots < 1:
            raise ValueError(f"snapshots must be a positive integer, got {self.snapshots}")
        if not np.isfinite(self.snr_db):
            raise ValueError("snr_db must be finite")
        object.__setattr__(self, "sources", sources)
        object.__setattr__(self, "snapshots", int(self.snapshots))

    @property
    def n_sources(self) -> int:
        return len(self.sources)

    def check_identifiable(self, n_elements: int) -> None:
        if self.n_sources > n_elements - 1:
            raise ValueError(f"{self.n_sources} sources need at least {self.n_sources + 1} elements, array has {n_elements}")


@dataclass(frozen=True)
class SnapshotMatrix:
    """Received samples, one column per snapshot (``N x T``)."""

    data: np.ndarray = field(repr=False)

    @property
    def n_elements(self) -> int:
        return self.data.shape[0]

    @property
    def n_snapshots(self) -> int:
        return self.data.shape[1]


def noise_power_for_snr(snr_db: float) -> float:
    """Noise power under the package convention (always 1.0)."""
    if not np.isfinite(snr_db):
        raise ValueError("snr_db must be finite")
    return 1.0


def signal_power_for_snr(snr_db: float) -> float:
    return 10.0 ** (snr_db / 10.0) * noise_power_for_snr(snr_db)


def substream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for ``(seed, *key)``, e.g. ``substream(seed, trial, k)``."""
    ss = np.random.SeedSequence(entropy=int(seed) & (2**64 - 1), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


def complex_gaussian(rng: np.random.Generator, shape, power: float = 1.0) -> np.ndarray:
    """Circular complex Gaussian samples with ``E|x|^2 = power``."""
    re_im = rng.standard_normal((2, *shape))
    return np.sqrt(power / 2.0) * (re_im[0] + 1j * re_im[1])


def generate_snapshots(
    manifold: np.ndarray,
    scenario: SourceScenario,
    rng: np.random.Generator | None = None,
    noise_scale: float = 1.0,
) -> SnapshotMatrix:
    """Draw ``T`` snapshots for the given ``N x L`` steering matrix.

    ``rng`` defaults to ``substream(scenario.seed)``.  ``noise_scale``
    multiplies the noise amplitude; 0 gives noiseless data (the source
    waveforms are still drawn, so the generator state advances identically).
    """
    manifold = np.asarray(manifold)
    if manifold.ndim != 2 or manifold.shape[1] != scenario.n_sources:
        raise ValueError(f"manifold shape {manifold.shape} does not match {scenario.n_sources} sources")
    if rng is None:
        rng = substream(scenario.seed)
    n, n_src = manifold.shape
    t = scenario.snapshots
    s = complex_gaussian(rng, (n_src, t), signal_power_for_snr(scenario.snr_db))
    w = complex_gaussian(rng, (n, t), noise_power_for_snr(scenario.snr_db))
    return SnapshotMatrix(manifold @ s + noise_scale * w)
