"""Sample covariance, signal/noise subspaces and MUSIC spectrum search.

Steering callables used here take broadcastable ``theta``/``phi`` arrays in
degrees and return complex arrays of shape ``(N, *theta.shape)``; see
:func:`fadoa.array_model.steering_function`.

Grid argmax ties resolve to the smallest theta, then the smallest phi
(grids are ascending and ``numpy.argmax`` returns the first occurrence).
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np

from .array_model import AnglePair, ArrayGeometry, steering_function
from .errors import DegenerateSubspace
from .signal_sim import SnapshotMatrix

#: Floor on ``a^H Un Un^H a`` so that exact nulls give a finite spectrum.
DENOMINATOR_FLOOR = 1e-12

ANGLE_DOMAIN = ((0.0, 90.0), (0.0, 90.0))


@dataclass(frozen=True)
class SubspaceDecomposition:
    eigenvalues: np.ndarray
    signal_basis: np.ndarray = field(repr=False)
    noise_basis: np.ndarray = field(repr=False)

    @property
    def n_sources(self) -> int:
        return self.signal_basis.shape[1]

    def noise_projection(self, steering: np.ndarray) -> np.ndarray:
        """``a^H Un Un^H a`` for every column of ``steering`` (any trailing shape).

        Uses the signal basis (``|a|^2 - |Us^H a|^2``) when it is the smaller
        of the two, which is algebraically identical since ``[Us Un]`` is unitary.
        """
        return _projection_energy(steering, self.signal_basis, self.noise_basis)


def _projection_energy(steering: np.ndarray, signal_basis, noise_basis) -> np.ndarray:
    flat = steering.reshape(steering.shape[0], -1)
    if signal_basis is not None and signal_basis.shape[1] < noise_basis.shape[1]:
        energy = np.einsum("ij,ij->j", flat.conj(), flat).real
        out = energy - np.sum(np.abs(signal_basis.conj().T @ flat) ** 2, axis=0)
    else:
        out = np.sum(np.abs(noise_basis.conj().T @ flat) ** 2, axis=0)
    return out.reshape(steering.shape[1:])


def sample_covariance(Y) -> np.ndarray:
    """``R = Y Y^H / T``, symmetrised to be exactly Hermitian."""
    data = Y.data if isinstance(Y, SnapshotMatrix) else np.asarray(Y)
    if data.ndim != 2 or data.shape[1] < 1:
        raise ValueError(f"expected an N x T snapshot block with T >= 1, got shape {data.shape}")
    r = data @ data.conj().T / data.shape[1]
    return (r + r.conj().T) / 2


def subspace_split(R: np.ndarray, n_sources: int) -> SubspaceDecomposition:
    """Split a Hermitian matrix into ``n_sources`` dominant and remaining eigenvectors."""
    R = np.asarray(R)
    n = R.shape[0]
    if R.shape != (n, n):
        raise ValueError(f"covariance must be square, got {R.shape}")
    if not 1 <= n_sources < n:
        raise ValueError(f"need 1 <= L < N, got L={n_sources}, N={n}")
    if not np.all(np.isfinite(R)):
        raise DegenerateSubspace("covariance contains non-finite entries")
    try:
        vals, vecs = np.linalg.eigh(R)
    except np.linalg.LinAlgError as exc:
        raise DegenerateSubspace(f"eigendecomposition failed: {exc}") from exc
    vals = vals[::-1]
    vecs = vecs[:, ::-1]
    return SubspaceDecomposition(vals, vecs[:, :n_sources], vecs[:, n_sources:])


@dataclass(frozen=True)
class SpatialSpectrum:
    theta_grid: np.ndarray
    phi_grid: np.ndarray
    values: np.ndarray

    def argmax(self) -> tuple[AnglePair, float]:
        i, j = np.unravel_index(np.argmax(self.values), self.values.shape)
        return AnglePair(self.theta_grid[i], self.phi_grid[j]), float(self.values[i, j])


class SearchGrid:
    """A theta x phi grid with its steering vectors precomputed.

    Reusing one instance across many covariance matrices avoids rebuilding
    the steering matrix, which dominates the cost of small searches.
    """

    def __init__(self, theta_grid, phi_grid, steering_fn):
        self.theta_grid = np.asarray(theta_grid, dtype=float).reshape(-1)
        self.phi_grid = np.asarray(phi_grid, dtype=float).reshape(-1)
        if self.theta_grid.size == 0 or self.phi_grid.size == 0:
            raise ValueError("search grids must be non-empty")
        tt, pp = np.meshgrid(self.theta_grid, self.phi_grid, indexing="ij")
        self.steering = steering_fn(tt, pp)

    def spectrum(self, subspace) -> SpatialSpectrum:
        if isinstance(subspace, SubspaceDecomposition):
            den = subspace.noise_projection(self.steering)
        else:
            den = _projection_energy(self.steering, None, np.asarray(subspace))
        return SpatialSpectrum(self.theta_grid, self.phi_grid, 1.0 / np.maximum(den, DENOMINATOR_FLOOR))

    def argmax(self, subspace) -> tuple[AnglePair, float]:
        return self.spectrum(subspace).argmax()


def music_spectrum(subspace, theta_grid, phi_grid, steering_fn) -> SpatialSpectrum:
    """MUSIC pseudo-spectrum ``1 / (a^H Un Un^H a)`` on a theta x phi grid.

    ``subspace`` is either a :class:`SubspaceDecomposition` or a bare noise
    basis (``N x (N - L)`` array).  The spectrum depends only on the noise
    projector, so any unitary mixing of the basis columns leaves it unchanged.
    """
    return SearchGrid(theta_grid, phi_grid, steering_fn).spectrum(subspace)


def uniform_grid(lo: float, hi: float, step: float) -> np.ndarray:
    """``lo, lo + step, ...`` up to and including ``hi`` (within rounding)."""
    if step <= 0:
        raise ValueError("step must be positive")
    n = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return lo + step * np.arange(n)


def local_axis(center: float, radius: float, step: float, bounds=(0.0, 90.0)) -> np.ndarray:
    """Points ``center + k*step`` with ``|k*step| <= radius`` inside ``bounds``.

    A radius smaller than the step yields just the center.
    """
    if radius <= 0 or step <= 0:
        raise ValueError("radius and step must be positive")
    m = int(math.floor(radius / step + 1e-9))
    pts = center + step * np.arange(-m, m + 1)
    lo, hi = bounds
    pts = pts[(pts >= lo - 1e-9) & (pts <= hi + 1e-9)]
    if pts.size == 0:
        pts = np.array([min(max(center, lo), hi)])
    return pts


@functools.lru_cache(maxsize=8)
def _global_grid(n_x, n_z, spacing, wavelength, step, domain) -> SearchGrid:
    geometry = ArrayGeometry(n_x, n_z, spacing, wavelength)
    (t0, t1), (p0, p1) = domain
    return SearchGrid(uniform_grid(t0, t1, step), uniform_grid(p0, p1, step), steering_function(geometry, False))


def global_search_grid(geometry: ArrayGeometry, step_deg: float = 1.0, domain=ANGLE_DOMAIN) -> SearchGrid:
    """Cached full-domain grid over the undisplaced manifold of ``geometry``."""
    return _global_grid(geometry.n_x, geometry.n_z, geometry.spacing, geometry.wavelength, step_deg, domain)


def local_grid(center: AnglePair, radius_deg: float, step_deg: float, steering_fn, domain=ANGLE_DOMAIN) -> SearchGrid:
    return SearchGrid(
        local_axis(center.theta_deg, radius_deg, step_deg, domain[0]),
        local_axis(center.phi_deg, radius_deg, step_deg, domain[1]),
        steering_fn,
    )


def local_peak_search(
    subspace,
    center: AnglePair,
    radius_deg: float,
    step_deg: float,
    steering_fn,
    domain=ANGLE_DOMAIN,
) -> tuple[AnglePair, float]:
    """Spectrum argmax over the square ``center +/- radius`` clipped to ``domain``."""
    return local_grid(center, radius_deg, step_deg, steering_fn, domain).argmax(subspace)


@dataclass(frozen=True)
class PeakSet:
    """Result of :func:`find_top_peaks`.

    ``padded`` is set when fewer than the requested number of strict local
    maxima existed and the remainder was filled from the largest grid values.
    """

    peaks: list[tuple[AnglePair, float]]
    padded: bool = False

    @property
    def angles(self) -> list[AnglePair]:
        return [a for a, _ in self.peaks]


def _strict_local_maxima(values: np.ndarray) -> np.ndarray:
    padded = np.pad(values, 1, constant_values=-np.inf)
    n0, n1 = values.shape
    mask = np.ones(values.shape, dtype=bool)
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di == 0 and dj == 0:
                continue
            mask &= values > padded[1 + di : 1 + di + n0, 1 + dj : 1 + dj + n1]
    return mask


def find_top_peaks(spectrum: SpatialSpectrum, n_peaks: int) -> PeakSet:
    """The ``n_peaks`` largest strict local maxima (8-neighbourhood)."""
    values = spectrum.values
    n0, n1 = values.shape
    ii, jj = np.meshgrid(np.arange(n0), np.arange(n1), indexing="ij")
    ii, jj, vv = ii.ravel(), jj.ravel(), values.ravel()
    # descending value, then ascending theta, then ascending phi
    order = np.lexsort((jj, ii, -vv))
    is_max = _strict_local_maxima(values).ravel()

    chosen = [k for k in order if is_max[k]][:n_peaks]
    padded = len(chosen) < n_peaks
    if padded:
        taken = set(chosen)
        chosen += [k for k in order if k not in taken][: n_peaks - len(chosen)]
    peaks = [(AnglePair(spectrum.theta_grid[ii[k]], spectrum.phi_grid[jj[k]]), float(vv[k])) for k in chosen]
    return PeakSet(peaks, padded)
