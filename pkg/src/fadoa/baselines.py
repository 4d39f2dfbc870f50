"""Fixed-array reference estimators: 2-D MUSIC, 2-D ESPRIT and OMP.

All three expect snapshots from the undisplaced planar grid.
"""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .array_model import AnglePair, ArrayGeometry, steering_function, steering_matrix
from .errors import RankDeficient
from .subspace import (
    ANGLE_DOMAIN,
    find_top_peaks,
    global_search_grid,
    local_peak_search,
    sample_covariance,
    subspace_split,
)


class Method(str, enum.Enum):
    MUSIC2D = "music2d"
    ESPRIT2D = "esprit"
    OMP = "omp"


@dataclass(frozen=True)
class BaselineResult:
    method: Method
    estimates: list[AnglePair]
    #: inversion left the valid angle range and was clipped (ESPRIT), or
    #: fewer strict spectrum maxima than sources were found (MUSIC)
    flagged: bool = False


def _require_fixed(geometry: ArrayGeometry) -> None:
    if not geometry.is_fixed:
        raise ValueError("baseline estimators need an undisplaced array")


def music2d_upa(
    Y,
    geometry: ArrayGeometry,
    n_sources: int,
    grid_step_deg: float = 1.0,
    refine_levels: int = 3,
    domain=ANGLE_DOMAIN,
) -> BaselineResult:
    """Global grid MUSIC, then ``refine_levels`` local passes around each peak.

    Each pass searches +/- the previous step at a tenth of it, so the default
    resolves to 0.001 degree and on-grid sources are not favoured.
    """
    _require_fixed(geometry)
    dec = subspace_split(sample_covariance(Y), n_sources)
    peaks = find_top_peaks(global_search_grid(geometry, grid_step_deg, domain).spectrum(dec), n_sources)
    fn = steering_function(geometry, displaced=False)
    estimates = []
    for angle in peaks.angles:
        step = grid_step_deg
        for _ in range(refine_levels):
            angle, _ = local_peak_search(dec, angle, step, step / 10.0, fn, domain)
            step /= 10.0
        estimates.append(angle)
    return BaselineResult(Method.MUSIC2D, estimates, peaks.padded)


def _shift_invariance(blocks_1: np.ndarray, blocks_2: np.ndarray) -> np.ndarray:
    if np.linalg.matrix_rank(blocks_1) < blocks_1.shape[1]:
        raise RankDeficient("subarray signal subspace is rank deficient")
    psi, *_ = np.linalg.lstsq(blocks_1, blocks_2, rcond=None)
    return psi


def _frequencies_to_angles(u, w):
    """Invert ``u = cos(t)cos(p)``, ``w = sin(p)`` into the first quadrant."""
    clipped = bool(np.any(np.abs(w) > 1) or np.any(w < 0))
    w_c = np.clip(w, 0.0, 1.0)
    phi = np.degrees(np.arcsin(w_c))
    cos_phi = np.sqrt(1.0 - w_c**2)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(cos_phi > 1e-12, u / cos_phi, 1.0)
    clipped |= bool(np.any(ratio > 1) or np.any(ratio < 0))
    theta = np.degrees(np.arccos(np.clip(ratio, 0.0, 1.0)))
    return theta, phi, clipped


def esprit2d_upa(Y, geometry: ArrayGeometry, n_sources: int) -> BaselineResult:
    """Least-squares 2-D ESPRIT on x- and z-shifted subarrays.

    The x and z rotation operators are diagonalised separately and their
    eigenvalues paired by eigenvector alignment.  When the alignment is
    ambiguous (best match below 0.9) and ``L <= 3``, every pairing is tried
    and the one with the smallest MUSIC null residual wins.
    """
    _require_fixed(geometry)
    if geometry.n_x < 2 or geometry.n_z < 2:
        raise ValueError("2-D ESPRIT needs at least 2 elements along x and z")
    dec = subspace_split(sample_covariance(Y), n_sources)
    L = n_sources
    us = dec.signal_basis.reshape(geometry.n_x, geometry.n_z, L)
    psi_x = _shift_invariance(us[:-1].reshape(-1, L), us[1:].reshape(-1, L))
    psi_z = _shift_invariance(us[:, :-1].reshape(-1, L), us[:, 1:].reshape(-1, L))

    lam_x, vec_x = np.linalg.eig(psi_x)
    lam_z, vec_z = np.linalg.eig(psi_z)
    vec_x = vec_x / np.linalg.norm(vec_x, axis=0)
    vec_z = vec_z / np.linalg.norm(vec_z, axis=0)
    similarity = np.abs(vec_x.conj().T @ vec_z)
    rows, cols = linear_sum_assignment(-similarity)
    pairing = cols[np.argsort(rows)]

    scale = 2 * np.pi * geometry.spacing
    u = np.angle(lam_x) / scale
    w_all = np.angle(lam_z) / scale

    if L > 1 and similarity[rows, cols].min() < 0.9 and L <= 3:
        best = None
        for perm in itertools.permutations(range(L)):
            theta, phi, _ = _frequencies_to_angles(u, w_all[list(perm)])
            a = steering_matrix(theta, phi, geometry, displaced=False)
            residual = float(np.sum(dec.noise_projection(a)))
            if best is None or residual < best[0]:
                best = (residual, np.array(perm))
        pairing = best[1]

    theta, phi, clipped = _frequencies_to_angles(u, w_all[pairing])
    return BaselineResult(Method.ESPRIT2D, [AnglePair(t, p) for t, p in zip(theta, phi)], clipped)


def omp_2d(
    Y,
    geometry: ArrayGeometry,
    n_sources: int,
    grid_step_deg: float = 1.0,
    domain=ANGLE_DOMAIN,
) -> BaselineResult:
    """Orthogonal matching pursuit over a grid dictionary of unit-norm steering vectors.

    The data matrix is the dominant subspace weighted by the square roots of
    its eigenvalues; each iteration picks the atom most correlated with the
    residual, then deflates by least squares on all atoms picked so far.
    """
    _require_fixed(geometry)
    dec = subspace_split(sample_covariance(Y), n_sources)
    grid = global_search_grid(geometry, grid_step_deg, domain)
    dictionary = grid.steering.reshape(geometry.n_elements, -1) / np.sqrt(geometry.n_elements)
    data = dec.signal_basis * np.sqrt(np.maximum(dec.eigenvalues[:n_sources], 0.0))
    picked = omp_select(dictionary, data, n_sources)
    n_phi = grid.phi_grid.size
    estimates = [AnglePair(grid.theta_grid[i // n_phi], grid.phi_grid[i % n_phi]) for i in picked]
    return BaselineResult(Method.OMP, estimates)


def omp_select(dictionary: np.ndarray, data: np.ndarray, n_atoms: int) -> list[int]:
    """Greedy atom indices for ``data`` (columns) over ``dictionary`` (columns)."""
    if dictionary.shape[0] != data.shape[0]:
        raise ValueError(f"dictionary rows {dictionary.shape[0]} != data rows {data.shape[0]}")
    residual = data
    picked: list[int] = []
    for _ in range(n_atoms):
        corr = np.sum(np.abs(dictionary.conj().T @ residual) ** 2, axis=1)
        corr[picked] = -np.inf
        picked.append(int(np.argmax(corr)))
        atoms = dictionary[:, picked]
        coef, *_ = np.linalg.lstsq(atoms, data, rcond=None)
        residual = data - atoms @ coef
    return picked


BASELINES = {
    Method.MUSIC2D: music2d_upa,
    Method.ESPRIT2D: esprit2d_upa,
    Method.OMP: omp_2d,
}
