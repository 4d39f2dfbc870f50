"""Stochastic (unconditional) Cramer-Rao bound for azimuth/elevation.

Sources are uncorrelated Gaussian with power ``10**(snr_db/10)`` and the noise
is white with unit power; source covariance and noise power are treated as
unknown nuisance parameters.
"""
from __future__ import annotations

import math

import numpy as np

from .array_model import AnglePair, ArrayGeometry, direction_cosines, manifold, position_vectors
from .errors import SingularFisher
from .signal_sim import SourceScenario, noise_power_for_snr, signal_power_for_snr


def steering_derivatives(angles, geometry: ArrayGeometry):
    """Steering matrix and its per-radian derivatives in theta and phi.

    Returns ``(A, dA_dtheta, dA_dphi)``, each ``N x L``.
    """
    angles = list(angles)
    theta = np.array([a.theta_deg for a in angles])
    phi = np.array([a.phi_deg for a in angles])
    u, w, s = direction_cosines(theta, phi)
    t, p = np.deg2rad(theta), np.deg2rad(phi)
    # d/dtheta and d/dphi of (u, w, s)
    du_t, dw_t, ds_t = -s, np.zeros_like(u), u
    du_p, dw_p, ds_p = -np.cos(t) * np.sin(p), np.cos(p), -np.sin(t) * np.sin(p)

    d_x, d_z = position_vectors(geometry)
    d_y = geometry.y_displacements
    k = 2j * np.pi / geometry.wavelength
    A = manifold(angles, geometry)
    dA_t = k * (np.outer(d_x, du_t) + np.outer(d_z, dw_t) + np.outer(d_y, ds_t)) * A
    dA_p = k * (np.outer(d_x, du_p) + np.outer(d_z, dw_p) + np.outer(d_y, ds_p)) * A
    return A, dA_t, dA_p


def stochastic_crb(sources, snr_db: float, snapshots: int, geometry: ArrayGeometry) -> np.ndarray:
    """Bound matrix in rad^2, parameters ordered ``[theta_1..theta_L, phi_1..phi_L]``.

    Raises:
        SingularFisher: if the Fisher information cannot be inverted.
    """
    sources = [s if isinstance(s, AnglePair) else AnglePair(*s) for s in sources]
    n_src = len(sources)
    n = geometry.n_elements
    sigma2 = noise_power_for_snr(snr_db)
    P = signal_power_for_snr(snr_db) * np.eye(n_src)

    A, dA_t, dA_p = steering_derivatives(sources, geometry)
    D = np.hstack([dA_t, dA_p])
    R = A @ P @ A.conj().T + sigma2 * np.eye(n)
    gram = A.conj().T @ A
    if np.linalg.cond(gram) > 1e12:
        raise SingularFisher("steering vectors of the sources are linearly dependent")
    proj_perp = np.eye(n) - A @ np.linalg.solve(gram, A.conj().T)
    G = P @ A.conj().T @ np.linalg.solve(R, A) @ P
    H = D.conj().T @ proj_perp @ D
    fim = 2.0 * snapshots / sigma2 * np.real(H * np.tile(G, (2, 2)).T)

    if not np.all(np.isfinite(fim)) or np.linalg.cond(fim) > 1e14:
        raise SingularFisher(f"Fisher information is singular at {[str(s) for s in sources]}")
    return np.linalg.inv(fim)


def crlb_rmse(scenario: SourceScenario, geometry: ArrayGeometry) -> float:
    """Bound on the RMSE in degrees, comparable with the Monte Carlo RMSE.

    Per source ``sqrt((var_theta + var_phi) / 2)``, averaged over sources.
    """
    crb = stochastic_crb(scenario.sources, scenario.snr_db, scenario.snapshots, geometry)
    n_src = scenario.n_sources
    var = np.diag(crb)
    per_source = np.sqrt((var[:n_src] + var[n_src:]) / 2.0)
    return float(np.mean(per_source) * 180.0 / math.pi)
