"""Planar array geometry, steering vectors and the y-displacement solver.

Elements sit on an ``n_x`` by ``n_z`` grid in the x-z plane and may each be
moved along y.  Element ``n = i_x * n_z + i_z`` (x-major, z inner) so that
covariance indices are reproducible.  Angles are degrees at every public
entry point: ``theta`` is azimuth, ``phi`` elevation.

Phase of element ``n`` for a plane wave from ``(theta, phi)``::

    2*pi/wavelength * (x_n cos(theta)cos(phi) + z_n sin(phi) + y_n sin(theta)cos(phi))
"""
from __future__ import annotations

import functools
import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.special import cosdg, sindg

from .errors import SingularTrueAngle

#: |sin(theta) cos(phi)| below this makes the displacement equation undefined.
SINGULAR_TOL = 1e-6


@dataclass(frozen=True)
class AnglePair:
    """Azimuth/elevation pair in degrees."""

    theta_deg: float
    phi_deg: float

    def __post_init__(self):
        if not (math.isfinite(self.theta_deg) and math.isfinite(self.phi_deg)):
            raise ValueError(f"non-finite angle ({self.theta_deg}, {self.phi_deg})")
        object.__setattr__(self, "theta_deg", float(self.theta_deg))
        object.__setattr__(self, "phi_deg", float(self.phi_deg))

    def error_to(self, other: AnglePair) -> float:
        """Pairwise angular error ``sqrt((dtheta^2 + dphi^2) / 2)`` in degrees."""
        return math.hypot(self.theta_deg - other.theta_deg, self.phi_deg - other.phi_deg) / math.sqrt(2.0)

    def distance_to(self, other: AnglePair) -> float:
        """Euclidean distance in the (theta, phi) plane, degrees."""
        return math.hypot(self.theta_deg - other.theta_deg, self.phi_deg - other.phi_deg)

    def __iter__(self):
        yield self.theta_deg
        yield self.phi_deg

    def __str__(self):
        return f"({self.theta_deg:g}, {self.phi_deg:g})"


class PositionVectors(NamedTuple):
    d_x: np.ndarray
    d_z: np.ndarray


@dataclass(frozen=True, eq=False)
class ArrayGeometry:
    """Planar grid of (possibly y-displaced) isotropic elements.

    ``spacing`` is the grid pitch in wavelengths; positions and
    ``y_displacements`` are lengths in the same unit as ``wavelength``.
    Instances are immutable; :meth:`reconfigured` returns a new geometry.
    """

    n_x: int
    n_z: int
    spacing: float = 0.5
    wavelength: float = 1.0
    y_displacements: np.ndarray | None = None

    def __post_init__(self):
        if int(self.n_x) != self.n_x or int(self.n_z) != self.n_z or self.n_x < 1 or self.n_z < 1:
            raise ValueError(f"grid dimensions must be positive integers, got {self.n_x}x{self.n_z}")
        if not (self.spacing > 0 and math.isfinite(self.spacing)):
            raise ValueError(f"spacing must be positive, got {self.spacing}")
        if not (self.wavelength > 0 and math.isfinite(self.wavelength)):
            raise ValueError(f"wavelength must be positive, got {self.wavelength}")
        n = int(self.n_x) * int(self.n_z)
        if self.y_displacements is None:
            dy = np.zeros(n)
        else:
            dy = np.array(self.y_displacements, dtype=float).reshape(-1)
            if dy.shape != (n,):
                raise ValueError(f"expected {n} y displacements, got {dy.size}")
            if not np.all(np.isfinite(dy)):
                raise ValueError("y displacements must be finite")
        dy.setflags(write=False)
        object.__setattr__(self, "n_x", int(self.n_x))
        object.__setattr__(self, "n_z", int(self.n_z))
        object.__setattr__(self, "y_displacements", dy)

    @property
    def n_elements(self) -> int:
        return self.n_x * self.n_z

    @property
    def is_fixed(self) -> bool:
        """True when no element is displaced (a plain UPA)."""
        return not np.any(self.y_displacements)

    def reconfigured(self, y_displacements, max_travel: float | None = None) -> ArrayGeometry:
        """Copy of this geometry with new y displacements.

        With ``max_travel`` set, displacements are clipped to
        ``[-max_travel, max_travel]`` and a warning is issued when clipping
        occurs.  Clipping breaks the exact steering-vector equivalence.
        """
        dy = np.asarray(y_displacements, dtype=float)
        if max_travel is not None:
            clipped = np.clip(dy, -max_travel, max_travel)
            if np.any(clipped != dy):
                warnings.warn(
                    f"y displacements clipped to +/-{max_travel} (max requested {np.max(np.abs(dy)):.3g})",
                    RuntimeWarning,
                    stacklevel=2,
                )
            dy = clipped
        return ArrayGeometry(self.n_x, self.n_z, self.spacing, self.wavelength, dy)

    def fixed(self) -> ArrayGeometry:
        """The same grid with all displacements zeroed."""
        return ArrayGeometry(self.n_x, self.n_z, self.spacing, self.wavelength)


def position_vectors(geometry: ArrayGeometry) -> PositionVectors:
    pitch = geometry.spacing * geometry.wavelength
    i_x, i_z = np.meshgrid(np.arange(geometry.n_x), np.arange(geometry.n_z), indexing="ij")
    return PositionVectors(pitch * i_x.ravel().astype(float), pitch * i_z.ravel().astype(float))


def direction_cosines(theta_deg, phi_deg):
    """Return ``(cos t cos p, sin p, sin t cos p)`` for angles in degrees.

    Works elementwise on scalars or arrays.  Degree-argument trig keeps
    multiples of 90 exact, so e.g. ``phi = 90`` gives a true zero.
    """
    cp = cosdg(phi_deg)
    return cosdg(theta_deg) * cp, sindg(phi_deg), sindg(theta_deg) * cp


def _steering(theta_deg, phi_deg, geometry: ArrayGeometry, displaced: bool) -> np.ndarray:
    d_x, d_z = position_vectors(geometry)
    u, w, s = (np.asarray(c, dtype=float) for c in direction_cosines(theta_deg, phi_deg))
    phase = np.multiply.outer(d_x, u) + np.multiply.outer(d_z, w)
    if displaced:
        phase = phase + np.multiply.outer(geometry.y_displacements, s)
    return np.exp(2j * np.pi / geometry.wavelength * phase)


def steering_upa(angle: AnglePair, geometry: ArrayGeometry) -> np.ndarray:
    """Steering vector of the undisplaced planar grid (y positions ignored)."""
    return _steering(angle.theta_deg, angle.phi_deg, geometry, displaced=False)


def steering_y_shift(angle: AnglePair, y_displacements, wavelength: float = 1.0) -> np.ndarray:
    """Phase factor contributed by the y displacements alone."""
    _, _, s = direction_cosines(angle.theta_deg, angle.phi_deg)
    dy = np.asarray(y_displacements, dtype=float)
    return np.exp(2j * np.pi / wavelength * dy * s)


def steering_fa(angle: AnglePair, geometry: ArrayGeometry) -> np.ndarray:
    """Full steering vector of the displaced array.

    Equal to ``steering_upa(angle, g) * steering_y_shift(angle, g.y_displacements)``
    but evaluated as a single phase sum.
    """
    return _steering(angle.theta_deg, angle.phi_deg, geometry, displaced=True)


def steering_matrix(theta_deg, phi_deg, geometry: ArrayGeometry, displaced: bool = True) -> np.ndarray:
    """Steering vectors for paired arrays of angles, shape ``(N, *theta.shape)``."""
    theta_deg, phi_deg = np.broadcast_arrays(np.asarray(theta_deg, float), np.asarray(phi_deg, float))
    return _steering(theta_deg, phi_deg, geometry, displaced)


def steering_function(geometry: ArrayGeometry, displaced: bool = True):
    """Vectorised ``(theta, phi) -> (N, ...)`` steering callable for grid searches.

    ``displaced=False`` gives the virtual (undisplaced) grid manifold.
    """
    return functools.partial(steering_matrix, geometry=geometry, displaced=displaced)


def manifold(angles, geometry: ArrayGeometry) -> np.ndarray:
    """Columns are :func:`steering_fa` for each angle, shape ``(N, L)``."""
    angles = list(angles)
    theta = np.array([a.theta_deg for a in angles])
    phi = np.array([a.phi_deg for a in angles])
    return _steering(theta, phi, geometry, displaced=True)


def solve_y_displacements(
    true_angle: AnglePair,
    virtual_angle: AnglePair,
    geometry: ArrayGeometry,
    tol: float = SINGULAR_TOL,
) -> np.ndarray:
    """Per-element y displacements mapping ``true_angle`` onto ``virtual_angle``.

    With the returned displacements applied, the displaced array's steering
    vector at ``true_angle`` equals the undisplaced grid's steering vector at
    ``virtual_angle`` element by element.

    Raises:
        SingularTrueAngle: if ``|sin(theta_t) cos(phi_t)| < tol``.
    """
    u_t, w_t, s_t = direction_cosines(true_angle.theta_deg, true_angle.phi_deg)
    u_v, w_v, _ = direction_cosines(virtual_angle.theta_deg, virtual_angle.phi_deg)
    if abs(s_t) < tol:
        raise SingularTrueAngle(f"true angle {true_angle} has |sin(theta)cos(phi)| = {abs(s_t):.3g} < {tol:g}")
    d_x, d_z = position_vectors(geometry)
    return (d_x * (u_v - u_t) + d_z * (w_v - w_t)) / s_t


def steering_correlation(a, b) -> float:
    """Normalised correlation ``|a^H b|^2 / N^2`` of two steering vectors."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"steering vectors must be 1-D and equal length, got {a.shape} and {b.shape}")
    n = a.shape[0]
    return float(np.abs(np.vdot(a, b)) ** 2 / n**2)


def correlation_grid(true_angle: AnglePair, geometry: ArrayGeometry, theta_grid, phi_grid) -> np.ndarray:
    """Correlation of ``steering_fa(true_angle)`` with every grid point.

    Returns an array of shape ``(len(theta_grid), len(phi_grid))``.
    """
    theta_grid = np.asarray(theta_grid, float)
    phi_grid = np.asarray(phi_grid, float)
    tt, pp = np.meshgrid(theta_grid, phi_grid, indexing="ij")
    a_true = steering_fa(true_angle, geometry)
    grid = steering_matrix(tt, pp, geometry)
    n = geometry.n_elements
    return np.abs(np.tensordot(a_true.conj(), grid, axes=(0, 0))) ** 2 / n**2
