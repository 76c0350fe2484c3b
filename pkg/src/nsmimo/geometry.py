"""Direction vectors, motion and Cartesian/spherical conversions.

Positions and velocities are plain ``numpy`` arrays whose last axis has
length 3 (x, y, z) in a flat global frame. Angles are degrees everywhere
outside of trigonometric evaluation; azimuth lives in (-180, 180] and
elevation in [-90, 90].
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.constants import speed_of_light

__all__ = [
    "SPEED_OF_LIGHT",
    "GeometryError",
    "DirectionAngles",
    "MotionState",
    "unit_direction",
    "velocity_vector",
    "cartesian_to_angles",
    "advance",
    "wrap_azimuth",
]

SPEED_OF_LIGHT = speed_of_light  # exactly 299 792 458 m/s

# Vectors shorter than this are treated as collapsed onto their anchor.
MIN_NORM = 1e-3


class GeometryError(ValueError):
    """Raised when a position vector degenerates (zero length)."""


class DirectionAngles(NamedTuple):
    """Azimuth and elevation in degrees; scalars or broadcastable arrays."""

    azimuth: np.ndarray | float
    elevation: np.ndarray | float


@dataclass(frozen=True)
class MotionState:
    """Speed (m/s) plus travel azimuth / elevation (degrees)."""

    speed: float
    travel_azimuth: float = 0.0
    travel_elevation: float = 0.0

    def __post_init__(self):
        if not np.isfinite(self.speed) or self.speed < 0:
            raise ValueError(f"speed must be finite and >= 0, got {self.speed}")
        if not (np.isfinite(self.travel_azimuth) and np.isfinite(self.travel_elevation)):
            raise ValueError("travel angles must be finite")


def wrap_azimuth(azimuth):
    """Wrap degrees into (-180, 180]."""
    wrapped = -np.mod(180.0 - np.asarray(azimuth, dtype=float), 360.0) + 180.0
    return wrapped if np.ndim(wrapped) else float(wrapped)


def unit_direction(azimuth, elevation) -> np.ndarray:
    """Unit vector ``(cos e cos a, cos e sin a, sin e)`` for angles in degrees.

    Accepts scalars or arrays; the result has shape ``broadcast + (3,)``.
    """
    az = np.radians(azimuth)
    el = np.radians(elevation)
    cos_el = np.cos(el)
    return np.stack(np.broadcast_arrays(cos_el * np.cos(az), cos_el * np.sin(az), np.sin(el)), axis=-1)


def velocity_vector(motion: MotionState) -> np.ndarray:
    return motion.speed * unit_direction(motion.travel_azimuth, motion.travel_elevation)


def cartesian_to_angles(p, label: str = "vector") -> DirectionAngles:
    """Convert position vectors to azimuth/elevation in degrees.

    Elevation is ``arcsin(z/|p|)``. Azimuth is ``arctan(y/x)`` corrected by
    +180 degrees when ``x < 0, y >= 0`` and by -180 degrees when
    ``x < 0, y < 0``. On the vertical axis (``x = y = 0``) the azimuth is
    defined as 0.

    Args:
        p: Array of shape ``(..., 3)``.
        label: Name used in the error message, e.g. ``"cluster 4 ray 7"``.

    Raises:
        GeometryError: If any vector is shorter than 1 mm.
    """
    p = np.asarray(p, dtype=float)
    x, y, z = p[..., 0], p[..., 1], p[..., 2]
    norm = np.sqrt(x * x + y * y + z * z)
    if np.any(norm < MIN_NORM):
        bad = np.argwhere(np.atleast_1d(norm < MIN_NORM))[0]
        raise GeometryError(f"{label} collapsed onto its anchor (|p| < 1 mm) at index {tuple(bad)}")
    elevation = np.degrees(np.arcsin(np.clip(z / norm, -1.0, 1.0)))

    with np.errstate(divide="ignore", invalid="ignore"):
        principal = np.degrees(np.arctan(y / x))
    azimuth = np.where(x >= 0, principal, np.where(y >= 0, principal + 180.0, principal - 180.0))
    # x == 0: arctan(+-inf) gives +-90; x == y == 0 is the pole.
    azimuth = np.where((x == 0) & (y == 0), 0.0, azimuth)
    azimuth = np.where(azimuth == -180.0, 180.0, azimuth)
    if azimuth.ndim == 0:
        return DirectionAngles(float(azimuth), float(elevation))
    return DirectionAngles(azimuth, elevation)


def advance(p0, v, t) -> np.ndarray:
    """Linear motion ``p0 + v t`` for ``t >= 0``."""
    if np.any(np.asarray(t) < 0):
        raise ValueError("advance() needs t >= 0")
    return np.asarray(p0, dtype=float) + np.asarray(v, dtype=float) * np.asarray(t, dtype=float)[..., None]
