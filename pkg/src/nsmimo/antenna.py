"""Antenna arrays with dual-polarized field patterns."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

__all__ = ["AntennaArray", "isotropic_vertical", "isotropic_dual", "half_wave_dipole", "PATTERNS"]

# pattern(elevation_deg, azimuth_deg) -> (F_V, F_H), each broadcast to the angle shape
Pattern = Callable[[np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray]]


def isotropic_vertical(elevation, azimuth):
    ones = np.ones(np.broadcast(elevation, azimuth).shape)
    return ones, np.zeros_like(ones)


def isotropic_dual(elevation, azimuth):
    """Equal V and H response, each with half the power."""
    g = np.full(np.broadcast(elevation, azimuth).shape, np.sqrt(0.5))
    return g, g.copy()


def half_wave_dipole(elevation, azimuth):
    """Vertical half-wave dipole; elevation measured from the horizon."""
    el = np.radians(np.broadcast_to(elevation, np.broadcast(elevation, azimuth).shape))
    cos_el = np.cos(el)
    with np.errstate(divide="ignore", invalid="ignore"):
        f_v = np.where(np.abs(cos_el) < 1e-12, 0.0, np.cos(0.5 * np.pi * np.sin(el)) / cos_el)
    return f_v, np.zeros_like(f_v)


PATTERNS: dict[str, Pattern] = {
    "isotropic": isotropic_vertical,
    "isotropic-dual": isotropic_dual,
    "dipole": half_wave_dipole,
}


@dataclass(eq=False)
class AntennaArray:
    """Element positions (meters, relative to element 0) and a shared pattern.

    Element 0 sits at the origin of the local coordinate system.
    """

    positions: np.ndarray
    pattern: str = "isotropic"
    _pattern_fn: Pattern = field(init=False, repr=False)

    def __post_init__(self):
        pos = np.atleast_2d(np.asarray(self.positions, dtype=float))
        if pos.shape[-1] != 3:
            raise ValueError("antenna positions must have shape (n, 3)")
        if not np.all(np.isfinite(pos)):
            raise ValueError("antenna positions must be finite")
        if np.any(pos[0] != 0.0):
            raise ValueError("the first antenna element must sit at the origin")
        if self.pattern not in PATTERNS:
            raise ValueError(f"unknown antenna pattern {self.pattern!r}; choose from {sorted(PATTERNS)}")
        self.positions = pos
        self._pattern_fn = PATTERNS[self.pattern]

    @classmethod
    def ula(cls, n_elements: int, spacing: float, axis: str = "y", pattern: str = "isotropic") -> "AntennaArray":
        """Uniform linear array with ``spacing`` meters along ``axis``."""
        if n_elements < 1:
            raise ValueError("an array needs at least one element")
        unit = {"x": (1.0, 0.0, 0.0), "y": (0.0, 1.0, 0.0), "z": (0.0, 0.0, 1.0)}[axis]
        pos = np.arange(n_elements)[:, None] * spacing * np.asarray(unit)
        return cls(pos, pattern)

    @classmethod
    def single(cls, pattern: str = "isotropic") -> "AntennaArray":
        return cls(np.zeros((1, 3)), pattern)

    def __eq__(self, other):
        if not isinstance(other, AntennaArray):
            return NotImplemented
        return self.pattern == other.pattern and np.array_equal(self.positions, other.positions)

    __hash__ = None

    @property
    def n_elements(self) -> int:
        return self.positions.shape[0]

    def field(self, elevation, azimuth):
        """(F_V, F_H) of every element; the pattern is shared by all elements."""
        return self._pattern_fn(np.asarray(elevation, dtype=float), np.asarray(azimuth, dtype=float))
