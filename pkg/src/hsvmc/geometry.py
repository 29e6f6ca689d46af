"""Periodic cubic box arithmetic."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import GeometryError


@dataclass(frozen=True)
class SimulationBox:
    """Cube ``[-L/2, L/2)^3`` with periodic identification."""

    side_length: float

    def __post_init__(self):
        if not (self.side_length > 0 and math.isfinite(self.side_length)):
            raise GeometryError(f"side length must be positive, got {self.side_length}")

    @property
    def volume(self) -> float:
        L = self.side_length
        return L * L * L

    def check_range(self, ell: float) -> None:
        """Raise GeometryError unless the ball of radius ``ell`` fits (2*ell <= L)."""
        if 2.0 * ell > self.side_length:
            raise GeometryError(
                f"interaction range {ell} too large for box side {self.side_length}"
            )

    def wrap(self, x):
        """Map positions into ``[-L/2, L/2)`` componentwise."""
        L = self.side_length
        x = np.asarray(x, dtype=np.float64)
        w = x - L * np.floor((x + 0.5 * L) / L)
        # rounding can land exactly on +L/2
        return np.where(w >= 0.5 * L, w - L, w)


def wrap_displacement(d, L: float):
    """Reduce displacement components to ``(-L/2, L/2]``; ties go to ``+L/2``."""
    d = np.asarray(d, dtype=np.float64)
    d = d - L * np.round(d / L)
    return np.where(d <= -0.5 * L, d + L, d)


def min_image_displacement(x, y, box: SimulationBox):
    """Minimum-image vector ``x - y`` on the torus.

    Works on single points or on broadcastable arrays of shape ``(..., 3)``.
    """
    xw = box.wrap(x)
    yw = box.wrap(y)
    return wrap_displacement(xw - yw, box.side_length)


def torus_distance(x, y, box: SimulationBox):
    d = min_image_displacement(x, y, box)
    return np.sqrt(np.sum(d * d, axis=-1))
