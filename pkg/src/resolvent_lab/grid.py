"""Polar sampling grids on disks centred at the origin."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Grid:
    """Polar grid with radii ``max_radius * k / radius_count`` (k = 1..radius_count)
    and ``angle_count`` uniform angles starting at 0.

    The origin is never a node.
    """

    radius_count: int = 64
    angle_count: int = 256
    max_radius: float = 0.999

    def __post_init__(self):
        if self.radius_count < 1 or self.angle_count < 1:
            raise ValueError("grid dimensions must be positive")
        if not (self.max_radius > 0.0 and math.isfinite(self.max_radius)):
            raise ValueError(f"max_radius must be positive, got {self.max_radius!r}")

    @classmethod
    def for_domain(cls, bound: float, radius_count: int = 64, angle_count: int = 256, shrink: float = 0.999):
        return cls(radius_count, angle_count, shrink * bound)

    @property
    def radii(self) -> np.ndarray:
        k = np.arange(1, self.radius_count + 1)
        return self.max_radius * (k / self.radius_count)

    @property
    def angles(self) -> np.ndarray:
        return 2.0 * math.pi * np.arange(self.angle_count) / self.angle_count

    def points(self) -> np.ndarray:
        """Nodes as a ``(radius_count, angle_count)`` complex array, row-major radius-then-angle."""
        return np.multiply.outer(self.radii, np.exp(1j * self.angles))

    def with_radius(self, max_radius: float) -> "Grid":
        return Grid(self.radius_count, self.angle_count, max_radius)

    def to_dict(self) -> dict:
        return {"radius_count": self.radius_count, "angle_count": self.angle_count, "max_radius": self.max_radius}

    @classmethod
    def parse(cls, text: str, max_radius: float = 0.999) -> "Grid":
        """Parse ``"NRxNA"`` as used on the command line."""
        nr, na = text.lower().split("x")
        return cls(int(nr), int(na), max_radius)
