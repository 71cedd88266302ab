"""Unit 3-vector measurement directions and standard geometries."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

UNIT_TOL = 1e-12


@dataclass(frozen=True)
class Direction3:
    """A measurement direction: unit 3-vector with components (x, y, z)."""

    x: float
    y: float
    z: float

    def __post_init__(self):
        n2 = self.x * self.x + self.y * self.y + self.z * self.z
        if abs(n2 - 1.0) > UNIT_TOL:
            raise ValidationError(
                f"direction ({self.x}, {self.y}, {self.z}) is not a unit vector: "
                f"|v|^2 - 1 = {n2 - 1.0:.3e}"
            )

    @classmethod
    def normalized(cls, x: float, y: float, z: float) -> "Direction3":
        """Build a direction from an arbitrary nonzero 3-vector."""
        n = math.sqrt(x * x + y * y + z * z)
        if n == 0.0:
            raise ValidationError("cannot normalize the zero vector")
        return cls(x / n, y / n, z / n)

    @classmethod
    def from_polar(cls, theta: float, phi: float = 0.0) -> "Direction3":
        """Direction at polar angle theta from +z, azimuth phi from +x."""
        st = math.sin(theta)
        return cls(st * math.cos(phi), st * math.sin(phi), math.cos(theta))

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)

    def dot(self, other: "Direction3") -> float:
        return self.x * other.x + self.y * other.y + self.z * other.z


X_AXIS = Direction3(1.0, 0.0, 0.0)
Y_AXIS = Direction3(0.0, 1.0, 0.0)
Z_AXIS = Direction3(0.0, 0.0, 1.0)


def dot(d1: Direction3, d2: Direction3) -> float:
    return d1.dot(d2)


def angle_between(d1: Direction3, d2: Direction3) -> float:
    """Angle in [0, pi] between two unit directions."""
    return math.acos(max(-1.0, min(1.0, d1.dot(d2))))


def max_violation_triple() -> tuple[Direction3, Direction3, Direction3]:
    """The (a, b, c) triple with b.c = 0 and a = (b - c)/sqrt(2).

    This geometry maximizes |a.b - a.c| + b.c at sqrt(2), the largest value
    the sequential-measurement correlators can reach.
    """
    b = Z_AXIS
    c = X_AXIS
    s = 1.0 / math.sqrt(2.0)
    a = Direction3(-s, 0.0, s)  # (b - c)/sqrt(2)
    return a, b, c


def coplanar_quadruple(
    deg_a: float, deg_a_prime: float, deg_b: float, deg_b_prime: float
) -> tuple[Direction3, Direction3, Direction3, Direction3]:
    """Four directions in the x-z plane at the given polar angles (degrees)."""
    return tuple(Direction3.from_polar(math.radians(d)) for d in (deg_a, deg_a_prime, deg_b, deg_b_prime))


def tsirelson_quadruple() -> tuple[Direction3, Direction3, Direction3, Direction3]:
    """The coplanar 0/90/45/135-degree settings giving CHSH = 2*sqrt(2) on a singlet."""
    return coplanar_quadruple(0.0, 90.0, 45.0, 135.0)
