"""Small planar-geometry helpers shared across modules."""

from __future__ import annotations

import numpy as np

TWO_PI = 2.0 * np.pi


def wrap_angle(theta):
    """Wrap an angle (scalar or array) to (-pi, pi]. -pi maps to +pi."""
    return np.pi - np.mod(np.pi - np.asarray(theta), TWO_PI)


def rot2d(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def unit(v: np.ndarray) -> np.ndarray:
    n = np.linalg.norm(v)
    if n == 0.0:
        raise ValueError("zero-length vector has no direction")
    return v / n
