"""Vector-field guidance quantities fed to the agent during training."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .geometry import wrap_angle
from .track import Pose2D


@dataclass(frozen=True)
class VfgParams:
    chi_inf: float = math.pi / 2  # maximum course-angle variation, rad
    k: float = 5.0  # convergence rate, 1/m

    def __post_init__(self):
        if not 0.0 < self.chi_inf <= math.pi:
            raise ValueError("chi_inf must lie in (0, pi]")
        if self.k <= 0:
            raise ValueError("k must be positive")


def desired_course(e_y: float, chi_path: float, params: VfgParams) -> float:
    """Course command that relaxes onto the path direction as the error shrinks."""
    if not (math.isfinite(e_y) and math.isfinite(chi_path)):
        raise ValueError("non-finite input")
    return float(wrap_angle(params.chi_inf * math.atan(params.k * e_y) + chi_path))


def yaw_offset(pose: Pose2D, chi_d: float) -> float:
    """Wrapped offset between the desired course and the current heading."""
    return float(wrap_angle(chi_d - pose.theta))
