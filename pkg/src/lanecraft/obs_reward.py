"""Observation-vector assembly and the training reward.

The 8-slot observation is (d/d_w, theta/pi, v, |yaw offset|/2pi, lateral error,
gated time-to-collision, previous speed action, previous turn action). In eval
mode the two guidance slots carry the perception estimates instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import RewardConfig
from .geometry import wrap_angle

OBS_DIM = 8

T_MAX = 10.0  # time-to-collision cap, s
V_EPS = 1e-3


@dataclass(frozen=True)
class RangeReading:
    distance: float = 0.0  # m, to the nearest vehicle ahead
    valid: bool = False

    def __post_init__(self):
        if self.valid and self.distance < 0.0:
            raise ValueError("range distance must be >= 0 when valid")


NO_RANGE = RangeReading(0.0, False)


def time_to_collision(d_v: float, v: float, t_max: float = T_MAX, v_eps: float = V_EPS) -> float:
    """d_v / v, capped at t_max (and pinned there for a near-stationary ego)."""
    if d_v < 0.0:
        raise ValueError("distance must be >= 0")
    if v <= v_eps:
        return t_max
    return min(d_v / v, t_max)


def assemble_observation(
    d_delta: float,
    theta_delta: float,
    v: float,
    chi_yaw: float,
    e_y: float,
    range_reading: RangeReading,
    prev_action,
    *,
    d_w: float,
    detection_range: float,
    mode: str = "train",
    v_max: float = 1.0,
    omega_max: float = 4.0,
    t_max: float = T_MAX,
) -> np.ndarray:
    """Build the normalized 8-component input state.

    mode="train" fills slots 4/5 with guidance terms (|chi_yaw|/2pi, e_y);
    mode="eval" substitutes the perception estimates (|theta_delta|/2pi,
    d_delta). Slot 6 is exactly zero unless a vehicle sits within the
    detection range.
    """
    if mode not in ("train", "eval"):
        raise ValueError(f"unknown observation mode: {mode}")
    prev_v, prev_omega = prev_action
    obs = np.empty(OBS_DIM)
    obs[0] = d_delta / d_w
    obs[1] = theta_delta / math.pi
    obs[2] = v
    if mode == "train":
        obs[3] = abs(chi_yaw) / (2.0 * math.pi)
        obs[4] = e_y
    else:
        obs[3] = abs(theta_delta) / (2.0 * math.pi)
        obs[4] = d_delta
    if range_reading.valid and range_reading.distance <= detection_range:
        obs[5] = time_to_collision(range_reading.distance, v, t_max=t_max) / t_max
    else:
        obs[5] = 0.0
    obs[6] = prev_v / v_max
    obs[7] = prev_omega / omega_max
    if not np.all(np.isfinite(obs)):
        raise ValueError("non-finite observation component")
    return obs


@dataclass
class RewardBreakdown:
    r_c: float
    r_v: float
    r_theta: float
    penalty: bool = False


def compute_reward(
    collision_or_oob: bool,
    e_y: float,
    v: float,
    theta: float,
    cfg: RewardConfig,
    theta_star: float = 0.0,
):
    """Weighted sub-rewards, or the flat -1 penalty on collision / off-road.

    literal mode evaluates the printed sub-reward rows verbatim; bonus mode
    (the training default) turns the velocity and heading terms into bounded
    bonuses that peak at the targets.
    """
    if cfg.v_desired == 0.0:
        raise ValueError("v_desired must be nonzero")
    if collision_or_oob:
        return -1.0, RewardBreakdown(0.0, 0.0, 0.0, penalty=True)
    r_c = cfg.a ** (cfg.k_rc * abs(e_y))
    vel_dev = abs(v - cfg.v_desired) / cfg.v_desired
    heading_dev = abs(float(wrap_angle(theta - theta_star)))
    if cfg.mode == "literal":
        r_v = vel_dev
        r_theta = heading_dev
    elif cfg.mode == "bonus":
        r_v = 1.0 - min(1.0, vel_dev)
        r_theta = 1.0 - min(1.0, heading_dev / math.pi)
    else:
        raise ValueError(f"unknown reward mode: {cfg.mode}")
    total = cfg.w_c * r_c + cfg.w_v * r_v + cfg.w_theta * r_theta
    return float(total), RewardBreakdown(float(r_c), float(r_v), float(r_theta))
