"""Classical benchmark controllers and the slow leader vehicle's driver.

The PD form consumes exact simulator state; the PI form consumes perception
estimates. Both output a turn-rate command at a constant commanded speed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import wrap_angle
from .vehicle import Action


@dataclass
class PdGains:
    kp: float = 2.0
    kd: float = 5.0
    v_const: float = 0.55


@dataclass
class PiGains:
    kp_d: float = -6.0
    ki_d: float = -5.0
    kp_theta: float = -0.3
    integral_clamp: float = 1.0


def pd_steering(theta_t: float, theta_prev: float, gains: PdGains) -> float:
    """Turn rate from consecutive orientation-deviation samples."""
    return gains.kp * theta_t + gains.kd * (theta_t - theta_prev)


@dataclass
class PiState:
    integral: float = 0.0


def pi_steering(d_t: float, theta_t: float, state: PiState, gains: PiGains) -> float:
    """Turn rate from perception-estimated lateral and orientation deviation.

    The lateral integral accumulates first (the sum includes the current
    sample) and is clamped for anti-windup.
    """
    state.integral = float(
        np.clip(state.integral + d_t, -gains.integral_clamp, gains.integral_clamp)
    )
    return gains.kp_d * d_t + gains.ki_d * state.integral + gains.kp_theta * theta_t


class PdLaneFollower:
    """Lane follower on ground-truth lane pose, used as benchmark and leader brain.

    Feeds the printed control law with the tangent-minus-heading deviation so
    positive output turns toward the lane direction.
    """

    def __init__(self, gains: PdGains | None = None, v_const: float | None = None):
        self.gains = gains or PdGains()
        self.v_const = self.gains.v_const if v_const is None else v_const
        self._prev = 0.0

    def reset(self):
        self._prev = 0.0

    def act(self, lane_d: float, lane_phi: float) -> Action:
        deviation = float(wrap_angle(-lane_phi))
        omega = pd_steering(deviation, self._prev, self.gains)
        self._prev = deviation
        return Action(self.v_const, omega)


class PiLaneFollower:
    """Lane follower on perception estimates (real-world-style control law)."""

    def __init__(self, gains: PiGains | None = None, v_const: float = 0.3):
        self.gains = gains or PiGains()
        self.v_const = v_const
        self.state = PiState()

    def reset(self):
        self.state = PiState()

    def act(self, d_est: float, theta_est: float) -> Action:
        omega = pi_steering(d_est, theta_est, self.state, self.gains)
        return Action(self.v_const, omega)


@dataclass
class LeaderParams:
    speed: float = 0.2
    stop_prob: float = 0.02  # probability per second of entering a stop
    stop_duration: float = 5.0


class LeaderDriver:
    """Slow PD lane follower that occasionally halts for a fixed dwell time."""

    def __init__(self, params: LeaderParams, dt: float, rng: np.random.Generator,
                 gains: PdGains | None = None):
        self.params = params
        self.dt = dt
        self.rng = rng
        self.controller = PdLaneFollower(gains or PdGains(), v_const=params.speed)
        self._stop_left = 0.0

    def reset(self):
        self.controller.reset()
        self._stop_left = 0.0

    @property
    def stopped(self) -> bool:
        return self._stop_left > 0.0

    def force_stop(self):
        """Begin a stop phase: the next stop_duration/dt calls emit zero speed."""
        self._stop_left = self.params.stop_duration

    def act(self, lane_d: float, lane_phi: float) -> Action:
        if self._stop_left > 0.0:
            self._stop_left = max(0.0, self._stop_left - self.dt)
            return Action(0.0, 0.0)
        if self.params.stop_prob > 0.0:
            if self.rng.random() < self.params.stop_prob * self.dt:
                # the triggering tick is the first stopped tick
                self._stop_left = self.params.stop_duration - self.dt
                return Action(0.0, 0.0)
        return self.controller.act(lane_d, lane_phi)
