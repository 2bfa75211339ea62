"""Differential-drive kinematics plus the actuation shims wrapped around it:
latency buffering, Gaussian control noise, and fast/slow action scaling."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, replace

import numpy as np

from .config import VehicleConfig
from .geometry import wrap_angle
from .track import Pose2D


@dataclass(frozen=True)
class Action:
    v: float = 0.0  # speed command, m/s
    omega: float = 0.0  # turn-rate command, rad/s

    def clamped(self, v_max: float, omega_max: float) -> "Action":
        return Action(
            min(max(self.v, 0.0), v_max),
            min(max(self.omega, -omega_max), omega_max),
        )


ZERO_ACTION = Action(0.0, 0.0)


@dataclass(frozen=True)
class VehicleState:
    pose: Pose2D
    v: float = 0.0
    omega: float = 0.0


def step(state: VehicleState, action: Action, dt: float, lag_time_constant: float = 0.0) -> VehicleState:
    """Advance unicycle kinematics by dt.

    Commands are tracked through an optional first-order lag; with the default
    zero time constant they take effect instantly.
    """
    if not all(math.isfinite(u) for u in (state.pose.x, state.pose.y, state.pose.theta, action.v, action.omega)):
        raise ValueError("non-finite state or action")
    if dt <= 0:
        raise ValueError("dt must be positive")
    if lag_time_constant > 0.0:
        blend = 1.0 - math.exp(-dt / lag_time_constant)
        v = state.v + (action.v - state.v) * blend
        omega = state.omega + (action.omega - state.omega) * blend
    else:
        v = action.v
        omega = action.omega
    x = state.pose.x + v * math.cos(state.pose.theta) * dt
    y = state.pose.y + v * math.sin(state.pose.theta) * dt
    theta = wrap_angle(state.pose.theta + omega * dt)
    return VehicleState(Pose2D(x, y, float(theta)), v=v, omega=omega)


class LatencyQueue:
    """Fixed-delay action buffer: output at step t is the input from t - latency_steps.

    Until the queue fills, the zero action is emitted.
    """

    def __init__(self, latency_steps: int):
        if latency_steps < 0:
            raise ValueError("latency_steps must be >= 0")
        self.latency_steps = latency_steps
        self._queue = deque([ZERO_ACTION] * latency_steps, maxlen=max(latency_steps, 1))

    def apply(self, action: Action) -> Action:
        if self.latency_steps == 0:
            return action
        delayed = self._queue.popleft()
        self._queue.append(action)
        return delayed

    def reset(self):
        self._queue = deque([ZERO_ACTION] * self.latency_steps, maxlen=max(self.latency_steps, 1))


def apply_latency(queue: LatencyQueue, action: Action) -> Action:
    return queue.apply(action)


def perturb_action(action: Action, sigma, rng: np.random.Generator,
                   v_max: float = 1.0, omega_max: float = 4.0) -> Action:
    """Add zero-mean Gaussian noise per channel, then clamp to bounds."""
    sv, so = (sigma, sigma) if np.isscalar(sigma) else sigma
    if sv < 0 or so < 0:
        raise ValueError("noise sigma must be >= 0")
    if sv == 0.0 and so == 0.0:
        return action.clamped(v_max, omega_max)
    noisy = Action(
        action.v + (rng.normal(0.0, sv) if sv > 0 else 0.0),
        action.omega + (rng.normal(0.0, so) if so > 0 else 0.0),
    )
    return noisy.clamped(v_max, omega_max)


def scale_action(action: Action, action_scale: float) -> Action:
    """Fast/slow driving modes: scale the speed command, keep steering."""
    if not 0.0 < action_scale <= 1.0:
        raise ValueError("action_scale must lie in (0, 1]")
    if action_scale == 1.0:
        return action
    return replace(action, v=action.v * action_scale)


class Actuation:
    """Bundles scaling, noise, and latency in the order they hit the plant."""

    def __init__(self, cfg: VehicleConfig, rng: np.random.Generator):
        self.cfg = cfg
        self.rng = rng
        self.queue = LatencyQueue(cfg.latency_steps)

    def reset(self):
        self.queue.reset()

    def process(self, action: Action) -> Action:
        a = scale_action(action, self.cfg.action_scale)
        a = perturb_action(a, (self.cfg.noise_v, self.cfg.noise_omega), self.rng,
                           self.cfg.v_max, self.cfg.omega_max)
        return self.queue.apply(a)
