"""Layered run configuration: dataclass defaults -> JSON file -> dotted-key overrides.

Every module reads its knobs from one section of :class:`Config`; unknown keys
are rejected so a printed effective-config dump fully reproduces a run.
"""

from __future__ import annotations

import dataclasses
import json
import math
import os
from dataclasses import dataclass, field
from typing import Any

ENV_CONFIG_VAR = "LANECRAFT_CONFIG"


@dataclass
class TrackConfig:
    tile_size: float = 0.585
    lane_width: float = 0.23
    straight_subdiv: int = 4
    curve_points: int = 16  # points per quarter-circle


@dataclass
class VehicleConfig:
    dt: float = 0.05
    v_max: float = 1.0
    omega_max: float = 4.0
    radius: float = 0.06
    length: float = 0.12
    noise_v: float = 0.0
    noise_omega: float = 0.0
    latency_steps: int = 0
    action_scale: float = 1.0
    lag_time_constant: float = 0.0  # 0 = commands applied instantly
    preset: str = "db21"


# preset name -> overrides applied on top of VehicleConfig defaults
VEHICLE_PRESETS = {
    "db21": {"latency_steps": 0},
    "db19-latency": {"latency_steps": 4},  # round(0.2 s / 0.05 s)
}


@dataclass
class RenderConfig:
    width: int = 640
    height: int = 480
    fov_deg: float = 160.0
    cam_height: float = 0.11
    cam_pitch: float = math.radians(15.0)
    white_line_width: float = 0.05
    yellow_line_width: float = 0.025
    yellow_dash_on: float = 0.10
    yellow_dash_off: float = 0.05
    view_distance: float = 2.0


@dataclass
class SceneStyleConfig:
    road_rgb: tuple = (64, 64, 64)
    background_rgb: tuple = (28, 32, 24)
    white_rgb: tuple = (240, 240, 240)
    yellow_rgb: tuple = (220, 200, 0)
    red_rgb: tuple = (200, 40, 40)
    gain: float = 1.0
    noise_sigma: float = 0.0
    # domain-randomization jitter ranges
    color_jitter: int = 15
    gain_low: float = 0.7
    gain_high: float = 1.3
    noise_sigma_max: float = 8.0


@dataclass
class PerceptionConfig:
    kmeans_k: int = 5
    kmeans_iters: int = 12
    subsample: int = 7
    min_matched_classes: int = 3
    canny_sigma: float = 1.4
    canny_low: float = 40.0
    canny_high: float = 80.0
    # HSV intervals (H in degrees, S/V in [0,1])
    white_s_max: float = 0.15
    white_v_min: float = 0.65
    yellow_h: tuple = (35.0, 75.0)
    yellow_s_min: float = 0.35
    red_h_low: tuple = (0.0, 15.0)
    red_h_high: tuple = (345.0, 360.0)
    red_s_min: float = 0.35
    hough_theta_step_deg: float = 1.0
    hough_min_votes: int = 12
    hough_min_length_px: float = 8.0
    hough_max_gap_px: float = 3.0
    color_mask_dilate: int = 2
    max_range: float = 1.0
    min_segment_length_m: float = 0.015
    max_segment_angle: float = 1.2  # rad, ground frame; steeper is treated as noise
    grid_d_min: float = -0.3
    grid_d_max: float = 0.3
    grid_d_step: float = 0.01
    grid_phi_min: float = -math.pi / 2
    grid_phi_max: float = math.pi / 2
    grid_phi_step: float = 0.05


@dataclass
class VfgConfig:
    chi_inf: float = math.pi / 2
    k: float = 5.0


@dataclass
class PidConfig:
    kp: float = 2.0
    kd: float = 5.0
    v_const: float = 0.55
    kp_d: float = -6.0
    ki_d: float = -5.0
    kp_theta: float = -0.3
    integral_clamp: float = 1.0


@dataclass
class RewardConfig:
    w_c: float = 0.3
    w_v: float = 0.6
    w_theta: float = 0.1
    a: float = 0.001
    k_rc: float = 0.6
    v_desired: float = 0.5
    mode: str = "bonus"  # "literal" reproduces the printed sub-reward table rows

    def __post_init__(self):
        if abs(self.w_c + self.w_v + self.w_theta - 1.0) > 1e-9:
            raise ValueError("reward weights must sum to 1.0")
        if not 0.0 < self.a < 1.0:
            raise ValueError("reward factor a must lie in (0,1)")
        if self.k_rc <= 0:
            raise ValueError("k_rc must be positive")


@dataclass
class ScenarioConfig:
    map_id: str = "circle"
    scenario: str = "lf"  # "lf" | "ot"
    leader_enabled: bool = False
    leader_speed: float = 0.2
    leader_stop_prob: float = 0.02  # per second
    leader_stop_duration: float = 5.0
    leader_gap_min: float = 0.3
    leader_gap_max: float = 1.5
    detection_range: float = 0.4
    detection_cone: float = math.radians(30.0)
    ttc_cap: float = 10.0
    v_eps: float = 1e-3
    perception_source: str = "ground-truth"  # or "pipeline"
    observation_mode: str = "train"  # or "eval"
    spawn_lateral: float = 0.05
    spawn_heading: float = 0.3
    infraction_margin: float = 0.10


@dataclass
class RlConfig:
    hidden: int = 256
    lstm_hidden: int = 256
    history: int = 2
    buffer_size: int = 100_000
    batch_size: int = 100
    actor_lr: float = 1e-4
    critic_lr: float = 1e-4
    gamma: float = 0.99
    tau: float = 0.005
    update_start: int = 5000
    update_every: int = 1
    policy_delay: int = 2
    sac_alpha: float = 0.2
    td3_expl_noise: float = 0.1
    td3_target_noise: float = 0.2
    td3_noise_clip: float = 0.5
    log_std_min: float = -20.0
    log_std_max: float = 2.0
    eval_interval: int = 5000
    eval_episodes: int = 10
    smoothing: float = 0.9
    total_steps: int = 150_000

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("gamma must lie in (0,1)")
        if not 0.0 < self.tau <= 1.0:
            raise ValueError("tau must lie in (0,1]")


@dataclass
class EvalConfig:
    episodes: int = 100
    horizon: float = 60.0
    mode: str = "fast"  # "fast" | "slow"
    slow_scale: float = 0.55
    seed: int = 0


@dataclass
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8477
    tick_hz: float = 20.0
    lockstep: bool = False
    camera_frames: bool = False
    camera_every: int = 5
    camera_only: bool = False  # fidelity toggle: frames omit pose/lane fields
    max_attempts: int = 6
    data_dir: str = "service_data"


@dataclass
class Config:
    seed: int = 0
    out_dir: str = "out"
    track: TrackConfig = field(default_factory=TrackConfig)
    vehicle: VehicleConfig = field(default_factory=VehicleConfig)
    render: RenderConfig = field(default_factory=RenderConfig)
    style: SceneStyleConfig = field(default_factory=SceneStyleConfig)
    perception: PerceptionConfig = field(default_factory=PerceptionConfig)
    vfg: VfgConfig = field(default_factory=VfgConfig)
    pid: PidConfig = field(default_factory=PidConfig)
    reward: RewardConfig = field(default_factory=RewardConfig)
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    rl: RlConfig = field(default_factory=RlConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)
    service: ServiceConfig = field(default_factory=ServiceConfig)


def _apply_dict(obj: Any, data: dict, prefix: str = "") -> None:
    names = {f.name for f in dataclasses.fields(obj)}
    for key, value in data.items():
        if key not in names:
            raise KeyError(f"unknown config key: {prefix}{key}")
        current = getattr(obj, key)
        if dataclasses.is_dataclass(current) and isinstance(value, dict):
            _apply_dict(current, value, prefix=f"{prefix}{key}.")
        else:
            setattr(obj, key, _coerce(current, value, f"{prefix}{key}"))


def _coerce(current: Any, value: Any, path: str) -> Any:
    if isinstance(current, bool):
        if isinstance(value, bool):
            return value
        if isinstance(value, str):
            if value.lower() in ("true", "1", "yes"):
                return True
            if value.lower() in ("false", "0", "no"):
                return False
        raise ValueError(f"cannot parse boolean for {path}: {value!r}")
    if isinstance(current, int) and not isinstance(current, bool):
        return int(value)
    if isinstance(current, float):
        return float(value)
    if isinstance(current, tuple):
        if isinstance(value, str):
            value = json.loads(value)
        return tuple(value)
    return value


def apply_override(cfg: Config, dotted_key: str, value: str) -> None:
    """Apply a single `section.key=value` override onto the config tree."""
    parts = dotted_key.split(".")
    obj = cfg
    for part in parts[:-1]:
        if not hasattr(obj, part):
            raise KeyError(f"unknown config key: {dotted_key}")
        obj = getattr(obj, part)
    leaf = parts[-1]
    if not dataclasses.is_dataclass(obj) or leaf not in {f.name for f in dataclasses.fields(obj)}:
        raise KeyError(f"unknown config key: {dotted_key}")
    setattr(obj, leaf, _coerce(getattr(obj, leaf), value, dotted_key))


def load_config(path: str | None = None, overrides: list[str] | None = None) -> Config:
    """Build the effective config: defaults, then file, then key=value overrides."""
    cfg = Config()
    path = path or os.environ.get(ENV_CONFIG_VAR)
    if path:
        with open(path) as fh:
            _apply_dict(cfg, json.load(fh))
    preset = VEHICLE_PRESETS.get(cfg.vehicle.preset)
    if preset is None:
        raise KeyError(f"unknown vehicle preset: {cfg.vehicle.preset}")
    for key, value in preset.items():
        setattr(cfg.vehicle, key, value)
    # explicit command-line overrides win over the preset
    for item in overrides or []:
        key, _, value = item.partition("=")
        if not _:
            raise ValueError(f"override must look like key=value, got {item!r}")
        apply_override(cfg, key.strip(), value.strip())
    return cfg


def config_dict(cfg: Config) -> dict:
    return dataclasses.asdict(cfg)


def dump_config(cfg: Config) -> str:
    return json.dumps(config_dict(cfg), indent=2, sort_keys=True)
