"""Synthetic forward-camera views of lane markings via a ground-plane homography.

The camera is a wide pinhole at a fixed height and downward pitch. Rendering
walks every below-horizon pixel back to the ground plane and classifies it
against the map's marking geometry, so the same homography serves rendering
and perception reprojection.
"""

from __future__ import annotations

import base64
import io
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.spatial import cKDTree

from .config import RenderConfig, SceneStyleConfig
from .track import Pose2D, TrackMap


class HorizonError(ValueError):
    """Pixel at or above the horizon has no ground-plane preimage."""


@dataclass(frozen=True)
class CameraCalibration:
    width: int
    height: int
    fx: float
    fy: float
    cx: float
    cy: float
    cam_height: float
    cam_pitch: float  # rad, downward

    @property
    def horizon_row(self) -> float:
        return self.cy - self.fy * math.tan(self.cam_pitch)

    def homography(self) -> np.ndarray:
        """3x3 map from robot-frame ground (X forward, Y left, 1) to pixels."""
        ca, sa = math.cos(self.cam_pitch), math.sin(self.cam_pitch)
        h = self.cam_height
        return np.array(
            [
                [self.cx * ca, -self.fx, self.cx * h * sa],
                [self.cy * ca - self.fy * sa, 0.0, self.cy * h * sa + self.fy * h * ca],
                [ca, 0.0, h * sa],
            ]
        )

    def homography_inv(self) -> np.ndarray:
        return np.linalg.inv(self.homography())


def make_calibration(cfg: RenderConfig) -> CameraCalibration:
    fx = (cfg.width / 2.0) / math.tan(math.radians(cfg.fov_deg) / 2.0)
    return CameraCalibration(
        width=cfg.width,
        height=cfg.height,
        fx=fx,
        fy=fx,
        cx=cfg.width / 2.0,
        cy=cfg.height / 2.0,
        cam_height=cfg.cam_height,
        cam_pitch=cfg.cam_pitch,
    )


def ground_to_image(calib: CameraCalibration, point) -> tuple:
    """Project a robot-frame ground point (m) to pixel coordinates."""
    x, y = float(point[0]), float(point[1])
    uvw = calib.homography() @ np.array([x, y, 1.0])
    if uvw[2] <= 0.0:
        raise HorizonError(f"ground point {point} is not in front of the camera")
    return float(uvw[0] / uvw[2]), float(uvw[1] / uvw[2])


def image_to_ground(calib: CameraCalibration, pixel) -> tuple:
    """Back-project a pixel to the ground plane; raises at/above the horizon."""
    u, v = float(pixel[0]), float(pixel[1])
    if v <= calib.horizon_row:
        raise HorizonError(f"pixel row {v} is at or above the horizon ({calib.horizon_row:.2f})")
    xyw = calib.homography_inv() @ np.array([u, v, 1.0])
    return float(xyw[0] / xyw[2]), float(xyw[1] / xyw[2])


@dataclass(frozen=True)
class SceneStyle:
    road_rgb: tuple = (64, 64, 64)
    background_rgb: tuple = (28, 32, 24)
    white_rgb: tuple = (240, 240, 240)
    yellow_rgb: tuple = (220, 200, 0)
    red_rgb: tuple = (200, 40, 40)
    gain: float = 1.0
    noise_sigma: float = 0.0


def style_from_config(cfg: SceneStyleConfig) -> SceneStyle:
    return SceneStyle(
        road_rgb=tuple(cfg.road_rgb),
        background_rgb=tuple(cfg.background_rgb),
        white_rgb=tuple(cfg.white_rgb),
        yellow_rgb=tuple(cfg.yellow_rgb),
        red_rgb=tuple(cfg.red_rgb),
        gain=cfg.gain,
        noise_sigma=cfg.noise_sigma,
    )


def randomize_style(rng: np.random.Generator, base: SceneStyle,
                    cfg: SceneStyleConfig | None = None) -> SceneStyle:
    """Domain-randomize a base style: per-channel color jitter, gain, noise."""
    cfg = cfg or SceneStyleConfig()
    j = cfg.color_jitter

    def jit(rgb):
        if j == 0:
            return tuple(rgb)
        return tuple(int(np.clip(c + rng.integers(-j, j + 1), 0, 255)) for c in rgb)

    gain = base.gain if cfg.gain_low == cfg.gain_high else float(
        rng.uniform(cfg.gain_low, cfg.gain_high)
    )
    sigma = base.noise_sigma if cfg.noise_sigma_max == 0 else float(
        rng.uniform(0.0, cfg.noise_sigma_max)
    )
    return SceneStyle(
        road_rgb=jit(base.road_rgb),
        background_rgb=jit(base.background_rgb),
        white_rgb=jit(base.white_rgb),
        yellow_rgb=jit(base.yellow_rgb),
        red_rgb=jit(base.red_rgb),
        gain=gain,
        noise_sigma=sigma,
    )


class MarkingField:
    """Dense road-center sampling for fast lateral-offset queries during rendering."""

    def __init__(self, track: TrackMap, sample_step: float = 0.01):
        loop = track.center_loop
        pts = []
        tang = []
        arcs = []
        n = len(loop)
        for k in range(n):
            nxt = (k + 1) % n
            seg = loop.xy[nxt] - loop.xy[k]
            seg_len = float(np.hypot(seg[0], seg[1]))
            m = max(1, int(math.ceil(seg_len / sample_step)))
            t = np.linspace(0.0, 1.0, m, endpoint=False)
            pts.append(loop.xy[k] + np.outer(t, seg))
            tang.append(np.full(m, loop.chi[k]))
            arcs.append(loop.s[k] + t * seg_len)
        self.xy = np.concatenate(pts, axis=0)
        self.chi = np.concatenate(tang, axis=0)
        self.s = np.concatenate(arcs, axis=0)
        self.tree = cKDTree(self.xy)
        self.track = track

    def classify(self, points: np.ndarray, cfg: RenderConfig):
        """Label ground points: 0 background, 1 road, 2 white, 3 yellow, 4 red."""
        _, idx = self.tree.query(points, workers=-1)
        near = self.xy[idx]
        chi = self.chi[idx]
        rel = points - near
        # signed lateral offset from road center, positive left of travel
        lat = -np.sin(chi) * rel[:, 0] + np.cos(chi) * rel[:, 1]
        dist = np.hypot(rel[:, 0], rel[:, 1])
        road_half = self.track.road_half_width
        labels = np.zeros(len(points), dtype=np.uint8)
        on_road = dist <= road_half
        labels[on_road] = 1
        white = on_road & (np.abs(lat) >= road_half - cfg.white_line_width)
        labels[white] = 2
        dash_period = cfg.yellow_dash_on + cfg.yellow_dash_off
        dash_on = np.mod(self.s[idx], dash_period) < cfg.yellow_dash_on
        yellow = on_road & (np.abs(lat) <= cfg.yellow_line_width / 2.0) & dash_on
        labels[yellow] = 3
        if self.track.stop_lines:
            for x0, y0, x1, y1 in self.track.stop_lines:
                seg = np.array([x1 - x0, y1 - y0])
                seg_len = float(np.hypot(*seg))
                if seg_len == 0:
                    continue
                t = np.clip(((points - [x0, y0]) @ seg) / seg_len**2, 0.0, 1.0)
                proj = np.array([x0, y0]) + np.outer(t, seg)
                close = np.hypot(*(points - proj).T) <= cfg.white_line_width / 2.0
                labels[close & on_road] = 4
        return labels


_FIELD_CACHE: dict = {}


def marking_field(track: TrackMap) -> MarkingField:
    key = id(track)
    if key not in _FIELD_CACHE:
        _FIELD_CACHE[key] = MarkingField(track)
    return _FIELD_CACHE[key]


def render_forward_view(track: TrackMap, pose: Pose2D, calib: CameraCalibration,
                        style: SceneStyle, rng: np.random.Generator | None = None,
                        cfg: RenderConfig | None = None) -> np.ndarray:
    """Rasterize the forward view as an (H, W, 3) uint8 array.

    Deterministic given (map, pose, calibration, style, seed): noise draws come
    only from the supplied generator.
    """
    cfg = cfg or RenderConfig(width=calib.width, height=calib.height)
    H, W = calib.height, calib.width
    img = np.empty((H, W, 3), dtype=np.float64)
    img[:, :] = style.background_rgb

    first_row = int(math.floor(calib.horizon_row)) + 1
    if first_row < H:
        vs = np.arange(first_row, H)
        us = np.arange(W)
        uu, vv = np.meshgrid(us, vs)
        pix = np.stack([uu.ravel(), vv.ravel(), np.ones(uu.size)], axis=0)
        Hi = calib.homography_inv()
        g = Hi @ pix
        with np.errstate(divide="ignore", invalid="ignore"):
            gx = g[0] / g[2]
            gy = g[1] / g[2]
        ok = np.isfinite(gx) & np.isfinite(gy)
        # robot frame -> world frame
        c, s = math.cos(pose.theta), math.sin(pose.theta)
        wx = pose.x + gx * c - gy * s
        wy = pose.y + gx * s + gy * c
        rng_ok = ok & (np.hypot(gx, gy) <= cfg.view_distance)
        pts = np.stack([wx[rng_ok], wy[rng_ok]], axis=1)
        labels = np.zeros(gx.shape, dtype=np.uint8)
        if len(pts):
            labels[rng_ok] = marking_field(track).classify(pts, cfg)
        palette = np.array(
            [style.background_rgb, style.road_rgb, style.white_rgb,
             style.yellow_rgb, style.red_rgb], dtype=np.float64
        )
        img[first_row:, :] = palette[labels].reshape(H - first_row, W, 3)

    img *= style.gain
    if style.noise_sigma > 0.0:
        if rng is None:
            raise ValueError("noise_sigma > 0 requires an rng")
        img += rng.normal(0.0, style.noise_sigma, size=img.shape)
    return np.clip(np.rint(img), 0, 255).astype(np.uint8)


# ---------------------------------------------------------------------------
# PPM (P6) I/O for corpus files and wire frames


def write_ppm(path_or_file, image: np.ndarray) -> None:
    if image.ndim != 3 or image.shape[2] != 3 or image.dtype != np.uint8:
        raise ValueError("expected (H, W, 3) uint8 image")
    header = f"P6\n{image.shape[1]} {image.shape[0]}\n255\n".encode()
    if hasattr(path_or_file, "write"):
        path_or_file.write(header + image.tobytes())
    else:
        with open(path_or_file, "wb") as fh:
            fh.write(header + image.tobytes())


def read_ppm(path_or_file) -> np.ndarray:
    if hasattr(path_or_file, "read"):
        data = path_or_file.read()
    else:
        with open(path_or_file, "rb") as fh:
            data = fh.read()
    if not data.startswith(b"P6"):
        raise ValueError("not a binary PPM (P6) file")
    fields = []
    pos = 2
    while len(fields) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            while data[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        fields.append(int(data[start:pos]))
    pos += 1  # single whitespace after maxval
    w, h, maxval = fields
    if maxval != 255:
        raise ValueError("only 8-bit PPM supported")
    pixels = np.frombuffer(data, dtype=np.uint8, count=w * h * 3, offset=pos)
    return pixels.reshape(h, w, 3).copy()


def ppm_base64(image: np.ndarray) -> str:
    buf = io.BytesIO()
    write_ppm(buf, image)
    return base64.b64encode(buf.getvalue()).decode("ascii")
