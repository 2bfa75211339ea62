"""Tile-grid track geometry: lane paths, lane-relative pose queries, arc progress.

A map document is a grid of tile kinds. Road tiles carry a two-lane road whose
center polyline is traced into a single closed loop; offsetting that loop by
half a lane width to the right of each travel direction yields the two
right-lane centerline paths used by guidance, reward, and metrics.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .geometry import wrap_angle

TILE_KINDS = {"S_NS", "S_EW", "C_NE", "C_NW", "C_SE", "C_SW", "EMPTY"}

# ports are edges of a tile: N, E, S, W
_TILE_PORTS = {
    "S_NS": ("N", "S"),
    "S_EW": ("E", "W"),
    "C_NE": ("N", "E"),
    "C_NW": ("N", "W"),
    "C_SE": ("S", "E"),
    "C_SW": ("S", "W"),
}
_OPPOSITE = {"N": "S", "S": "N", "E": "W", "W": "E"}
_STEP = {"N": (-1, 0), "S": (1, 0), "E": (0, 1), "W": (0, -1)}


class MapError(ValueError):
    """Problem with a map document."""


class MapSchemaError(MapError):
    pass


class DisconnectedNetworkError(MapError):
    pass


@dataclass(frozen=True)
class PathPoint:
    x: float
    y: float
    chi: float  # direction of the chord to the successor point
    s: float  # cumulative arc length


@dataclass(frozen=True)
class Pose2D:
    x: float
    y: float
    theta: float  # wrapped to (-pi, pi]

    def __post_init__(self):
        object.__setattr__(self, "theta", float(wrap_angle(self.theta)))


class LanePath:
    """Closed polyline with fast nearest-vertex queries."""

    def __init__(self, points: np.ndarray):
        if len(points) < 3:
            raise MapError("path needs at least 3 vertices")
        self.xy = np.asarray(points, dtype=float)
        nxt = np.roll(self.xy, -1, axis=0)
        chords = nxt - self.xy
        seg_len = np.hypot(chords[:, 0], chords[:, 1])
        if np.any(seg_len == 0.0):
            raise MapError("degenerate path: duplicate consecutive vertices")
        self.chi = np.arctan2(chords[:, 1], chords[:, 0])
        self.s = np.concatenate([[0.0], np.cumsum(seg_len)[:-1]])
        self.length = float(np.sum(seg_len))

    def __len__(self) -> int:
        return len(self.xy)

    def point(self, k: int) -> PathPoint:
        return PathPoint(self.xy[k, 0], self.xy[k, 1], float(self.chi[k]), float(self.s[k]))

    def closest_index(self, x: float, y: float) -> int:
        # np.argmin returns the first minimum, which is exactly the
        # lowest-index tie-break the query contract asks for.
        dx = self.xy[:, 0] - x
        dy = self.xy[:, 1] - y
        return int(np.argmin(dx * dx + dy * dy))


def closest_path_point(path: LanePath, x: float, y: float) -> PathPoint:
    """Nearest path vertex to (x, y); exact ties break to the lowest index."""
    return path.point(path.closest_index(x, y))


def cross_track_error(path: LanePath, x: float, y: float) -> float:
    """Signed displacement from the path, positive when left of the travel direction.

    Vertex-anchored form: the offset is sin(bearing - chi) times the distance
    to the closest path vertex, zero when the query coincides with it.
    """
    if len(path) == 0:
        raise ValueError("empty path")
    p = closest_path_point(path, x, y)
    dx, dy = x - p.x, y - p.y
    dist = math.hypot(dx, dy)
    if dist == 0.0:
        return 0.0
    return math.sin(math.atan2(dy, dx) - p.chi) * dist


@dataclass
class TrackMap:
    tiles: list
    tile_size: float
    lane_width: float
    center_loop: LanePath
    right_lane_paths: list  # [LanePath, LanePath], one per travel direction
    drivable_region: list = field(default_factory=list)  # per-tile road polygons
    stop_lines: list = field(default_factory=list)  # optional [(x0,y0,x1,y1), ...]
    name: str = ""

    @property
    def road_half_width(self) -> float:
        return self.lane_width

    def distance_to_road_center(self, x: float, y: float) -> float:
        k = self.center_loop.closest_index(x, y)
        cx, cy = self.center_loop.xy[k]
        return math.hypot(x - cx, y - cy)

    def in_drivable(self, x: float, y: float) -> bool:
        return self.distance_to_road_center(x, y) <= self.road_half_width

    def off_road_excess(self, x: float, y: float) -> float:
        """Meters beyond the drivable edge (0 when on the road)."""
        return max(0.0, self.distance_to_road_center(x, y) - self.road_half_width)


def lane_pose(track: TrackMap, pose: Pose2D, direction: int | None = None):
    """Lane-relative pose against the nearest right-lane centerline.

    Returns (d, phi, in_drivable, on_right_lane): d is positive left of the
    lane center, phi is the wrapped heading offset from the local path
    direction. When `direction` is given the query is pinned to that travel
    direction's lane (used by episode metrics); otherwise the closer of the
    two lanes is used.
    """
    if direction is None:
        candidates = range(len(track.right_lane_paths))
    else:
        candidates = [direction]
    best = None
    for idx in candidates:
        path = track.right_lane_paths[idx]
        k = path.closest_index(pose.x, pose.y)
        px, py = path.xy[k]
        d2 = (pose.x - px) ** 2 + (pose.y - py) ** 2
        if best is None or d2 < best[0]:
            best = (d2, path, k)
    _, path, k = best
    chi = path.chi[k]
    nx, ny = -math.sin(chi), math.cos(chi)  # left normal of the travel direction
    d = (pose.x - path.xy[k, 0]) * nx + (pose.y - path.xy[k, 1]) * ny
    phi = float(wrap_angle(pose.theta - chi))
    drivable = track.in_drivable(pose.x, pose.y)
    on_right = drivable and abs(d) <= track.lane_width / 2.0
    return float(d), phi, drivable, on_right


def arc_progress(path: LanePath, positions) -> float:
    """Forward distance traveled along a closed path by a sampled position sequence.

    Positions are projected to the nearest path vertex; positive arc deltas
    accumulate, backward motion contributes zero. Wrap-around deltas larger
    than half the loop are treated as backward.
    """
    positions = np.asarray(positions, dtype=float)
    if len(positions) < 2:
        return 0.0
    total = 0.0
    prev_s = path.s[path.closest_index(positions[0, 0], positions[0, 1])]
    for x, y in positions[1:]:
        s = path.s[path.closest_index(x, y)]
        delta = (s - prev_s) % path.length
        if delta < path.length / 2.0:
            total += delta
        prev_s = s
    return float(total)


class ArcTracker:
    """Streaming version of arc_progress for episode loops."""

    def __init__(self, path: LanePath):
        self.path = path
        self._prev_s = None
        self.total = 0.0

    def update(self, x: float, y: float) -> float:
        s = self.path.s[self.path.closest_index(x, y)]
        if self._prev_s is not None:
            delta = (s - self._prev_s) % self.path.length
            if delta < self.path.length / 2.0:
                self.total += delta
        self._prev_s = s
        return self.total


# ---------------------------------------------------------------------------
# map loading


def _edge_midpoint(r, c, edge, n_rows, ts):
    cx = (c + 0.5) * ts
    cy = (n_rows - 1 - r + 0.5) * ts
    if edge == "N":
        return cx, cy + ts / 2
    if edge == "S":
        return cx, cy - ts / 2
    if edge == "E":
        return cx + ts / 2, cy
    return cx - ts / 2, cy


_CORNER = {  # curve kind -> corner offset (in tile units) of the arc center
    "C_NE": (0.5, 0.5),
    "C_NW": (-0.5, 0.5),
    "C_SE": (0.5, -0.5),
    "C_SW": (-0.5, -0.5),
}


def _tile_center_points(kind, r, c, enter_edge, n_rows, ts, straight_subdiv, curve_points):
    """Road-center points for a tile, ordered from the entry edge to the exit edge.

    Returns (points, tangents); the exit-edge midpoint is excluded (it is the
    next tile's entry point).
    """
    exit_edge = [e for e in _TILE_PORTS[kind] if e != enter_edge][0]
    x0, y0 = _edge_midpoint(r, c, enter_edge, n_rows, ts)
    x1, y1 = _edge_midpoint(r, c, exit_edge, n_rows, ts)
    if kind.startswith("S"):
        n = max(2, straight_subdiv)
        t = np.linspace(0.0, 1.0, n + 1)[:-1]
        pts = np.stack([x0 + (x1 - x0) * t, y0 + (y1 - y0) * t], axis=1)
        tang = np.full(len(pts), math.atan2(y1 - y0, x1 - x0))
        return pts, tang
    ox, oy = _CORNER[kind]
    cx = (c + 0.5 + ox) * ts
    cy = (n_rows - 1 - r + 0.5 + oy) * ts
    radius = ts / 2
    a0 = math.atan2(y0 - cy, x0 - cx)
    a1 = math.atan2(y1 - cy, x1 - cx)
    sweep = wrap_angle(a1 - a0)  # +-pi/2 for quarter turns
    n = max(4, curve_points)
    ang = a0 + sweep * np.linspace(0.0, 1.0, n + 1)[:-1]
    pts = np.stack([cx + radius * np.cos(ang), cy + radius * np.sin(ang)], axis=1)
    # tangent along travel: rotate radial direction +90 deg for ccw sweep
    tang = ang + (math.pi / 2 if sweep > 0 else -math.pi / 2)
    return pts, np.asarray(wrap_angle(tang))


def load_map(document) -> TrackMap:
    """Build a TrackMap from a parsed map document (dict) or JSON string."""
    if isinstance(document, str):
        document = json.loads(document)
    if not isinstance(document, dict):
        raise MapSchemaError("map document must be a JSON object")
    for key in ("tile_size", "lane_width", "tiles"):
        if key not in document:
            raise MapSchemaError(f"map document missing key: {key}")
    ts = float(document["tile_size"])
    d_w = float(document["lane_width"])
    if ts <= 0 or d_w <= 0:
        raise MapSchemaError("tile_size and lane_width must be positive")
    tiles = document["tiles"]
    if not tiles or not all(isinstance(row, list) and len(row) == len(tiles[0]) for row in tiles):
        raise MapSchemaError("tiles must be a non-empty rectangular grid")
    n_rows, n_cols = len(tiles), len(tiles[0])
    road = []
    for r, row in enumerate(tiles):
        for c, kind in enumerate(row):
            if kind not in TILE_KINDS:
                raise MapSchemaError(f"unknown tile kind {kind!r} at row {r} col {c}")
            if kind != "EMPTY":
                road.append((r, c))
    if not road:
        raise MapSchemaError("map has no road tiles")

    def neighbor(r, c, edge):
        dr, dc = _STEP[edge]
        rr, cc = r + dr, c + dc
        if 0 <= rr < n_rows and 0 <= cc < n_cols and tiles[rr][cc] != "EMPTY":
            return rr, cc
        return None

    # every port must mate with a port of the adjacent tile
    for r, c in road:
        for edge in _TILE_PORTS[tiles[r][c]]:
            nb = neighbor(r, c, edge)
            if nb is None or _OPPOSITE[edge] not in _TILE_PORTS[tiles[nb[0]][nb[1]]]:
                raise DisconnectedNetworkError(
                    f"tile at row {r} col {c} has an unconnected {edge} edge"
                )

    # walk the loop starting from the first road tile
    straight_subdiv = int(document.get("straight_subdiv", 4))
    curve_points = int(document.get("curve_points", 16))
    start = road[0]
    enter = _TILE_PORTS[tiles[start[0]][start[1]]][0]
    r, c = start
    visited = set()
    center_pts = []
    center_tang = []
    while (r, c, enter) not in visited:
        visited.add((r, c, enter))
        kind = tiles[r][c]
        pts, tang = _tile_center_points(
            kind, r, c, enter, n_rows, ts, straight_subdiv, curve_points
        )
        center_pts.append(pts)
        center_tang.append(tang)
        exit_edge = [e for e in _TILE_PORTS[kind] if e != enter][0]
        r, c = neighbor(r, c, exit_edge)
        enter = _OPPOSITE[exit_edge]
    if len({(rr, cc) for rr, cc, _ in visited}) != len(road):
        raise DisconnectedNetworkError("road network has more than one loop")
    center = np.concatenate(center_pts, axis=0)
    tangents = np.concatenate(center_tang, axis=0)

    # right-lane centerlines: offset half a lane to the right of travel
    half = d_w / 2.0
    fwd = np.stack([np.cos(tangents), np.sin(tangents)], axis=1)
    right = np.stack([fwd[:, 1], -fwd[:, 0]], axis=1)
    lane_fwd = LanePath(center + right * half)
    lane_rev = LanePath((center - right * half)[::-1])

    polygons = _road_polygons(tiles, n_rows, ts, d_w, curve_points)
    return TrackMap(
        tiles=[list(row) for row in tiles],
        tile_size=ts,
        lane_width=d_w,
        center_loop=LanePath(center),
        right_lane_paths=[lane_fwd, lane_rev],
        drivable_region=polygons,
        stop_lines=[tuple(sl) for sl in document.get("stop_lines", [])],
        name=document.get("name", ""),
    )


def _road_polygons(tiles, n_rows, ts, d_w, curve_points):
    polys = []
    for r, row in enumerate(tiles):
        for c, kind in enumerate(row):
            if kind == "EMPTY":
                continue
            cx = (c + 0.5) * ts
            cy = (n_rows - 1 - r + 0.5) * ts
            if kind == "S_NS":
                polys.append(
                    np.array(
                        [
                            [cx - d_w, cy - ts / 2],
                            [cx + d_w, cy - ts / 2],
                            [cx + d_w, cy + ts / 2],
                            [cx - d_w, cy + ts / 2],
                        ]
                    )
                )
            elif kind == "S_EW":
                polys.append(
                    np.array(
                        [
                            [cx - ts / 2, cy - d_w],
                            [cx + ts / 2, cy - d_w],
                            [cx + ts / 2, cy + d_w],
                            [cx - ts / 2, cy + d_w],
                        ]
                    )
                )
            else:
                ox, oy = _CORNER[kind]
                ax, ay = cx + ox * ts, cy + oy * ts
                a0 = math.atan2(cy - ay, cx - ax)  # ray toward tile center
                ang = a0 + np.linspace(-math.pi / 4, math.pi / 4, max(4, curve_points))
                inner = max(ts / 2 - d_w, 0.0)
                outer = ts / 2 + d_w
                arc_out = np.stack([ax + outer * np.cos(ang), ay + outer * np.sin(ang)], axis=1)
                arc_in = np.stack([ax + inner * np.cos(ang), ay + inner * np.sin(ang)], axis=1)
                polys.append(np.concatenate([arc_out, arc_in[::-1]], axis=0))
    return polys


def builtin_map_ids() -> list:
    files = resources.files("lanecraft.maps")
    return sorted(p.name[:-5] for p in files.iterdir() if p.name.endswith(".json"))


def load_builtin_map(map_id: str) -> TrackMap:
    files = resources.files("lanecraft.maps")
    path = files / f"{map_id}.json"
    try:
        text = path.read_text()
    except FileNotFoundError:
        raise MapError(f"no builtin map named {map_id!r}; available: {builtin_map_ids()}")
    track = load_map(text)
    track.name = map_id
    return track
