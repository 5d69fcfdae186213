"""Robot motion patterns: grid sweeps, circles, rectangles, waypoint paths."""

from __future__ import annotations

import numpy as np

from ..core import SceneConfig, Trajectory
from ..errors import ConfigurationError, GeometryError

PATTERNS = ("grid", "circle", "rectangle", "manual-waypoints")

# Grid sweeps keep one orientation; the UE faces away from the antenna wall.
GRID_HEADING = np.pi / 2


def _polyline(points: np.ndarray, step: float) -> np.ndarray:
    """Sample a polyline so every vertex is hit and steps stay close to ``step``."""
    out = [points[0]]
    for a, b in zip(points[:-1], points[1:]):
        length = float(np.linalg.norm(b - a))
        if length == 0.0:
            continue
        n = max(1, int(round(length / step)))
        frac = np.arange(1, n + 1)[:, None] / n
        out.extend(a + frac * (b - a))
    return np.array(out)


def gen_trajectory(pattern: str, scene: SceneConfig, speed: float, rate: float,
                   **params) -> Trajectory:
    """Generate a planar trajectory at constant height inside the scene area.

    Args:
        pattern: One of ``grid``, ``circle``, ``rectangle``, ``manual-waypoints``.
        scene: Scene whose area bounds every sample.
        speed: Path speed in m/s.
        rate: Sample rate in Hz.
        **params: Pattern parameters. ``grid``: ``y``, ``x_start``, ``x_end``,
            ``passes`` (2 = forward and back). ``circle``: ``center``,
            ``radius``, ``laps`` or ``duration``. ``rectangle``: ``corner``,
            ``width``, ``height``, ``laps``. ``manual-waypoints``:
            ``waypoints`` as a list of (x, y).

    Segment lengths are rounded to whole steps, so consecutive samples are
    ``speed / rate`` apart to within half a step per segment.
    """
    if not speed > 0:
        raise ConfigurationError(f"speed must be positive, got {speed}")
    if not rate > 0:
        raise ConfigurationError(f"rate must be positive, got {rate}")
    step = speed / rate
    z = float(params.pop("z", scene.source_height))
    t0 = float(params.pop("t0", 0.0))

    if pattern == "grid":
        y = float(params.pop("y", scene.area_y / 2))
        x_start = float(params.pop("x_start", 0.2))
        x_end = float(params.pop("x_end", scene.area_x - 0.2))
        passes = int(params.pop("passes", 2))
        if passes < 1:
            raise ConfigurationError("grid needs at least one pass")
        n = max(1, int(round(abs(x_end - x_start) / step)))
        x_end = x_start + np.sign(x_end - x_start) * n * step
        ends = [x_start, x_end]
        pts = np.array([[ends[k % 2], y] for k in range(passes + 1)])
        xy = _polyline(pts, step)
    elif pattern == "circle":
        center = np.asarray(params.pop("center", (scene.area_x / 2, scene.area_y / 2)), float)
        radius = float(params.pop("radius", 1.0))
        duration = params.pop("duration", None)
        laps = float(params.pop("laps", 1.0))
        phase = float(params.pop("phase", 0.0))
        if radius < 0:
            raise ConfigurationError("radius must be non-negative")
        if radius == 0.0:
            n = int(round(float(duration if duration is not None else 1.0) * rate)) + 1
            xy = np.tile(center, (n, 1))
        else:
            arc = float(duration) * speed if duration is not None else laps * 2 * np.pi * radius
            n = int(round(arc / step)) + 1
            ang = phase + np.arange(n) * (step / radius)
            xy = center + radius * np.stack([np.cos(ang), np.sin(ang)], axis=1)
    elif pattern == "rectangle":
        corner = np.asarray(params.pop("corner", (0.6, 0.5)), float)
        width = float(params.pop("width", scene.area_x - 1.2))
        height = float(params.pop("height", scene.area_y - 1.0))
        laps = int(params.pop("laps", 1))
        w = max(1, int(round(width / step))) * step
        h = max(1, int(round(height / step))) * step
        loop = [corner, corner + (w, 0), corner + (w, h), corner + (0, h)]
        pts = np.array(loop * laps + [corner])
        xy = _polyline(pts, step)
    elif pattern == "manual-waypoints":
        wps = params.pop("waypoints", None)
        if wps is None or len(wps) < 2:
            raise ConfigurationError("manual-waypoints needs at least two waypoints")
        xy = _polyline(np.asarray(wps, dtype=float).reshape(-1, 2), step)
    else:
        raise ConfigurationError(f"unknown pattern {pattern!r}; expected one of {PATTERNS}")

    if params:
        raise ConfigurationError(f"unused parameters for {pattern}: {sorted(params)}")
    if not np.all(scene.contains(xy)):
        raise GeometryError(
            f"{pattern} trajectory leaves the {scene.area_x} x {scene.area_y} m area")
    xyz = np.column_stack([xy, np.full(len(xy), z)])
    t = t0 + np.arange(len(xyz)) / rate
    return Trajectory(t, xyz, frame_rate_hint=rate)


def motion_heading(traj: Trajectory, pattern: str | None = None) -> np.ndarray:
    """Robot heading (radians) per sample.

    Grid sweeps keep a fixed orientation; every other pattern faces along the
    direction of travel.
    """
    if pattern == "grid":
        return np.full(len(traj), GRID_HEADING)
    if len(traj) < 2:
        return np.full(len(traj), GRID_HEADING)
    d = np.gradient(traj.xyz[:, :2], axis=0)
    heading = np.arctan2(d[:, 1], d[:, 0])
    still = np.hypot(d[:, 0], d[:, 1]) < 1e-12
    heading[still] = GRID_HEADING
    return heading
