"""Geometric multipath channel between a single-antenna UE and a linear array."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import _kernels
from ..core import ChannelSnapshot, SceneConfig, TimedPosition
from ..errors import ModelError

SPEED_OF_LIGHT = 299_792_458.0


@dataclass(frozen=True, eq=False)
class PathSet:
    """Propagation paths: per path a (possibly empty) reflection point list and a gain."""

    reflections: tuple
    gains: np.ndarray

    def __post_init__(self):
        refl = tuple(np.asarray(r, dtype=float).reshape(-1, 3) for r in self.reflections)
        gains = np.asarray(self.gains, dtype=np.complex128).reshape(-1)
        object.__setattr__(self, "reflections", refl)
        object.__setattr__(self, "gains", gains)
        if len(refl) != len(gains):
            raise ModelError("one gain per path required")
        if not np.all(np.isfinite(gains)):
            raise ModelError("path gains must be finite")

    def __len__(self) -> int:
        return len(self.gains)

    def scaled(self, factor: complex) -> "PathSet":
        return PathSet(self.reflections, self.gains * factor)


def line_of_sight(gain: complex = 1.0) -> PathSet:
    return PathSet((np.zeros((0, 3)),), [gain])


def wavelength(scene: SceneConfig) -> float:
    return SPEED_OF_LIGHT / scene.center_frequency


def antenna_positions(scene: SceneConfig) -> np.ndarray:
    """Half-wavelength uniform linear array along x, in front of the area's y=0 edge."""
    spacing = wavelength(scene) / 2
    a = np.arange(scene.antenna_count) - (scene.antenna_count - 1) / 2
    pos = np.zeros((scene.antenna_count, 3))
    pos[:, 0] = scene.area_x / 2 + a * spacing
    pos[:, 1] = -scene.array_standoff
    pos[:, 2] = scene.array_height
    return pos


def subcarrier_frequencies(scene: SceneConfig) -> np.ndarray:
    """Equally spaced tones ``bandwidth / K`` apart, centered on the carrier."""
    k = np.arange(scene.subcarrier_count) - (scene.subcarrier_count - 1) / 2
    return scene.center_frequency + k * (scene.bandwidth / scene.subcarrier_count)


def path_delays(src: np.ndarray, paths: PathSet, antennas: np.ndarray) -> np.ndarray:
    """Total geometric delay (s) of every path to every antenna, shape (P, A)."""
    out = np.empty((len(paths), len(antennas)))
    for p, pts in enumerate(paths.reflections):
        chain = np.vstack([src[None, :], pts])
        length = np.sum(np.linalg.norm(np.diff(chain, axis=0), axis=1))
        out[p] = length + np.linalg.norm(antennas - chain[-1], axis=1)
    return out / SPEED_OF_LIGHT


def synth_channel(position, scene: SceneConfig, paths: PathSet) -> ChannelSnapshot:
    """Frequency response ``H[a, k] = sum_p g_p exp(-2j pi f_k tau[p, a])``."""
    if len(paths) == 0:
        raise ModelError("path set is empty")
    if isinstance(position, TimedPosition):
        src, t = position.xyz, position.t
    else:
        src, t = np.asarray(position, dtype=float).reshape(3), 0.0
    delays = path_delays(src, paths, antenna_positions(scene))
    H = _kernels.channel_response(np.ascontiguousarray(delays), paths.gains,
                                  subcarrier_frequencies(scene))
    return ChannelSnapshot(H, t)


def ue_pattern(departure_xy: np.ndarray, heading: float, floor: float) -> np.ndarray:
    """Cardioid amplitude pattern of the robot-mounted UE (body shadows the back)."""
    ang = np.arctan2(departure_xy[..., 1], departure_xy[..., 0]) - heading
    return floor + (1.0 - floor) * 0.5 * (1.0 + np.cos(ang))


def room_paths(position, scene: SceneConfig, heading: float = np.pi / 2,
               reflection: float = 0.5, pattern_floor: float = 0.25) -> PathSet:
    """Line of sight plus first-order specular reflections off the room surfaces.

    Reflection points are specular toward the array center; the floor and the
    four walls are used. Every path is weighted by free-space loss and by the
    UE pattern for the robot ``heading``, so rotating the robot changes the
    multipath regime at a fixed position.
    """
    src = np.asarray(position.xyz if isinstance(position, TimedPosition) else position,
                     dtype=float).reshape(3)
    ants = antenna_positions(scene)
    target = ants.mean(axis=0)
    lam = wavelength(scene)
    lo, hi = scene.room_bounds
    refl = [np.zeros((0, 3))]
    first_leg = [target - src]
    lengths = [np.linalg.norm(target - src)]
    coefs = [1.0]
    planes = [(0, lo[0]), (0, hi[0]), (1, lo[1]), (1, hi[1]), (2, lo[2])]
    for axis, plane in planes:
        img = src.copy()
        img[axis] = 2 * plane - src[axis]
        denom = target[axis] - img[axis]
        if abs(denom) < 1e-12:
            continue
        s = (plane - img[axis]) / denom
        if not 0.0 < s < 1.0:
            continue
        pt = img + s * (target - img)
        refl.append(pt[None, :])
        first_leg.append(pt - src)
        lengths.append(np.linalg.norm(target - img))
        coefs.append(-reflection)
    first_leg = np.array(first_leg)
    amp = ue_pattern(first_leg[:, :2], heading, pattern_floor)
    gains = np.array(coefs) * amp * lam / (4 * np.pi * np.array(lengths))
    return PathSet(tuple(refl), gains.astype(np.complex128))


def synth_channel_run(traj, scene: SceneConfig, headings, reflection: float = 0.5,
                      pattern_floor: float = 0.25) -> np.ndarray:
    """Channel tensor (samples, antennas, subcarriers) along a trajectory.

    ``headings`` is one UE heading per sample (or a scalar for all of them).
    """
    headings = np.broadcast_to(np.asarray(headings, dtype=float), (len(traj),))
    ants = antenna_positions(scene)
    freqs = subcarrier_frequencies(scene)
    out = np.empty((len(traj), scene.antenna_count, scene.subcarrier_count), dtype=np.complex128)
    for i, (p, h) in enumerate(zip(traj.xyz, headings)):
        paths = room_paths(p, scene, heading=h, reflection=reflection,
                           pattern_floor=pattern_floor)
        delays = path_delays(p, paths, ants)
        out[i] = _kernels.channel_response(np.ascontiguousarray(delays), paths.gains, freqs)
    return out
