"""Domain types and trajectory utilities shared by every pipeline."""

from __future__ import annotations

import csv
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from .errors import ConfigurationError, DegenerateInputError, GeometryError


@dataclass(frozen=True)
class TimedPosition:
    t: float
    x: float
    y: float
    z: float

    def __post_init__(self):
        if not all(np.isfinite([self.t, self.x, self.y, self.z])):
            raise DegenerateInputError("TimedPosition fields must be finite")

    @property
    def xyz(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])


class Trajectory:
    """Time-ordered 3D positions with strictly increasing timestamps.

    Stored as two read-only arrays, ``t`` with shape (N,) and ``xyz`` with
    shape (N, 3). Iterating yields :class:`TimedPosition` values.
    """

    __slots__ = ("t", "xyz", "frame_rate_hint")

    def __init__(self, t, xyz, frame_rate_hint: float | None = None):
        t = np.array(t, dtype=np.float64).reshape(-1)
        xyz = np.array(xyz, dtype=np.float64).reshape(-1, 3)
        if len(t) < 1:
            raise DegenerateInputError("trajectory needs at least one sample")
        if len(t) != len(xyz):
            raise DegenerateInputError(
                f"timestamp count {len(t)} != position count {len(xyz)}")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(xyz))):
            raise DegenerateInputError("trajectory contains non-finite values")
        if np.any(np.diff(t) <= 0):
            raise DegenerateInputError("timestamps must be strictly increasing")
        t.flags.writeable = False
        xyz.flags.writeable = False
        self.t = t
        self.xyz = xyz
        self.frame_rate_hint = frame_rate_hint

    @classmethod
    def from_samples(cls, samples: Sequence[TimedPosition],
                     frame_rate_hint: float | None = None) -> "Trajectory":
        return cls([s.t for s in samples], [[s.x, s.y, s.z] for s in samples],
                   frame_rate_hint)

    @property
    def samples(self) -> list[TimedPosition]:
        return list(self)

    def __len__(self) -> int:
        return len(self.t)

    def __iter__(self) -> Iterator[TimedPosition]:
        for t, (x, y, z) in zip(self.t, self.xyz):
            yield TimedPosition(float(t), float(x), float(y), float(z))

    def __getitem__(self, i: int) -> TimedPosition:
        x, y, z = self.xyz[i]
        return TimedPosition(float(self.t[i]), float(x), float(y), float(z))

    def __repr__(self) -> str:
        return (f"Trajectory(n={len(self)}, t=[{self.t[0]:.3f}, {self.t[-1]:.3f}]"
                f", rate_hint={self.frame_rate_hint})")

    @property
    def duration(self) -> float:
        return float(self.t[-1] - self.t[0])

    def position_at(self, t) -> np.ndarray:
        """Linearly interpolated position(s) at ``t``; clamps outside the span."""
        t = np.asarray(t, dtype=np.float64)
        return np.stack([np.interp(t, self.t, self.xyz[:, a]) for a in range(3)],
                        axis=-1)


def resample_trajectory(traj: Trajectory, rate: float) -> Trajectory:
    """Resample onto a uniform grid of ``rate`` Hz clipped to the input span.

    Positions are linearly interpolated between bracketing samples; no
    extrapolation happens past either end.
    """
    if len(traj) < 2:
        raise DegenerateInputError("resampling needs at least two samples")
    if not rate > 0:
        raise ConfigurationError(f"rate must be positive, got {rate}")
    t0, t1 = traj.t[0], traj.t[-1]
    n = int(np.floor((t1 - t0) * rate + 1e-9)) + 1
    grid = t0 + np.arange(n) / rate
    grid = grid[grid <= t1 + 1e-12]
    grid[-1] = min(grid[-1], t1)
    return Trajectory(grid, traj.position_at(grid), frame_rate_hint=rate)


def write_trajectory_csv(traj: Trajectory, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "x", "y", "z"])
        for t, (x, y, z) in zip(traj.t, traj.xyz):
            w.writerow([repr(float(t)), repr(float(x)), repr(float(y)), repr(float(z))])
    return path


def read_trajectory_csv(path) -> Trajectory:
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["t", "x", "y", "z"]:
            raise DegenerateInputError(f"{path}: expected header t,x,y,z")
        rows = [(float(r["t"]), float(r["x"]), float(r["y"]), float(r["z"])) for r in reader]
    if not rows:
        raise DegenerateInputError(f"{path}: no samples")
    arr = np.array(rows)
    return Trajectory(arr[:, 0], arr[:, 1:])


class MicArray:
    """Ordered microphone positions in meters, shape (M, 3)."""

    __slots__ = ("positions",)

    def __init__(self, positions):
        pos = np.array(positions, dtype=np.float64).reshape(-1, 3)
        if len(pos) < 4:
            raise GeometryError(f"need at least 4 microphones, got {len(pos)}")
        if not np.all(np.isfinite(pos)):
            raise GeometryError("microphone positions must be finite")
        diff = pos[:, None, :] - pos[None, :, :]
        dist = np.linalg.norm(diff, axis=-1) + np.eye(len(pos))
        if np.any(dist < 1e-9):
            raise GeometryError("two microphones are coincident")
        centered = pos - pos.mean(axis=0)
        s = np.linalg.svd(centered, compute_uv=False)
        if s[1] <= 1e-9 * max(s[0], 1e-300):
            raise GeometryError("microphone positions are collinear")
        pos.flags.writeable = False
        self.positions = pos

    def __len__(self) -> int:
        return len(self.positions)

    def __repr__(self) -> str:
        return f"MicArray(n={len(self)})"

    def baseline(self, i: int, j: int) -> float:
        return float(np.linalg.norm(self.positions[i] - self.positions[j]))

    def translated(self, offset) -> "MicArray":
        return MicArray(self.positions + np.asarray(offset, dtype=float))


def write_mic_csv(mics: MicArray, path) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["mic", "x", "y", "z"])
        for i, (x, y, z) in enumerate(mics.positions):
            w.writerow([i, repr(float(x)), repr(float(y)), repr(float(z))])
    return path


def read_mic_csv(path) -> MicArray:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        rows = sorted((int(r["mic"]), float(r["x"]), float(r["y"]), float(r["z"]))
                      for r in csv.DictReader(fh))
    return MicArray([r[1:] for r in rows])


def ring_mic_layout(area_x: float = 4.2, area_y: float = 2.5,
                     margin: float = 0.3) -> MicArray:
    """Twelve microphones spread around the measurement area at mixed heights."""
    x0, x1 = -margin, area_x + margin
    y0, y1 = -margin, area_y + margin
    xm = 0.5 * (x0 + x1)
    # Channel 0 is the reference microphone; keep it off the room corners.
    xy = [
        (xm, y0 - 0.05), (x0, y0), (x1, y0),
        (x1 + 0.05, y0 + (y1 - y0) / 3), (x1 + 0.05, y0 + 2 * (y1 - y0) / 3),
        (x1, y1), (xm + 0.8, y1 + 0.05), (xm - 0.8, y1 + 0.05), (x0, y1),
        (x0 - 0.05, y0 + 2 * (y1 - y0) / 3), (x0 - 0.05, y0 + (y1 - y0) / 3),
        (xm - 0.8, y0 - 0.05),
    ]
    heights = [0.6, 1.9, 1.1, 2.3, 0.8, 1.6, 0.7, 2.2, 1.3, 0.9, 2.0, 1.4]
    return MicArray([(x, y, z) for (x, y), z in zip(xy, heights)])


@dataclass(frozen=True)
class SceneConfig:
    """A synthetic measurement campaign: room, sensors, and root seed."""

    area_x: float = 4.2
    area_y: float = 2.5
    mic_array: MicArray = field(default_factory=ring_mic_layout)
    antenna_count: int = 100
    subcarrier_count: int = 100
    center_frequency: float = 3.7e9
    bandwidth: float = 20e6
    audio_sample_rate: float = 96_000.0
    temperature: float = 22.0
    rng_seed: int = 0
    # Geometry not fixed by the measurement description.
    source_height: float = 0.4
    room_margin: float = 1.0
    room_height: float = 3.0
    array_standoff: float = 0.5
    array_height: float = 1.2
    max_source_frequency: float = 20_000.0

    def __post_init__(self):
        if not (self.area_x > 0 and self.area_y > 0):
            raise ConfigurationError("area_x and area_y must be positive")
        if self.antenna_count < 1 or self.subcarrier_count < 1:
            raise ConfigurationError("antenna_count and subcarrier_count must be >= 1")
        if not self.audio_sample_rate > 2 * self.max_source_frequency:
            raise ConfigurationError(
                "audio_sample_rate must exceed twice the maximum source frequency")
        if not isinstance(self.mic_array, MicArray):
            object.__setattr__(self, "mic_array", MicArray(self.mic_array))

    @property
    def room_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        lo = np.array([-self.room_margin, -self.room_margin, 0.0])
        hi = np.array([self.area_x + self.room_margin,
                       self.area_y + self.room_margin, self.room_height])
        return lo, hi

    @property
    def diagonal(self) -> float:
        return float(np.hypot(self.area_x, self.area_y))

    def contains(self, xy, tol: float = 1e-9) -> np.ndarray:
        xy = np.asarray(xy, dtype=float)
        return ((xy[..., 0] >= -tol) & (xy[..., 0] <= self.area_x + tol)
                & (xy[..., 1] >= -tol) & (xy[..., 1] <= self.area_y + tol))

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d["mic_array"] = self.mic_array.positions.tolist()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SceneConfig":
        d = dict(d)
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigurationError(f"unknown scene fields: {sorted(unknown)}")
        mics = d.pop("mic_array", None)
        if mics is None or mics == "ring12":
            mics = ring_mic_layout(d.get("area_x", 4.2), d.get("area_y", 2.5))
        return cls(mic_array=MicArray(mics) if not isinstance(mics, MicArray) else mics, **d)


def stage_rng(seed: int, label: str) -> np.random.Generator:
    """Independent generator for a named stage derived from one root seed.

    The label is hashed with CRC-32 so the split is stable across processes
    and Python versions.
    """
    key = zlib.crc32(label.encode("utf-8"))
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(key,)))


def derive_seed(seed: int, label: str) -> int:
    """Integer seed for a named stage, stable across runs."""
    return int(stage_rng(seed, label).integers(0, 2**31 - 1))


class ChannelSnapshot:
    """Complex channel frequency response, antennas x subcarriers, at time ``t``."""

    __slots__ = ("H", "t")

    def __init__(self, H, t: float = 0.0):
        H = np.asarray(H)
        if H.ndim != 2:
            raise DegenerateInputError(f"channel snapshot must be 2-D, got shape {H.shape}")
        if not np.all(np.isfinite(H)):
            raise DegenerateInputError("channel snapshot has non-finite entries")
        self.H = H.astype(np.complex128, copy=False)
        self.t = float(t)

    @property
    def shape(self) -> tuple[int, int]:
        return self.H.shape

    def __repr__(self) -> str:
        return f"ChannelSnapshot(shape={self.H.shape}, t={self.t})"
