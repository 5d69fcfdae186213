"""Radio measurement runs: a trajectory with one channel snapshot per sample."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..core import ChannelSnapshot, SceneConfig, Trajectory, read_trajectory_csv, stage_rng, write_trajectory_csv
from ..errors import ShapeError
from ..sim.io import read_csnp, read_timestamps, write_csnp, write_timestamps
from ..sim.radio import synth_channel_run
from ..sim.signals import add_awgn
from ..sim.trajectories import gen_trajectory, motion_heading


@dataclass(frozen=True, eq=False)
class RadioRun:
    run_id: str
    trajectory: Trajectory
    H: np.ndarray  # (samples, antennas, subcarriers)

    def __post_init__(self):
        if self.H.ndim != 3 or len(self.H) != len(self.trajectory):
            raise ShapeError(f"{len(self.trajectory)} positions for channel tensor {self.H.shape}")

    def __len__(self) -> int:
        return len(self.trajectory)

    def snapshots(self) -> list[ChannelSnapshot]:
        return [ChannelSnapshot(h, t) for h, t in zip(self.H, self.trajectory.t)]

    def with_noise(self, snr_db: float, seed: int) -> "RadioRun":
        """AWGN at ``snr_db`` per snapshot, drawn from a run-specific stream."""
        rng = stage_rng(seed, f"radio.noise.{self.run_id}")
        H = np.stack([add_awgn(ChannelSnapshot(h, 0.0), snr_db, rng).H for h in self.H])
        return RadioRun(self.run_id, self.trajectory, H)


def simulate_run(run_id: str, traj: Trajectory, scene: SceneConfig, pattern: str,
                 reflection: float = 0.5) -> RadioRun:
    heads = motion_heading(traj, pattern)
    return RadioRun(run_id, traj, synth_channel_run(traj, scene, heads, reflection))


def grid_campaign(scene: SceneConfig, rows: int = 12, speed: float = 0.5, rate: float = 10.0,
                  margin: float = 0.25, reflection: float = 0.5) -> list[RadioRun]:
    """Straight sweeps along x at evenly spaced y rows, numbered from 1.

    Consecutive rows alternate direction like a lawnmower sweep, and each run
    starts where the previous one ended in time.
    """
    ys = np.linspace(margin, scene.area_y - margin, rows)
    runs = []
    t0 = 0.0
    for k, y in enumerate(ys):
        lo, hi = margin, scene.area_x - margin
        xs, xe = (lo, hi) if k % 2 == 0 else (hi, lo)
        traj = gen_trajectory("grid", scene, speed, rate, y=float(y), x_start=xs, x_end=xe,
                              passes=1, t0=t0)
        t0 = float(traj.t[-1]) + 1.0
        runs.append(simulate_run(f"grid{k + 1:02d}", traj, scene, "grid", reflection))
    return runs


def circle_run(scene: SceneConfig, run_id: str = "circle01", radius: float = 0.8,
               speed: float = 0.5, rate: float = 10.0, laps: float = 1.0,
               reflection: float = 0.5) -> RadioRun:
    """Circle at the area center, facing along the direction of travel."""
    traj = gen_trajectory("circle", scene, speed, rate, radius=radius, laps=laps)
    return simulate_run(run_id, traj, scene, "circle", reflection)


def write_run(run: RadioRun, directory) -> dict:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    stem = run.run_id
    write_csnp(d / f"{stem}.csnp", run.snapshots())
    write_timestamps(d / f"{stem}_times.csv", run.trajectory.t)
    write_trajectory_csv(run.trajectory, d / f"{stem}_gt.csv")
    return {"id": stem, "csnp": f"{stem}.csnp", "times": f"{stem}_times.csv",
            "gt": f"{stem}_gt.csv"}


def read_run(directory, run_id: str) -> RadioRun:
    d = Path(directory)
    H = read_csnp(d / f"{run_id}.csnp").astype(np.complex128)
    t = read_timestamps(d / f"{run_id}_times.csv")
    gt = read_trajectory_csv(d / f"{run_id}_gt.csv")
    if len(t) != len(H) or not np.allclose(t, gt.t):
        raise ShapeError(f"{run_id}: timestamps do not match ground truth")
    return RadioRun(run_id, gt, H)
