"""Constant-velocity Kalman filtering and RTS smoothing of per-frame fixes."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .. import _kernels
from ..core import Trajectory
from ..errors import ConfigurationError, PipelineError


@dataclass(frozen=True)
class SmootherConfig:
    """Motion model settings.

    ``process_noise`` is the white-acceleration spectral density (m^2/s^3);
    the default keeps the lag of a 1 m/s^2 maneuver under 1 cm on clean
    100 Hz data. ``measurement_std`` is the per-axis fix noise in meters.
    """

    process_noise: float = 4.0
    measurement_std: float = 0.02
    init_pos_var: float = 100.0
    init_vel_var: float = 1.0

    def __post_init__(self):
        if not (self.process_noise > 0 and self.measurement_std > 0):
            raise ConfigurationError("process_noise and measurement_std must be positive")


def _unpack(raw) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    t = np.array([float(r[0]) for r in raw])
    valid = np.array([r[1] is not None for r in raw], dtype=bool)
    z = np.zeros((len(raw), 3))
    for k, r in enumerate(raw):
        if r[1] is not None:
            z[k] = np.asarray(r[1], dtype=float)
    return t, z, valid


def _grid_step(t: np.ndarray) -> float:
    if len(t) < 2:
        return 0.01
    d = np.diff(t)
    if np.any(d <= 0):
        raise ConfigurationError("frame times must be strictly increasing")
    return float(np.median(d))


def smooth_states(t: np.ndarray, z: np.ndarray, valid: np.ndarray,
                  cfg: SmootherConfig = SmootherConfig()) -> tuple[np.ndarray, np.ndarray]:
    """Smoothed positions and velocities, each shape (N, 3)."""
    dt = _grid_step(t)
    r = cfg.measurement_std ** 2
    pos = np.empty_like(z)
    vel = np.empty_like(z)
    for a in range(3):
        p, v, _ = _kernels.rts_smooth(np.ascontiguousarray(z[:, a]), valid, dt,
                                      cfg.process_noise, r, cfg.init_pos_var,
                                      cfg.init_vel_var)
        pos[:, a] = p
        vel[:, a] = v
    return pos, vel


def smooth_trajectory(raw: Sequence, cfg: SmootherConfig = SmootherConfig()) -> Trajectory:
    """Smooth ``(t, position or None, inlier count)`` triples on their frame grid.

    Frames without a position are filled from the motion model; after the last
    fix the output coasts on the final smoothed velocity.
    """
    if len(raw) == 0:
        raise PipelineError("smoothing: no frames")
    t, z, valid = _unpack(raw)
    if not np.any(valid):
        raise PipelineError("smoothing: no localized frames")
    pos, _ = smooth_states(t, z, valid, cfg)
    rate = 1.0 / _grid_step(t)
    return Trajectory(t, pos, frame_rate_hint=rate)


def smoother_cost(pos: np.ndarray, vel: np.ndarray, t: np.ndarray, z: np.ndarray,
                  valid: np.ndarray, cfg: SmootherConfig = SmootherConfig()) -> dict:
    """Quadratic cost the smoother minimizes, split into its terms.

    Returns ``{"measurement", "process", "prior", "total"}`` for the state
    path ``(pos, vel)``. The smoothed path is the exact minimizer of ``total``.
    """
    dt = _grid_step(t)
    r = cfg.measurement_std ** 2
    q = cfg.process_noise
    Q = q * np.array([[dt ** 3 / 3, dt ** 2 / 2], [dt ** 2 / 2, dt]])
    Qi = np.linalg.inv(Q)
    meas = float(np.sum((z[valid] - pos[valid]) ** 2) / r)
    proc = 0.0
    for a in range(3):
        w0 = pos[1:, a] - pos[:-1, a] - dt * vel[:-1, a]
        w1 = vel[1:, a] - vel[:-1, a]
        proc += float(np.sum(Qi[0, 0] * w0 * w0 + 2 * Qi[0, 1] * w0 * w1 + Qi[1, 1] * w1 * w1))
    first = z[np.argmax(valid)]
    prior = float(np.sum((pos[0] - first) ** 2) / cfg.init_pos_var
                  + np.sum(vel[0] ** 2) / cfg.init_vel_var)
    return {"measurement": meas, "process": proc, "prior": prior,
            "total": meas + proc + prior}


class CausalTracker:
    """Forward-only constant-velocity filter used to hand priors to multilateration."""

    def __init__(self, cfg: SmootherConfig = SmootherConfig()):
        self.cfg = cfg
        self.t = None
        self.x = None  # (3, 2): position, velocity per axis
        self.P = None  # (3, 2, 2)

    def predict(self, t: float):
        if self.x is None:
            return None
        dt = t - self.t
        return self.x[:, 0] + dt * self.x[:, 1]

    def update(self, t: float, z) -> None:
        z = np.asarray(z, dtype=float)
        r = self.cfg.measurement_std ** 2
        if self.x is None:
            self.t = t
            self.x = np.column_stack([z, np.zeros(3)])
            self.P = np.tile(np.diag([r, self.cfg.init_vel_var]), (3, 1, 1))
            return
        dt = t - self.t
        F = np.array([[1.0, dt], [0.0, 1.0]])
        q = self.cfg.process_noise
        Q = q * np.array([[dt ** 3 / 3, dt ** 2 / 2], [dt ** 2 / 2, dt]])
        x = self.x @ F.T
        P = F @ self.P @ F.T + Q
        s = P[:, 0, 0] + r
        K = P[:, :, 0] / s[:, None]
        innov = z - x[:, 0]
        self.x = x + K * innov[:, None]
        self.P = P - K[:, :, None] * P[:, 0, None, :]
        self.t = t
