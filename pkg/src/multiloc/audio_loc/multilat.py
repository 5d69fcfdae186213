"""Speed of sound and robust TDOA multilateration (RANSAC + least squares)."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import comb
from typing import NamedTuple

import numpy as np

from .. import _kernels
from ..core import MicArray
from ..errors import ConfigurationError
from .gcc import TdoaFrame


def speed_of_sound(temperature: float) -> float:
    """Speed of sound in dry air (m/s), linear in temperature (deg C)."""
    if not -20.0 <= temperature <= 50.0:
        raise ConfigurationError(f"temperature {temperature} C outside [-20, 50]")
    return 331.3 + 0.606 * temperature


@dataclass(frozen=True)
class SoundSpeedModel:
    temperature: float = 22.0

    @property
    def c(self) -> float:
        return speed_of_sound(self.temperature)


@dataclass(frozen=True)
class RansacConfig:
    """RANSAC settings; ``inlier_threshold`` is a TDOA residual in seconds.

    ``planar`` fixes the source height at ``plane_z`` and solves for x, y only.
    """

    iterations: int = 500
    inlier_threshold: float = 3 / 96_000
    min_inliers: int = 4
    seed: int = 0
    planar: bool = False
    plane_z: float = 0.0
    max_refine_iter: int = 50

    def __post_init__(self):
        if self.iterations < 1:
            raise ConfigurationError("iterations must be >= 1")
        if not self.inlier_threshold > 0:
            raise ConfigurationError("inlier_threshold must be positive")

    @classmethod
    def for_rate(cls, sample_rate: float, samples: float = 3.0, **kw) -> "RansacConfig":
        return cls(inlier_threshold=samples / sample_rate, **kw)


class FrameFix(NamedTuple):
    position: np.ndarray | None
    inliers: int
    residual: float
    status: str


def _reference_form(frame: TdoaFrame) -> tuple[np.ndarray, np.ndarray]:
    """Orient measurements so any pair touching mic 0 reads (0, j)."""
    pairs = np.array(frame.pairs, dtype=np.int64).reshape(-1, 2)
    delays = np.array(frame.delays, dtype=np.float64)
    flip = (pairs[:, 1] == 0) & (pairs[:, 0] != 0)
    pairs[flip] = pairs[flip][:, ::-1]
    delays[flip] = -delays[flip]
    return pairs, delays


def _subsets(n_ref: int, k: int, cfg: RansacConfig, t: float) -> np.ndarray:
    if comb(n_ref, k) <= cfg.iterations:
        return np.array(list(itertools.combinations(range(n_ref), k)), dtype=np.int64)
    ss = np.random.SeedSequence([cfg.seed, int(round(abs(t) * 1e6))])
    rng = np.random.default_rng(ss)
    return np.argsort(rng.random((cfg.iterations, n_ref)), axis=1)[:, :k].astype(np.int64)


def tdoa_residuals(p, mics: MicArray, pairs: np.ndarray, ranges: np.ndarray) -> np.ndarray:
    """Range-difference residuals (m) of a position against measured ``c * tau``."""
    p = np.asarray(p, dtype=float)
    m = mics.positions
    return (np.linalg.norm(p - m[pairs[:, 1]], axis=1)
            - np.linalg.norm(p - m[pairs[:, 0]], axis=1) - ranges)


def multilaterate_frame(frame: TdoaFrame, mics: MicArray, c: float,
                        cfg: RansacConfig = RansacConfig(),
                        prior=None) -> FrameFix:
    """Locate the source of one frame.

    Minimal subsets of reference-pair delays each give a hypothesis from the
    linearized range-difference system; hypotheses are scored by how many of
    all pair delays they explain within ``cfg.inlier_threshold``. The best
    consensus set is refined by Levenberg-Marquardt on the range-difference
    residuals. ``prior`` breaks consensus ties and seeds a second refinement.
    """
    k = 3 if cfg.planar else 4
    if not cfg.planar and len(mics) < 5:
        return FrameFix(None, 0, np.inf, "too-few-microphones")
    pairs, delays = _reference_form(frame)
    ranges = c * delays
    ref_rows = np.flatnonzero(pairs[:, 0] == 0)
    if len(ref_rows) < k:
        return FrameFix(None, 0, np.inf, "insufficient-measurements")

    mic_pos = np.ascontiguousarray(mics.positions)
    thresh = c * cfg.inlier_threshold
    subsets = _subsets(len(ref_rows), k, cfg, frame.t)
    pos, counts, costs, n_eval = _kernels.ransac_tdoa(
        mic_pos, pairs, ranges, ref_rows, subsets, thresh, cfg.planar, float(cfg.plane_z))
    counts = counts[:n_eval]
    costs = costs[:n_eval]
    best_count = int(counts.max())
    if best_count < cfg.min_inliers:
        return FrameFix(None, max(best_count, 0), np.inf, "no-consensus")
    tied = np.flatnonzero(counts == best_count)
    if prior is not None and len(tied) > 1:
        dist = np.linalg.norm(pos[tied] - np.asarray(prior, dtype=float), axis=1)
        best = int(tied[np.argmin(dist)])
    else:
        best = int(tied[np.argmin(costs[tied])])
    linear = pos[best].copy()

    def refine(seed_pos, mask):
        return _kernels.refine_tdoa(mic_pos, pairs, ranges, mask,
                                    np.ascontiguousarray(seed_pos, dtype=np.float64),
                                    cfg.planar, cfg.max_refine_iter, 1e-10)

    mask = np.abs(tdoa_residuals(linear, mics, pairs, ranges)) < thresh
    seeds = [linear]
    if prior is not None:
        pr = np.array(prior, dtype=np.float64)
        if cfg.planar:
            pr[2] = cfg.plane_z
        seeds.append(pr)
    best_fit = None
    for s in seeds:
        p, cost, ok = refine(s, mask)
        if np.all(np.isfinite(p)) and (best_fit is None or cost < best_fit[1]):
            best_fit = (p, cost, ok)
    p, cost, ok = best_fit if best_fit is not None else (linear, np.inf, False)

    # One re-selection round: the refined point may explain more pairs.
    if np.all(np.isfinite(p)):
        mask2 = np.abs(tdoa_residuals(p, mics, pairs, ranges)) < thresh
        if mask2.sum() >= mask.sum() and not np.array_equal(mask2, mask):
            p2, cost2, ok2 = refine(p, mask2)
            if np.all(np.isfinite(p2)):
                p, cost, ok, mask = p2, cost2, ok2, mask2

    linear_cost = float(np.sum(tdoa_residuals(linear, mics, pairs, ranges)[mask] ** 2))
    status = "ok"
    if not (np.all(np.isfinite(p)) and np.isfinite(cost)) or (not ok and cost > linear_cost):
        p, cost, status = linear, linear_cost, "fallback-linear"
    n_in = int(mask.sum())
    residual = float(np.sqrt(cost / n_in)) if n_in else np.inf
    return FrameFix(np.asarray(p, dtype=float), n_in, residual, status)
