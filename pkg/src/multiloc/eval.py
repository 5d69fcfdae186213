"""Trajectory association, rigid alignment, error statistics and report files."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .core import Trajectory
from .errors import AssociationError, ConfigurationError, RankDeficiencyError, ValidationError

ALIGN_MODES = ("rigid", "rigid+scale", "none")
REPORT_COLUMNS = ("trajectory", "sensor", "mean_cm", "sd_cm", "median_cm", "count", "drops")


@dataclass(frozen=True, eq=False)
class PairedSamples:
    """Estimates and ground truth at the estimate timestamps."""

    t: np.ndarray
    est: np.ndarray
    gt: np.ndarray
    drops: int = 0

    def __len__(self) -> int:
        return len(self.t)


@dataclass(frozen=True, eq=False)
class AlignedPairSet:
    est: np.ndarray  # aligned estimates
    gt: np.ndarray
    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))
    scale: float = 1.0
    drops: int = 0

    def __post_init__(self):
        if len(self.est) < 1 or self.est.shape != self.gt.shape:
            raise AssociationError("aligned set needs >= 1 matching pair")

    def __len__(self) -> int:
        return len(self.est)


@dataclass(frozen=True)
class ErrorStats:
    mean: float
    sd: float
    median: float
    count: int
    projection: str = "2D"
    max: float = 0.0


def associate(est: Trajectory, gt: Trajectory, max_dt: float = 0.05) -> PairedSamples:
    """Pair each estimate with ground truth interpolated at its timestamp.

    Estimates outside ``[gt.t[0] - max_dt, gt.t[-1] + max_dt]`` are dropped and
    counted; inside that tolerance the nearest ground-truth end is used.
    """
    if max_dt < 0:
        raise ConfigurationError("max_dt must be non-negative")
    keep = (est.t >= gt.t[0] - max_dt) & (est.t <= gt.t[-1] + max_dt)
    drops = int(np.count_nonzero(~keep))
    if not np.any(keep):
        raise AssociationError(f"no estimate within the ground-truth span (dropped {drops})")
    t = est.t[keep]
    return PairedSamples(t, est.xyz[keep].copy(), gt.position_at(t), drops)


def _as_arrays(pairs) -> tuple[np.ndarray, np.ndarray, int]:
    if isinstance(pairs, (PairedSamples, AlignedPairSet)):
        return np.asarray(pairs.est, float), np.asarray(pairs.gt, float), pairs.drops
    est, gt = pairs
    return np.asarray(est, float).reshape(-1, 3), np.asarray(gt, float).reshape(-1, 3), 0


def align_rigid(pairs, mode: str = "rigid") -> AlignedPairSet:
    """Least-squares similarity mapping estimates onto ground truth (Umeyama).

    ``rigid`` solves rotation and translation, ``rigid+scale`` also a scale,
    ``none`` applies the identity. Accepts :class:`PairedSamples` or an
    ``(est, gt)`` tuple of (N, 3) arrays.
    """
    if mode not in ALIGN_MODES:
        raise ConfigurationError(f"mode must be one of {ALIGN_MODES}, got {mode!r}")
    est, gt, drops = _as_arrays(pairs)
    if len(est) == 0 or est.shape != gt.shape:
        raise AssociationError("need matching, non-empty estimate and ground-truth sets")
    if mode == "none":
        return AlignedPairSet(est.copy(), gt.copy(), drops=drops)
    if len(est) < 3:
        raise RankDeficiencyError(f"rigid alignment needs >= 3 pairs, got {len(est)}")
    mu_e = est.mean(axis=0)
    mu_g = gt.mean(axis=0)
    E = est - mu_e
    G = gt - mu_g
    scale_ref = max(np.abs(E).max(), np.abs(G).max(), 1e-300)
    for name, X in (("estimate", E), ("ground truth", G)):
        sv = np.linalg.svd(X, compute_uv=False)
        if sv[1] <= 1e-9 * max(sv[0], scale_ref):
            raise RankDeficiencyError(f"{name} points are collinear or coincident")
    C = G.T @ E / len(est)
    U, D, Vt = np.linalg.svd(C)
    S = np.eye(3)
    if np.linalg.det(U) * np.linalg.det(Vt) < 0:
        S[2, 2] = -1.0
    R = U @ S @ Vt
    s = 1.0
    if mode == "rigid+scale":
        var_e = np.sum(E * E) / len(est)
        s = float(np.trace(np.diag(D) @ S) / var_e)
    t = mu_g - s * R @ mu_e
    aligned = s * est @ R.T + t
    return AlignedPairSet(aligned, gt.copy(), R, t, s, drops)


def compute_error_stats(pairs, projection: str = "2D") -> ErrorStats:
    """Mean, sample SD (n - 1), median and count of per-pair Euclidean errors."""
    if projection not in ("2D", "3D"):
        raise ConfigurationError("projection must be '2D' or '3D'")
    est, gt, _ = _as_arrays(pairs)
    if len(est) == 0:
        raise AssociationError("no pairs to score")
    k = 2 if projection == "2D" else 3
    err = np.linalg.norm(est[:, :k] - gt[:, :k], axis=1)
    sd = float(np.std(err, ddof=1)) if len(err) > 1 else 0.0
    return ErrorStats(float(err.mean()), sd, float(np.median(err)), len(err), projection,
                      float(err.max()))


def evaluate_trajectory(est: Trajectory, gt: Trajectory, mode: str = "none",
                        projection: str = "2D", max_dt: float = 0.05) -> tuple[ErrorStats, AlignedPairSet]:
    aligned = align_rigid(associate(est, gt, max_dt), mode)
    return compute_error_stats(aligned, projection), aligned


# -- reporting ------------------------------------------------------------------

def format_cm(value_m: float) -> str:
    """Centimeters in report style: 2 significant figures below 10 cm,
    whole centimeters from 10 cm up."""
    cm = value_m * 100.0
    if not math.isfinite(cm):
        return "nan"
    if abs(cm) >= 9.95:
        return str(int(round(cm)))
    if cm == 0:
        return "0.0"
    digits = 1 - int(math.floor(math.log10(abs(cm))))
    text = f"{round(cm, digits):.{max(digits, 0)}f}"
    # rounding can carry into the next decade (9.96 -> 10.0)
    return str(int(round(cm))) if abs(float(text)) >= 10 else text


@dataclass(frozen=True)
class ReportRow:
    trajectory: str
    sensor: str
    stats: ErrorStats
    drops: int = 0
    overlay: tuple | None = None  # (gt xy (N, 2), est xy (M, 2)) for the SVG


def _validate(rows: Sequence[ReportRow]) -> None:
    if not rows:
        raise ValidationError({"rows": "at least one result is required"})
    problems = {}
    for i, r in enumerate(rows):
        if not str(r.trajectory).strip():
            problems[f"rows[{i}].trajectory"] = "must be non-empty"
        if not str(r.sensor).strip():
            problems[f"rows[{i}].sensor"] = "must be non-empty"
    if problems:
        raise ValidationError(problems)


def table_text(rows: Sequence[ReportRow]) -> str:
    _validate(rows)
    head = ("Trajectory Name", "Sensor", "Mean (cm)", "SD (cm)", "Median (cm)")
    body = [(r.trajectory, r.sensor, format_cm(r.stats.mean), format_cm(r.stats.sd),
             format_cm(r.stats.median)) for r in rows]
    widths = [max(len(x) for x in col) for col in zip(head, *body)]
    line = lambda cells: " | ".join(c.ljust(w) for c, w in zip(cells, widths)).rstrip()
    sep = "-+-".join("-" * w for w in widths)
    return "\n".join([line(head), sep, *(line(b) for b in body)]) + "\n"


def _cm_field(v: float) -> str:
    return f"{v * 100.0:.4f}"


def svg_overlay(gt_xy: np.ndarray, est_xy: np.ndarray, title: str = "",
                size: int = 480) -> str:
    """Ground truth (black) and estimate (red) polylines in a square viewport."""
    pts = np.vstack([gt_xy, est_xy])
    lo = pts.min(axis=0)
    span = float(max(np.ptp(pts, axis=0).max(), 1e-6))
    pad = 20.0
    k = (size - 2 * pad) / span

    def poly(xy, color):
        p = " ".join(f"{pad + (x - lo[0]) * k:.2f},{size - pad - (y - lo[1]) * k:.2f}"
                     for x, y in xy)
        return (f'<polyline points="{p}" fill="none" stroke="{color}" '
                f'stroke-width="1.5"/>')

    return "\n".join([
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">',
        f'<rect width="{size}" height="{size}" fill="white"/>',
        f'<text x="{pad}" y="14" font-size="12" font-family="sans-serif">{title}</text>',
        poly(gt_xy, "black"),
        poly(est_xy, "red"),
        "</svg>",
        "",
    ])


def write_report(rows: Sequence[ReportRow], out_dir, stem: str = "report") -> dict:
    """Write ``<stem>.csv``, ``<stem>.txt`` and one SVG per row with overlay data."""
    _validate(rows)
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        csv_path = out / f"{stem}.csv"
        with csv_path.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(REPORT_COLUMNS)
            for r in rows:
                w.writerow([r.trajectory, r.sensor, _cm_field(r.stats.mean),
                            _cm_field(r.stats.sd), _cm_field(r.stats.median),
                            r.stats.count, r.drops])
        txt_path = out / f"{stem}.txt"
        txt_path.write_text(table_text(rows), encoding="utf-8")
        svgs = []
        for r in rows:
            if r.overlay is None:
                continue
            name = f"{stem}_{r.trajectory}_{r.sensor}.svg".replace("/", "_").replace(" ", "_")
            (out / name).write_text(svg_overlay(*r.overlay, title=f"{r.trajectory} ({r.sensor})"),
                                    encoding="utf-8")
            svgs.append(name)
    except OSError as exc:
        raise OSError(f"report write failed under {out}: {exc}") from exc
    return {"csv": csv_path.name, "table": txt_path.name, "svg": svgs}


def read_report_csv(path) -> list[dict]:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))
