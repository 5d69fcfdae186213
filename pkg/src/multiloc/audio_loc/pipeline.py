"""End-to-end sound-source localization with known microphone positions."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from ..core import MicArray, Trajectory
from ..errors import ConfigurationError
from ..sim.audio import MultichannelRecording
from .gcc import GccConfig, extract_tdoa_frames
from .multilat import RansacConfig, multilaterate_frame, speed_of_sound
from .smoothing import CausalTracker, SmootherConfig, smooth_trajectory


@dataclass(frozen=True)
class AudioConfig:
    gcc: GccConfig = field(default_factory=GccConfig)
    ransac: RansacConfig = field(default_factory=RansacConfig)
    smoother: SmootherConfig = field(default_factory=SmootherConfig)

    @classmethod
    def for_rate(cls, sample_rate: float, **ransac_kw) -> "AudioConfig":
        return cls(gcc=GccConfig.for_rate(sample_rate),
                   ransac=RansacConfig.for_rate(sample_rate, **ransac_kw))

    def to_dict(self) -> dict:
        return {"gcc": asdict(self.gcc), "ransac": asdict(self.ransac),
                "smoother": asdict(self.smoother)}

    @classmethod
    def from_dict(cls, d: dict) -> "AudioConfig":
        return cls(gcc=GccConfig(**d.get("gcc", {})),
                   ransac=RansacConfig(**d.get("ransac", {})),
                   smoother=SmootherConfig(**d.get("smoother", {})))


def localize_audio_with_report(rec: MultichannelRecording, mics: MicArray,
                               temperature: float,
                               cfg: AudioConfig | None = None) -> tuple[Trajectory, dict]:
    """Run framing, per-frame multilateration and smoothing.

    Returns the smoothed trajectory and a run report with per-frame status,
    inlier counts and residuals plus the configuration echo.
    """
    if rec.n_channels != len(mics):
        raise ConfigurationError(
            f"{rec.n_channels} channels for {len(mics)} microphones")
    cfg = cfg or AudioConfig.for_rate(rec.sample_rate)
    c = speed_of_sound(temperature)
    frames = extract_tdoa_frames(rec, cfg.gcc, mics=mics, c=c)
    tracker = CausalTracker(cfg.smoother)
    raw = []
    report_frames = []
    for fr in frames:
        prior = tracker.predict(fr.t)
        fix = multilaterate_frame(fr, mics, c, cfg.ransac, prior=prior)
        if fix.position is not None:
            tracker.update(fr.t, fix.position)
        raw.append((fr.t, fix.position, fix.inliers))
        report_frames.append({
            "t": round(fr.t, 9),
            "status": fix.status,
            "measurements": len(fr),
            "inliers": fix.inliers,
            "residual_m": None if not np.isfinite(fix.residual) else fix.residual,
            "position": None if fix.position is None else [float(v) for v in fix.position],
        })
    traj = smooth_trajectory(raw, cfg.smoother)
    n_ok = sum(1 for f in report_frames if f["position"] is not None)
    report = {
        "speed_of_sound": c,
        "temperature": temperature,
        "frames": report_frames,
        "localized_frames": n_ok,
        "total_frames": len(report_frames),
        "config": cfg.to_dict(),
        "seed": cfg.ransac.seed,
    }
    return traj, report


def localize_audio(rec: MultichannelRecording, mics: MicArray, temperature: float,
                   cfg: AudioConfig | None = None) -> Trajectory:
    return localize_audio_with_report(rec, mics, temperature, cfg)[0]
