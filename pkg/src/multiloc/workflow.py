"""Scenario builders shared by the command line and the reproduction suite."""

from __future__ import annotations

import numpy as np

from .audio_loc.multilat import speed_of_sound
from .core import SceneConfig, Trajectory, derive_seed
from .errors import ConfigurationError
from .sim.audio import MultichannelRecording, synth_audio
from .sim.signals import SourceSignal, gen_chirp, gen_wideband
from .sim.trajectories import gen_trajectory

# Fixed interferer used by the degraded-audio scenes: a fan-like broadband hum
# at a constant spot outside the robot's area.
DEFAULT_INTERFERER = {"position": [-0.5, -0.5, 0.8], "gain": 0.3, "band": [50.0, 4000.0]}


def trajectory_from_spec(spec: dict, scene: SceneConfig) -> Trajectory:
    return gen_trajectory(spec["pattern"], scene, float(spec["speed"]), float(spec["rate"]),
                          **dict(spec.get("params", {})))


def make_source(kind: str, duration: float, sample_rate: float, band=(100.0, 8000.0),
                seed: int = 0) -> SourceSignal:
    if kind == "wideband":
        return gen_wideband(duration, sample_rate, band=tuple(band), seed=seed)
    if kind == "chirp":
        return gen_chirp(duration, sample_rate)
    raise ConfigurationError(f"unknown source kind {kind!r}")


def simulate_recording(traj: Trajectory, scene: SceneConfig, source_kind: str, seed: int,
                       label: str, band=(100.0, 8000.0), reflection: float = 0.0,
                       interferer: dict | None = None,
                       snr_db: float | None = None) -> MultichannelRecording:
    """Audio for one trajectory; every random stream is derived from ``seed`` and ``label``."""
    fs = scene.audio_sample_rate
    duration = np.floor(traj.duration * fs) / fs
    src = make_source(source_kind, duration, fs, band, derive_seed(seed, f"source.{label}"))
    itf = None
    if interferer is not None:
        sig = gen_wideband(duration, fs, band=tuple(interferer.get("band", (50.0, 4000.0))),
                           seed=derive_seed(seed, f"interferer.{label}"))
        sig = SourceSignal(sig.samples * float(interferer.get("gain", 1.0)), fs, "wideband")
        itf = (np.asarray(interferer["position"], dtype=float), sig)
    return synth_audio(traj, src, scene.mic_array, speed_of_sound(scene.temperature),
                       interferer=itf, snr_db=snr_db,
                       seed=derive_seed(seed, f"audio_noise.{label}"), scene=scene,
                       reflection=reflection)


def condition_name(snr_db: float | None) -> str:
    if snr_db is None:
        return "clean"
    v = float(snr_db)
    return f"snr{int(v)}" if v.is_integer() else f"snr{v:g}"
