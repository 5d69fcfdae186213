"""Multichannel microphone recordings of a moving source in a box room."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import _kernels
from ..core import MicArray, SceneConfig, Trajectory, stage_rng
from ..errors import ConfigurationError, GeometryError
from .signals import SourceSignal, add_awgn

MIN_DISTANCE = 0.1


@dataclass(frozen=True, eq=False)
class MultichannelRecording:
    """Synchronized channels, shape (M, N), sampled at ``sample_rate``."""

    channels: np.ndarray
    sample_rate: float
    start_time: float = 0.0

    def __post_init__(self):
        ch = np.asarray(self.channels, dtype=np.float64)
        if ch.ndim != 2:
            raise ConfigurationError("channels must be a 2-D array (mics x samples)")
        object.__setattr__(self, "channels", ch)
        if not self.sample_rate > 0:
            raise ConfigurationError("sample_rate must be positive")

    @property
    def n_channels(self) -> int:
        return self.channels.shape[0]

    @property
    def n_samples(self) -> int:
        return self.channels.shape[1]

    @property
    def times(self) -> np.ndarray:
        return self.start_time + np.arange(self.n_samples) / self.sample_rate


def image_sources(pos: np.ndarray, scene: SceneConfig) -> list[np.ndarray]:
    """First-order mirror images of ``pos`` (shape (..., 3)) in the six room walls."""
    lo, hi = scene.room_bounds
    out = []
    for axis in range(3):
        for plane in (lo[axis], hi[axis]):
            img = np.array(pos, dtype=float, copy=True)
            img[..., axis] = 2 * plane - img[..., axis]
            out.append(img)
    return out


def _render(out: np.ndarray, src: np.ndarray, emitter: np.ndarray, mic: np.ndarray,
            n: np.ndarray, fs: float, c: float, gain: float) -> None:
    d = np.linalg.norm(emitter - mic, axis=-1)
    d = np.broadcast_to(d, n.shape)
    idx = n - d * (fs / c)
    amp = gain / np.maximum(d, MIN_DISTANCE)
    _kernels.frac_delay_add(out, src, np.ascontiguousarray(idx), np.ascontiguousarray(amp))


def synth_audio(traj: Trajectory, source: SourceSignal, mics: MicArray, c: float,
                interferer: tuple | None = None, snr_db: float | None = None,
                seed: int = 0, scene: SceneConfig | None = None,
                reflection: float = 0.0) -> MultichannelRecording:
    """Render what each microphone hears from a source moving along ``traj``.

    Channel i at time t carries the source sample emitted at t - d_i(t)/c,
    scaled by 1/max(d_i(t), 0.1 m) and linearly interpolated between samples.
    With ``reflection > 0`` (requires ``scene``) first-order wall echoes are
    added from mirror images scaled by the reflection coefficient. An
    interferer ``(position, SourceSignal)`` radiates from a fixed point the
    same way. ``snr_db`` adds white noise per channel.
    """
    if not c > 0:
        raise ConfigurationError("speed of sound must be positive")
    fs = source.sample_rate
    n_samp = len(source)
    if traj.duration < (n_samp - 1) / fs - 1e-9:
        raise ConfigurationError(
            f"trajectory spans {traj.duration:.3f} s but the source lasts "
            f"{(n_samp - 1) / fs:.3f} s")
    if scene is not None and not np.all(scene.contains(traj.xyz[:, :2])):
        raise GeometryError("trajectory leaves the scene area")
    if reflection and scene is None:
        raise ConfigurationError("echoes need a scene to define the room walls")

    n = np.arange(n_samp, dtype=np.float64)
    times = traj.t[0] + n / fs
    pos = traj.position_at(times)
    emitters = [(pos, 1.0)]
    if reflection:
        emitters += [(img, reflection) for img in image_sources(pos, scene)]

    interf = None
    if interferer is not None:
        ipos, isig = interferer
        ipos = np.asarray(ipos, dtype=float)
        if isig.sample_rate != fs:
            raise ConfigurationError("interferer sample rate differs from the source")
        isrc = np.zeros(n_samp)
        m = min(n_samp, len(isig))
        isrc[:m] = isig.samples[:m]
        interf = [(ipos, 1.0)]
        if reflection:
            interf += [(img, reflection) for img in image_sources(ipos, scene)]

    channels = np.zeros((len(mics), n_samp))
    for i, mic in enumerate(mics.positions):
        for emitter, gain in emitters:
            _render(channels[i], source.samples, emitter, mic, n, fs, c, gain)
        if interf is not None:
            for emitter, gain in interf:
                _render(channels[i], isrc, emitter, mic, n, fs, c, gain)

    if snr_db is not None:
        rng = stage_rng(seed, "synth_audio.noise")
        for i in range(len(mics)):
            if np.any(channels[i]):
                channels[i] = add_awgn(channels[i], snr_db, rng)
    return MultichannelRecording(channels, fs, float(traj.t[0]))
