"""Source waveforms and additive white Gaussian noise."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import ChannelSnapshot
from ..errors import ConfigurationError, NoSignalError

SIGNAL_KINDS = ("chirp", "wideband", "silence-mixed", "custom")

CHIRP_F0 = 400.0
CHIRP_F1 = 1400.0
CHIRP_BURST = 0.2
CHIRP_PERIOD = 0.5


@dataclass(frozen=True, eq=False)
class SourceSignal:
    """Mono source waveform.

    ``chirp`` and ``silence-mixed`` signals stay within full scale (|x| <= 1).
    ``wideband`` signals are normalized to unit RMS instead, so their peaks
    exceed 1; use :meth:`peak_normalized` before 16-bit export.
    """

    samples: np.ndarray
    sample_rate: float
    kind: str = "custom"

    def __post_init__(self):
        x = np.asarray(self.samples, dtype=np.float64).reshape(-1)
        object.__setattr__(self, "samples", x)
        if not self.sample_rate > 0:
            raise ConfigurationError("sample_rate must be positive")
        if self.kind not in SIGNAL_KINDS:
            raise ConfigurationError(f"unknown signal kind {self.kind!r}")
        if not np.all(np.isfinite(x)):
            raise ConfigurationError("signal has non-finite samples")
        if self.kind in ("chirp", "silence-mixed") and x.size and np.max(np.abs(x)) > 1.0:
            raise ConfigurationError(f"{self.kind} signal exceeds full scale")

    def __len__(self) -> int:
        return self.samples.size

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate

    def peak_normalized(self, peak: float = 1.0) -> "SourceSignal":
        m = np.max(np.abs(self.samples)) if self.samples.size else 0.0
        scale = peak / m if m > 0 else 1.0
        return SourceSignal(self.samples * scale, self.sample_rate, self.kind)


def gen_chirp(duration: float, sample_rate: float, f0: float = CHIRP_F0,
              f1: float = CHIRP_F1, burst: float = CHIRP_BURST,
              period: float = CHIRP_PERIOD) -> SourceSignal:
    """Periodic linear up-chirp bursts separated by exact silence.

    Defaults give two 200 ms 400 -> 1400 Hz sweeps per second (duty cycle 0.4).
    Samples are taken at mid-sample instants so no in-burst sample is exactly 0.
    """
    if sample_rate < 4000.0 or sample_rate <= 2 * f1:
        raise ConfigurationError(
            f"sample rate {sample_rate} Hz too low for a {f1} Hz chirp (need >= 4 kHz)")
    if duration < 0:
        raise ConfigurationError("duration must be non-negative")
    n = int(round(duration * sample_rate))
    per = int(round(period * sample_rate))
    blen = int(round(burst * sample_rate))
    local = np.arange(n) % per
    tl = (local + 0.5) / sample_rate
    phase = 2 * np.pi * (f0 * tl + 0.5 * (f1 - f0) / burst * tl * tl)
    x = np.where(local < blen, np.sin(phase), 0.0)
    return SourceSignal(x, sample_rate, "chirp")


def gen_wideband(duration: float, sample_rate: float, band=(100.0, 8000.0),
                 seed: int = 0) -> SourceSignal:
    """Band-limited Gaussian noise with unit RMS, a stand-in for music."""
    f_lo, f_hi = float(band[0]), float(band[1])
    if not (0 < f_lo < f_hi < sample_rate / 2):
        raise ConfigurationError(
            f"band [{f_lo}, {f_hi}] must satisfy 0 < lo < hi < {sample_rate / 2}")
    n = int(round(duration * sample_rate))
    if n == 0:
        return SourceSignal(np.zeros(0), sample_rate, "wideband")
    rng = np.random.default_rng(seed)
    spec = np.fft.rfft(rng.standard_normal(n))
    f = np.fft.rfftfreq(n, 1.0 / sample_rate)
    spec[(f < f_lo) | (f > f_hi)] = 0.0
    x = np.fft.irfft(spec, n)
    rms = np.sqrt(np.mean(x * x))
    if rms == 0:
        raise NoSignalError("band contains no frequency bins for this duration")
    return SourceSignal(x / rms, sample_rate, "wideband")


def gate_signal(sig: SourceSignal, start: float = 0.0,
                stop: float | None = None) -> SourceSignal:
    """Zero the signal outside ``[start, stop)`` seconds (e.g. music ending early)."""
    x = sig.samples.copy()
    t = np.arange(x.size) / sig.sample_rate
    keep = t >= start
    if stop is not None:
        keep &= t < stop
    x[~keep] = 0.0
    if sig.kind == "wideband" and x.size and np.max(np.abs(x)) > 1:
        x = x / np.max(np.abs(x))
    return SourceSignal(x, sig.sample_rate, "silence-mixed")


def _noise_like(x: np.ndarray, snr_db: float, rng: np.random.Generator) -> np.ndarray:
    power = float(np.mean(np.abs(x) ** 2)) if x.size else 0.0
    if power == 0.0:
        raise NoSignalError("zero-power input: SNR undefined")
    n_power = power / 10 ** (snr_db / 10)
    if np.iscomplexobj(x):
        s = np.sqrt(n_power / 2)
        return s * (rng.standard_normal(x.shape) + 1j * rng.standard_normal(x.shape))
    return np.sqrt(n_power) * rng.standard_normal(x.shape)


def add_awgn(data, snr_db: float, seed=0):
    """Add white Gaussian noise at ``snr_db`` relative to the data's mean power.

    Complex inputs receive circularly symmetric noise. Accepts arrays,
    :class:`SourceSignal` and :class:`ChannelSnapshot` and returns the same
    type. ``seed`` may be an int or a ``numpy.random.Generator``.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    if isinstance(data, ChannelSnapshot):
        return ChannelSnapshot(data.H + _noise_like(data.H, snr_db, rng), data.t)
    if isinstance(data, SourceSignal):
        x = data.samples
        y = x + _noise_like(x, snr_db, rng)
        kind = data.kind if data.kind == "wideband" else "custom"
        return SourceSignal(y, data.sample_rate, kind)
    x = np.asarray(data)
    return x + _noise_like(x, snr_db, rng)
