"""GCC-PHAT time-difference extraction and power spectrograms."""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft

from ..core import MicArray
from ..errors import ConfigurationError, NoSignalError
from ..sim.audio import MultichannelRecording

PHAT_FLOOR = 1e-12


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("MULTILOC_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class GccConfig:
    window: int = 4096
    hop: int = 960
    peak_interp: str = "parabolic"
    max_lag: int = 2047
    min_score: float = 0.15
    # Analysis band in Hz; bins outside it are dropped before the inverse
    # transform. None keeps the whole spectrum.
    band: tuple | None = (100.0, 8000.0)

    def __post_init__(self):
        if not 0 < self.hop <= self.window:
            raise ConfigurationError("need 0 < hop <= window")
        if not 0 <= self.max_lag < self.window / 2:
            raise ConfigurationError("need max_lag < window / 2")
        if self.peak_interp not in ("none", "parabolic"):
            raise ConfigurationError("peak_interp must be 'none' or 'parabolic'")
        if self.band is not None:
            lo, hi = self.band
            if not 0 <= lo < hi:
                raise ConfigurationError(f"invalid band {self.band}")
            object.__setattr__(self, "band", (float(lo), float(hi)))

    @classmethod
    def for_rate(cls, sample_rate: float, rate_hz: float = 100.0, **kw) -> "GccConfig":
        """Hop chosen so frames come out at ``rate_hz``."""
        return cls(hop=int(round(sample_rate / rate_hz)), **kw)


@dataclass(frozen=True, eq=False)
class TdoaFrame:
    """Pairwise delays at one frame time; ``delays[m]`` is how much mic
    ``pairs[m, 1]`` lags mic ``pairs[m, 0]``, in seconds."""

    t: float
    pairs: np.ndarray
    delays: np.ndarray
    scores: np.ndarray

    def __len__(self) -> int:
        return len(self.delays)


def _band_mask(nfft: int, sample_rate: float, band) -> tuple[np.ndarray, float]:
    """Bin mask for the analysis band and the zero-lag value of an all-ones
    spectrum over it, which scales peaks so self-correlation scores 1."""
    freqs = sfft.rfftfreq(nfft, 1.0 / sample_rate)
    if band is None:
        mask = np.ones(len(freqs), dtype=bool)
    else:
        mask = (freqs >= band[0]) & (freqs <= band[1])
    if not mask.any():
        raise ConfigurationError(f"band {band} holds no frequency bins")
    mult = np.full(len(freqs), 2.0)
    mult[0] = 1.0
    if nfft % 2 == 0:
        mult[-1] = 1.0
    return mask, float(np.sum(mult[mask]) / nfft)


def _peaks(spec_x: np.ndarray, spec_y: np.ndarray, nfft: int, lag_limit: np.ndarray,
           max_lag: int, interp: str, mask: np.ndarray,
           norm: float) -> tuple[np.ndarray, np.ndarray]:
    """Batched PHAT peak search; rows of ``spec_x``/``spec_y`` are paired spectra."""
    G = spec_x * np.conj(spec_y)
    mag = np.abs(G)
    top = mag.max(axis=-1, keepdims=True)
    G = np.where(mask, G / np.maximum(mag, PHAT_FLOOR * top), 0.0)
    r = sfft.irfft(G, nfft, axis=-1, workers=_workers()) / norm
    lags = np.arange(-max_lag, max_lag + 1)
    cc = r[:, lags % nfft]
    cc = np.where(np.abs(lags)[None, :] <= lag_limit[:, None], cc, -np.inf)
    best = np.argmax(cc, axis=1)
    rows = np.arange(len(best))
    peak = cc[rows, best]
    frac = np.zeros(len(best))
    if interp == "parabolic":
        inner = (best > 0) & (best < 2 * max_lag)
        lo = np.where(inner, cc[rows, np.maximum(best - 1, 0)], 0.0)
        hi = np.where(inner, cc[rows, np.minimum(best + 1, 2 * max_lag)], 0.0)
        ok = inner & np.isfinite(lo) & np.isfinite(hi)
        denom = lo - 2 * peak + hi
        ok &= denom < 0
        frac = np.where(ok, 0.5 * (lo - hi) / np.where(ok, denom, 1.0), 0.0)
    lag = lags[best] + frac
    # X conj(Y) peaks at minus the lag of y behind x.
    return -lag, np.clip(peak, 0.0, 1.0)


def gcc_phat(x, y, sample_rate: float, cfg: GccConfig = GccConfig()) -> tuple[float, float]:
    """Delay of ``y`` behind ``x`` (seconds) and PHAT peak score in [0, 1].

    Raises NoSignalError when either window carries no energy.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ConfigurationError("windows must be 1-D and of equal length")
    if len(x) < 2 * cfg.max_lag:
        raise ConfigurationError(f"window of {len(x)} samples shorter than 2 * max_lag")
    if not (np.any(x) and np.any(y)):
        raise NoSignalError("all-zero window")
    nfft = sfft.next_fast_len(len(x) + cfg.max_lag + 1)
    X = sfft.rfft(x, nfft)[None, :]
    Y = sfft.rfft(y, nfft)[None, :]
    mask, norm = _band_mask(nfft, sample_rate, cfg.band)
    delay, score = _peaks(X, Y, nfft, np.array([cfg.max_lag]), cfg.max_lag, cfg.peak_interp,
                          mask, norm)
    return float(delay[0]) / sample_rate, float(score[0])


def all_pairs(n: int) -> np.ndarray:
    """Reference pairs (0, j) first, then every remaining (i, j) with i < j."""
    ref = [(0, j) for j in range(1, n)]
    rest = [(i, j) for i in range(1, n) for j in range(i + 1, n)]
    return np.array(ref + rest, dtype=np.int64).reshape(-1, 2)


def frame_count(n_samples: int, cfg: GccConfig) -> int:
    if n_samples < cfg.window:
        return 0
    return (n_samples - cfg.window) // cfg.hop + 1


def extract_tdoa_frames(rec: MultichannelRecording, cfg: GccConfig = GccConfig(),
                        mics: MicArray | None = None,
                        c: float | None = None) -> list[TdoaFrame]:
    """One :class:`TdoaFrame` per hop with every pair's GCC-PHAT delay.

    Measurements scoring below ``cfg.min_score`` are dropped. When ``mics``
    and ``c`` are given, each pair's lag search is confined to its physical
    range and delays exceeding ``baseline / c`` are discarded.
    """
    if rec.n_channels < 2:
        raise ConfigurationError("need at least two channels")
    if mics is not None and len(mics) != rec.n_channels:
        raise ConfigurationError(f"{rec.n_channels} channels for {len(mics)} microphones")
    fs = rec.sample_rate
    pairs = all_pairs(rec.n_channels)
    if mics is not None and c is not None:
        base = np.linalg.norm(mics.positions[pairs[:, 0]] - mics.positions[pairs[:, 1]], axis=1)
        bound = base / c
        lag_limit = np.minimum(cfg.max_lag, np.floor(bound * fs).astype(np.int64) + 1)
    else:
        bound = np.full(len(pairs), np.inf)
        lag_limit = np.full(len(pairs), cfg.max_lag)
    nfft = sfft.next_fast_len(cfg.window + cfg.max_lag + 1)
    mask, norm = _band_mask(nfft, fs, cfg.band)
    frames = []
    for k in range(frame_count(rec.n_samples, cfg)):
        start = k * cfg.hop
        t = rec.start_time + (start + cfg.window / 2) / fs
        seg = rec.channels[:, start:start + cfg.window]
        live = np.any(seg != 0.0, axis=1)
        use = live[pairs[:, 0]] & live[pairs[:, 1]]
        if not np.any(use):
            frames.append(TdoaFrame(t, pairs[:0], np.zeros(0), np.zeros(0)))
            continue
        spec = sfft.rfft(seg, nfft, axis=1, workers=_workers())
        p = pairs[use]
        delay, score = _peaks(spec[p[:, 0]], spec[p[:, 1]], nfft, lag_limit[use],
                              cfg.max_lag, cfg.peak_interp, mask, norm)
        delay = delay / fs
        keep = (score >= cfg.min_score) & (np.abs(delay) <= bound[use])
        frames.append(TdoaFrame(t, p[keep], delay[keep], score[keep]))
    return frames


def spectrogram(x, sample_rate: float, window: int = 4096, hop: int = 960) -> np.ndarray:
    """Hann-windowed power spectrogram, shape (frames, window // 2 + 1).

    Bin ``k`` sits at ``k * sample_rate / window`` Hz.
    """
    if window < 2 or hop < 1:
        raise ConfigurationError("need window >= 2 and hop >= 1")
    x = np.asarray(x, dtype=np.float64)
    n = 0 if len(x) < window else (len(x) - window) // hop + 1
    if n == 0:
        return np.zeros((0, window // 2 + 1))
    idx = np.arange(window)[None, :] + hop * np.arange(n)[:, None]
    frames = x[idx] * np.hanning(window)[None, :]
    return np.abs(np.fft.rfft(frames, axis=1)) ** 2
