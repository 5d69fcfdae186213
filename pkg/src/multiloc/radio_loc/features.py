"""Angular (spatial covariance) and delay (CIR tap) features of channel snapshots."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..core import ChannelSnapshot
from ..errors import ConfigurationError, ShapeError

DEFAULT_TAPS = 16


def _stack(snapshots) -> np.ndarray:
    """Channel tensor (S, antennas, subcarriers) from snapshots or raw arrays."""
    if isinstance(snapshots, ChannelSnapshot):
        return snapshots.H[None]
    if isinstance(snapshots, np.ndarray):
        H = snapshots
    else:
        snaps = list(snapshots)
        if not snaps:
            raise ShapeError("need at least one snapshot")
        shapes = {np.shape(s.H if isinstance(s, ChannelSnapshot) else s) for s in snaps}
        if len(shapes) != 1:
            raise ShapeError(f"snapshots differ in shape: {sorted(shapes)}")
        H = np.stack([s.H if isinstance(s, ChannelSnapshot) else np.asarray(s) for s in snaps])
    if H.ndim == 2:
        H = H[None]
    if H.ndim != 3 or H.shape[0] == 0:
        raise ShapeError(f"expected (snapshots, antennas, subcarriers), got {H.shape}")
    return H


def spatial_covariance(snapshots) -> np.ndarray:
    """``R = 1/(S K) sum_s sum_k h_sk h_sk^H`` with subcarrier columns as antenna vectors."""
    H = _stack(snapshots).astype(np.complex128, copy=False)
    S, _, K = H.shape
    R = np.einsum("sak,sbk->ab", H, H.conj())
    return R / (S * K)


def triu_layout(n_ant: int) -> tuple[np.ndarray, np.ndarray]:
    return np.triu_indices(n_ant, k=1)


def vectorize_covariance(R: np.ndarray) -> np.ndarray:
    """Real vector: diagonal, then real and imaginary parts of the strict upper triangle.

    Length ``A + A (A - 1)``; row-major order within the triangle.
    """
    R = np.asarray(R)
    if R.ndim < 2 or R.shape[-1] != R.shape[-2]:
        raise ShapeError(f"covariance must be square, got {R.shape}")
    iu, ju = triu_layout(R.shape[-1])
    diag = np.real(np.diagonal(R, axis1=-2, axis2=-1))
    upper = R[..., iu, ju]
    return np.concatenate([diag, upper.real, upper.imag], axis=-1)


def covariance_length(n_ant: int) -> int:
    return n_ant + n_ant * (n_ant - 1)


def covariance_features(snapshots, chunk: int = 128) -> np.ndarray:
    """Per-snapshot vectorized covariance, shape (S, A + A(A-1))."""
    H = _stack(snapshots)
    S, A, K = H.shape
    out = np.empty((S, covariance_length(A)))
    for s0 in range(0, S, chunk):
        h = H[s0:s0 + chunk].astype(np.complex128, copy=False)
        R = h @ np.conj(np.swapaxes(h, 1, 2)) / K
        out[s0:s0 + chunk] = vectorize_covariance(R)
    return out


def cir_features(snapshot, taps: int = DEFAULT_TAPS) -> np.ndarray:
    """Magnitudes of the first ``taps`` delay taps per antenna, concatenated.

    The delay transform is the unitary inverse DFT across subcarriers, so
    energy is preserved. Accepts one snapshot or a stack; the result is
    (A * taps,) or (S, A * taps).
    """
    single = isinstance(snapshot, ChannelSnapshot) or np.ndim(snapshot) == 2
    H = _stack(snapshot)
    K = H.shape[2]
    if not 1 <= taps <= K:
        raise ConfigurationError(f"taps must be in [1, {K}], got {taps}")
    h = np.fft.ifft(H, axis=2, norm="ortho")[:, :, :taps]
    feats = np.abs(h).reshape(H.shape[0], -1)
    return feats[0] if single else feats


@dataclass(frozen=True, eq=False)
class FeatureVector:
    """Both feature views of one snapshot."""

    cov_features: np.ndarray
    cir_features: np.ndarray

    def __post_init__(self):
        for name in ("cov_features", "cir_features"):
            v = np.asarray(getattr(self, name), dtype=np.float64).reshape(-1)
            if not np.all(np.isfinite(v)):
                raise ShapeError(f"{name} contains non-finite values")
            object.__setattr__(self, name, v)

    @classmethod
    def from_snapshot(cls, snap: ChannelSnapshot, taps: int = DEFAULT_TAPS) -> "FeatureVector":
        return cls(covariance_features(snap)[0], cir_features(snap, taps))


@dataclass(frozen=True, eq=False)
class FeatureSet:
    """Feature matrices for a batch of snapshots (one row each)."""

    cov: np.ndarray
    cir: np.ndarray

    def __len__(self) -> int:
        return len(self.cov)

    def __getitem__(self, idx) -> "FeatureSet":
        return FeatureSet(self.cov[idx], self.cir[idx])

    def row(self, i: int) -> FeatureVector:
        return FeatureVector(self.cov[i], self.cir[i])


def extract_features(snapshots: Sequence[ChannelSnapshot] | np.ndarray,
                     taps: int = DEFAULT_TAPS) -> FeatureSet:
    H = _stack(snapshots)
    return FeatureSet(covariance_features(H), cir_features(H, taps))


def concat_features(sets: Sequence[FeatureSet]) -> FeatureSet:
    if not sets:
        raise ShapeError("no feature sets to concatenate")
    return FeatureSet(np.vstack([s.cov for s in sets]), np.vstack([s.cir for s in sets]))
