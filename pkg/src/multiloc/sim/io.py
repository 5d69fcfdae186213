"""On-disk formats: per-microphone WAV files, CSNP channel files, scene JSON."""

from __future__ import annotations

import csv
import json
import struct
import wave
from pathlib import Path

import numpy as np

from ..core import ChannelSnapshot, SceneConfig
from ..errors import DegenerateInputError, ShapeError
from .audio import MultichannelRecording

CSNP_MAGIC = b"CSNP"
_CSNP_HEADER = struct.Struct("<4sIIQ")


def write_wav(path, x: np.ndarray, sample_rate: float) -> Path:
    """Write mono 16-bit PCM; ``x`` is full-scale float in [-1, 1] (clipped)."""
    path = Path(path)
    pcm = np.clip(np.round(np.asarray(x) * 32767.0), -32768, 32767).astype("<i2")
    with wave.open(str(path), "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(int(round(sample_rate)))
        w.writeframes(pcm.tobytes())
    return path


def read_wav(path) -> tuple[np.ndarray, float]:
    with wave.open(str(path), "rb") as w:
        if w.getsampwidth() != 2 or w.getnchannels() != 1:
            raise DegenerateInputError(f"{path}: expected mono 16-bit PCM")
        rate = float(w.getframerate())
        data = np.frombuffer(w.readframes(w.getnframes()), dtype="<i2")
    return data.astype(np.float64) / 32767.0, rate


def write_recording(rec: MultichannelRecording, directory) -> dict:
    """One ``mic_XX.wav`` per channel, sharing one gain so channels stay comparable."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    peak = float(np.max(np.abs(rec.channels))) if rec.channels.size else 0.0
    scale = 0.99 / peak if peak > 0 else 1.0
    files = []
    for i, ch in enumerate(rec.channels):
        files.append(write_wav(directory / f"mic_{i:02d}.wav", ch * scale,
                               rec.sample_rate).name)
    meta = {"files": files, "sample_rate": rec.sample_rate,
            "start_time": rec.start_time, "scale": scale}
    (directory / "recording.json").write_text(json.dumps(meta, indent=2))
    return meta


def read_recording(directory) -> MultichannelRecording:
    directory = Path(directory)
    meta_path = directory / "recording.json"
    if meta_path.exists():
        meta = json.loads(meta_path.read_text())
        files = [directory / f for f in meta["files"]]
        start = float(meta.get("start_time", 0.0))
    else:
        files = sorted(directory.glob("mic_*.wav"))
        start = 0.0
    if not files:
        raise DegenerateInputError(f"{directory}: no WAV files")
    chans, rates = zip(*(read_wav(f) for f in files))
    if len(set(rates)) != 1 or len({len(c) for c in chans}) != 1:
        raise DegenerateInputError(f"{directory}: channels differ in rate or length")
    return MultichannelRecording(np.vstack(chans), rates[0], start)


def write_csnp(path, snapshots) -> Path:
    """Little-endian ``CSNP`` file: header then interleaved (re, im) float32."""
    path = Path(path)
    snaps = list(snapshots)
    if not snaps:
        raise DegenerateInputError("no snapshots to write")
    n_ant, n_sub = snaps[0].shape
    for s in snaps:
        if s.shape != (n_ant, n_sub):
            raise ShapeError(f"snapshot shape {s.shape} != {(n_ant, n_sub)}")
    data = np.stack([s.H for s in snaps]).astype("<c8")
    with path.open("wb") as fh:
        fh.write(_CSNP_HEADER.pack(CSNP_MAGIC, n_ant, n_sub, len(snaps)))
        fh.write(data.tobytes())
    return path


def read_csnp(path) -> np.ndarray:
    """Return the channel tensor, shape (snapshots, antennas, subcarriers), complex64."""
    raw = Path(path).read_bytes()
    if len(raw) < _CSNP_HEADER.size:
        raise DegenerateInputError(f"{path}: truncated header")
    magic, n_ant, n_sub, n_snap = _CSNP_HEADER.unpack_from(raw)
    if magic != CSNP_MAGIC:
        raise DegenerateInputError(f"{path}: bad magic {magic!r}")
    body = raw[_CSNP_HEADER.size:]
    expected = n_snap * n_ant * n_sub * 8
    if len(body) != expected:
        raise DegenerateInputError(f"{path}: expected {expected} payload bytes, got {len(body)}")
    return np.frombuffer(body, dtype="<c8").reshape(n_snap, n_ant, n_sub)


def read_snapshots(csnp_path, times_path) -> list[ChannelSnapshot]:
    H = read_csnp(csnp_path)
    t = read_timestamps(times_path)
    if len(t) != len(H):
        raise ShapeError(f"{len(t)} timestamps for {len(H)} snapshots")
    return [ChannelSnapshot(h, ti) for h, ti in zip(H, t)]


def write_timestamps(path, times) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t"])
        for t in times:
            w.writerow([repr(float(t))])
    return path


def read_timestamps(path) -> np.ndarray:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        return np.array([float(r["t"]) for r in csv.DictReader(fh)])


def write_scene(scene: SceneConfig, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(scene.to_dict(), indent=2))
    return path


def read_scene(path) -> SceneConfig:
    return SceneConfig.from_dict(json.loads(Path(path).read_text()))
