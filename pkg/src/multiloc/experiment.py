"""Experiment configuration: JSON file plus ``key=value`` overrides, validated up front."""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from .audio_loc.pipeline import AudioConfig
from .core import SceneConfig
from .errors import MultilocError, ValidationError
from .eval import ALIGN_MODES
from .radio_loc.pipeline import CAMPAIGN_CONFIG, RadioConfig
from .sim.trajectories import PATTERNS

SOURCE_KINDS = ("wideband", "chirp")
SENSORS = ("audio", "radio")

DEFAULTS: dict = {
    "seed": 0,
    "scene": {},
    "trajectories": [
        {"id": "circle01", "pattern": "circle", "speed": 0.5, "rate": 100.0,
         "params": {"radius": 0.9, "duration": 5.0}, "sensors": ["audio", "radio"],
         "radio_rate": 10.0},
    ],
    "source": {"kind": "wideband", "band": [100.0, 8000.0]},
    "audio_sim": {"reflection": 0.0, "interferer": None, "snr_db": None},
    "radio_sim": {"reflection": 0.5},
    "radio_campaign": {"rows": 24, "rate": 5.0, "speed": 0.5, "margin": 0.25},
    "audio": {},
    "radio": CAMPAIGN_CONFIG.to_dict(),
    "evaluation": {"mode": "none", "projection": "2D", "max_dt": 0.05},
    "snr_db": [],
}


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict) and out[k]:
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def parse_override(text: str) -> tuple[list[str], Any]:
    """``a.b.c=value``; the value is read as JSON when it parses, else as a string."""
    if "=" not in text:
        raise ValidationError({text: "override must look like key=value"})
    key, raw = text.split("=", 1)
    key = key.strip()
    if not key:
        raise ValidationError({text: "empty key"})
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.split("."), value


def apply_overrides(cfg: dict, overrides) -> dict:
    cfg = copy.deepcopy(cfg)
    for item in overrides or ():
        path, value = parse_override(item)
        node = cfg
        for part in path[:-1]:
            if isinstance(node, list):
                try:
                    node = node[int(part)]
                except (ValueError, IndexError):
                    raise ValidationError({".".join(path): f"bad list index {part!r}"}) from None
                continue
            node = node.setdefault(part, {})
            if not isinstance(node, (dict, list)):
                raise ValidationError({".".join(path): f"{part!r} is not a section"})
        last = path[-1]
        if isinstance(node, list):
            try:
                node[int(last)] = value
            except (ValueError, IndexError):
                raise ValidationError({".".join(path): f"bad list index {last!r}"}) from None
        else:
            node[last] = value
    return cfg


def parse_snr_list(text: str | None) -> list[float]:
    if text is None or not str(text).strip():
        return []
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise ValidationError({"snr_db": f"not a comma-separated number list: {text!r}"}) from None


@dataclass(frozen=True)
class ExperimentConfig:
    raw: dict
    scene: SceneConfig
    audio: AudioConfig
    radio: RadioConfig
    seed: int

    @property
    def trajectories(self) -> list[dict]:
        return self.raw["trajectories"]

    @property
    def snr_conditions(self) -> list[float | None]:
        """Noise conditions to run; ``None`` is the noise-free case."""
        return list(self.raw["snr_db"]) or [None]

    def to_dict(self) -> dict:
        return copy.deepcopy(self.raw)


def _check(problems: dict, key: str, ok: bool, msg: str) -> None:
    if not ok:
        problems[key] = msg


def validate(raw: dict) -> ExperimentConfig:
    """Build typed configs from a merged dict; every problem is reported by field."""
    problems: dict[str, str] = {}
    unknown = set(raw) - set(DEFAULTS)
    for k in sorted(unknown):
        problems[k] = "unknown key"

    seed = raw.get("seed")
    _check(problems, "seed", isinstance(seed, int) and not isinstance(seed, bool) and seed >= 0,
           "must be a non-negative integer")

    scene = audio = radio = None
    try:
        scene = SceneConfig.from_dict(raw.get("scene", {}))
    except (MultilocError, TypeError, ValueError) as exc:
        problems["scene"] = str(exc)
    try:
        a = raw.get("audio", {})
        audio = AudioConfig.from_dict(a) if a else AudioConfig.for_rate(
            scene.audio_sample_rate if scene else 96_000.0)
    except (MultilocError, TypeError, ValueError) as exc:
        problems["audio"] = str(exc)
    try:
        radio = RadioConfig.from_dict(raw.get("radio", {}))
    except (MultilocError, TypeError, ValueError, KeyError) as exc:
        problems["radio"] = str(exc)

    trajs = raw.get("trajectories")
    if not isinstance(trajs, list):
        problems["trajectories"] = "must be a list"
        trajs = []
    seen = set()
    for i, t in enumerate(trajs):
        key = f"trajectories[{i}]"
        if not isinstance(t, dict):
            problems[key] = "must be an object"
            continue
        tid = t.get("id")
        _check(problems, f"{key}.id", isinstance(tid, str) and tid.strip() != ""
               and "/" not in tid, "must be a non-empty name without '/'")
        if tid in seen:
            problems[f"{key}.id"] = f"duplicate id {tid!r}"
        seen.add(tid)
        _check(problems, f"{key}.pattern", t.get("pattern") in PATTERNS,
               f"must be one of {PATTERNS}")
        for num in ("speed", "rate"):
            v = t.get(num)
            _check(problems, f"{key}.{num}", isinstance(v, (int, float)) and v > 0,
                   "must be a positive number")
        sensors = t.get("sensors", list(SENSORS))
        _check(problems, f"{key}.sensors", isinstance(sensors, list)
               and set(sensors) <= set(SENSORS) and sensors, f"must be a subset of {SENSORS}")
        if not isinstance(t.get("params", {}), dict):
            problems[f"{key}.params"] = "must be an object"

    src = raw.get("source", {})
    _check(problems, "source.kind", src.get("kind") in SOURCE_KINDS,
           f"must be one of {SOURCE_KINDS}")
    band = src.get("band", [100.0, 8000.0])
    _check(problems, "source.band", isinstance(band, list) and len(band) == 2
           and all(isinstance(b, (int, float)) for b in band) and 0 <= band[0] < band[1],
           "must be [f_lo, f_hi] with 0 <= f_lo < f_hi")

    asim = raw.get("audio_sim", {})
    refl = asim.get("reflection", 0.0)
    _check(problems, "audio_sim.reflection", isinstance(refl, (int, float)) and 0 <= refl < 1,
           "must be in [0, 1)")
    itf = asim.get("interferer")
    if itf is not None:
        _check(problems, "audio_sim.interferer", isinstance(itf, dict)
               and isinstance(itf.get("position"), list) and len(itf["position"]) == 3,
               "must be null or {position: [x, y, z], gain, band}")

    camp = raw.get("radio_campaign")
    if camp is not None:
        _check(problems, "radio_campaign.rows", isinstance(camp.get("rows"), int)
               and camp.get("rows", 0) >= 2, "must be an integer >= 2")
        _check(problems, "radio_campaign.rate", isinstance(camp.get("rate"), (int, float))
               and camp.get("rate", 0) > 0, "must be positive")

    ev = raw.get("evaluation", {})
    _check(problems, "evaluation.mode", ev.get("mode") in ALIGN_MODES,
           f"must be one of {ALIGN_MODES}")
    _check(problems, "evaluation.projection", ev.get("projection") in ("2D", "3D"),
           "must be 2D or 3D")

    snr = raw.get("snr_db", [])
    _check(problems, "snr_db", isinstance(snr, list)
           and all(isinstance(v, (int, float)) for v in snr), "must be a list of numbers")

    if problems:
        raise ValidationError(problems)
    return ExperimentConfig(raw, scene, audio, radio, int(seed))


def load_config(path=None, overrides=(), seed: int | None = None,
                snr_db: list[float] | None = None) -> ExperimentConfig:
    """Defaults, then the JSON file, then ``--set`` overrides, then flags."""
    cfg = copy.deepcopy(DEFAULTS)
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise ValidationError({"config": f"file not found: {p}"})
        try:
            user = json.loads(p.read_text())
        except json.JSONDecodeError as exc:
            raise ValidationError({"config": f"invalid JSON: {exc}"}) from None
        if not isinstance(user, dict):
            raise ValidationError({"config": "top level must be an object"})
        cfg = _merge(cfg, user)
    cfg = apply_overrides(cfg, overrides)
    if seed is not None:
        cfg["seed"] = seed
    if snr_db:
        cfg["snr_db"] = list(snr_db)
    return validate(cfg)
