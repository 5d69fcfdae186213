"""Two-network radio positioning: covariance net and CIR net, fused by averaging."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from ..core import Trajectory
from ..errors import ConfigurationError, ShapeError
from .dataset import RadioRun
from .features import DEFAULT_TAPS, FeatureSet, FeatureVector, concat_features, extract_features
from .mlp import MlpArch, MlpModel, TrainConfig, load_model, save_model, train_fcnn, write_loss_curve


@dataclass(frozen=True)
class RadioConfig:
    taps: int = DEFAULT_TAPS
    cov_arch: MlpArch = field(default_factory=lambda: MlpArch((512,) * 8))
    cir_arch: MlpArch = field(default_factory=lambda: MlpArch((256,) * 8))
    cov_train: TrainConfig = field(default_factory=TrainConfig)
    cir_train: TrainConfig = field(default_factory=TrainConfig)

    def to_dict(self) -> dict:
        return {"taps": self.taps,
                "cov_arch": {"hidden": list(self.cov_arch.hidden), "output": self.cov_arch.output},
                "cir_arch": {"hidden": list(self.cir_arch.hidden), "output": self.cir_arch.output},
                "cov_train": asdict(self.cov_train), "cir_train": asdict(self.cir_train)}

    @classmethod
    def from_dict(cls, d: dict) -> "RadioConfig":
        def arch(v, default):
            return MlpArch(tuple(v["hidden"]), v.get("output", 3)) if v else default

        base = cls()
        return cls(taps=int(d.get("taps", base.taps)),
                   cov_arch=arch(d.get("cov_arch"), base.cov_arch),
                   cir_arch=arch(d.get("cir_arch"), base.cir_arch),
                   cov_train=TrainConfig(**d.get("cov_train", {})),
                   cir_train=TrainConfig(**d.get("cir_train", {})))

    def with_seed(self, seed: int) -> "RadioConfig":
        from dataclasses import replace
        return replace(self, cov_train=replace(self.cov_train, seed=seed),
                       cir_train=replace(self.cir_train, seed=seed + 1))


# Settings for the simulated grid campaigns: four CIR taps span the room's
# delay spread, the CIR net trains longer on jittered inputs with a weight average.
CAMPAIGN_CONFIG = RadioConfig(
    taps=4,
    cov_train=TrainConfig(learning_rate=0.1, epochs=20, batch_size=128),
    cir_train=TrainConfig(learning_rate=0.05, epochs=120, batch_size=64, input_noise=0.5,
                          ema_decay=0.995),
)


@dataclass(eq=False)
class RadioModels:
    cov: MlpModel
    cir: MlpModel
    cov_curve: np.ndarray | None = None
    cir_curve: np.ndarray | None = None

    def save(self, directory, meta: dict | None = None) -> dict:
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        files = {"cov_model": "cov.mlpm", "cir_model": "cir.mlpm"}
        save_model(self.cov, d / files["cov_model"])
        save_model(self.cir, d / files["cir_model"])
        for name, curve in (("cov", self.cov_curve), ("cir", self.cir_curve)):
            if curve is not None:
                files[f"{name}_loss"] = f"{name}_loss.csv"
                write_loss_curve(curve, d / files[f"{name}_loss"])
        record = {"files": files, "cov": self.cov.meta, "cir": self.cir.meta, **(meta or {})}
        (d / "model.json").write_text(json.dumps(record, indent=2, sort_keys=True))
        return record

    @classmethod
    def load(cls, directory) -> "RadioModels":
        d = Path(directory)
        return cls(load_model(d / "cov.mlpm"), load_model(d / "cir.mlpm"))


def run_features(runs: Sequence[RadioRun], taps: int) -> tuple[FeatureSet, np.ndarray]:
    if not runs:
        raise ConfigurationError("no runs given")
    feats = concat_features([extract_features(r.H, taps) for r in runs])
    labels = np.vstack([r.trajectory.xyz for r in runs])
    return feats, labels


def fit_radio(runs: Sequence[RadioRun], cfg: RadioConfig = RadioConfig()) -> RadioModels:
    """Train both networks on the given (training) runs."""
    feats, labels = run_features(runs, cfg.taps)
    cov = train_fcnn(feats.cov, labels, cfg.cov_arch, cfg.cov_train)
    cir = train_fcnn(feats.cir, labels, cfg.cir_arch, cfg.cir_train)
    return RadioModels(cov.model, cir.model, cov.loss_curve, cir.loss_curve)


def predict_fused(model_cov: MlpModel, model_cir: MlpModel, fv) -> np.ndarray:
    """Average of the two network outputs for one :class:`FeatureVector` or a FeatureSet."""
    if isinstance(fv, FeatureVector):
        cov, cir = fv.cov_features, fv.cir_features
    elif isinstance(fv, FeatureSet):
        cov, cir = fv.cov, fv.cir
    else:
        raise ShapeError(f"expected FeatureVector or FeatureSet, got {type(fv).__name__}")
    return 0.5 * (model_cov.predict(cov) + model_cir.predict(cir))


def localize_radio(models: RadioModels, H: np.ndarray, t, taps: int = DEFAULT_TAPS,
                   which: str = "fused") -> Trajectory:
    """Per-snapshot positions; ``which`` selects ``fused``, ``cov`` or ``cir``."""
    feats = extract_features(H, taps)
    if which == "fused":
        xyz = predict_fused(models.cov, models.cir, feats)
    elif which == "cov":
        xyz = models.cov.predict(feats.cov)
    elif which == "cir":
        xyz = models.cir.predict(feats.cir)
    else:
        raise ConfigurationError(f"unknown output {which!r}")
    return Trajectory(t, xyz)
