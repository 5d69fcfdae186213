"""Command-line front end: ``multiloc <command> [--config PATH] [--out DIR] ...``.

Every command writes its artifacts under ``--out`` together with a manifest
(``manifest_<command>.json``) holding the resolved config, seed, package
versions, kernel backend and SHA-256 hashes of the files it wrote. Inputs are
read from ``--input`` (defaults to ``--out``), so a run directory can be built
up by running the commands in sequence.

Exit status: 0 on success, 2 on validation errors, 1 on runtime errors. On
failure a JSON error record is printed to stderr and written to
``<out>/error.json``.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import os
import platform
import sys
import time
import traceback
from pathlib import Path

import numpy as np

from . import __version__, _kernels
from .audio_loc.pipeline import localize_audio_with_report
from .core import (
    Trajectory,
    derive_seed,
    read_mic_csv,
    read_trajectory_csv,
    resample_trajectory,
    write_mic_csv,
    write_trajectory_csv,
)
from .errors import MultilocError, ValidationError
from .eval import ErrorStats, ReportRow, evaluate_trajectory, read_report_csv, table_text, write_report
from .experiment import ExperimentConfig, load_config, parse_snr_list
from .radio_loc.dataset import RadioRun, grid_campaign, read_run, simulate_run, write_run
from .radio_loc.pipeline import RadioModels, fit_radio, localize_radio
from .radio_loc.split import build_split
from .sim.io import read_recording, read_scene, write_recording, write_scene
from .workflow import condition_name, simulate_recording, trajectory_from_spec

COMMANDS = ("simulate", "localize-audio", "train-radio", "localize-radio", "evaluate",
            "report", "repro-suite")


class StageError(Exception):
    """Runtime failure tagged with the pipeline stage it came from."""

    def __init__(self, stage: str, exc: BaseException):
        super().__init__(f"{stage}: {exc}")
        self.stage = stage
        self.exc = exc


class _Run:
    """Per-command context: config, directories, files written."""

    def __init__(self, command: str, cfg: ExperimentConfig, out: Path, inp: Path):
        self.command = command
        self.cfg = cfg
        self.out = out
        self.inp = inp
        self.written: list[Path] = []
        self.stage = "setup"

    def track(self, *paths) -> None:
        for p in paths:
            p = Path(p)
            if p.is_dir():
                self.written.extend(sorted(q for q in p.rglob("*") if q.is_file()))
            else:
                self.written.append(p)

    def manifest(self, extra: dict | None = None) -> Path:
        files = {}
        for p in sorted(set(self.written)):
            try:
                rel = p.resolve().relative_to(self.out.resolve()).as_posix()
            except ValueError:
                rel = str(p)
            files[rel] = hashlib.sha256(p.read_bytes()).hexdigest()
        record = {
            "command": self.command,
            "created": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
            "seed": self.cfg.seed,
            "config": self.cfg.to_dict(),
            "input": str(self.inp),
            "versions": versions(),
            "kernel_backend": _kernels.BACKEND,
            "files": files,
            **(extra or {}),
        }
        path = self.out / f"manifest_{self.command.replace('-', '_')}.json"
        path.write_text(json.dumps(record, indent=2, sort_keys=True))
        return path


def versions() -> dict:
    import scipy

    out = {"multiloc": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
           "python": platform.python_version()}
    try:
        import numba

        out["numba"] = numba.__version__
    except ImportError:  # pragma: no cover
        out["numba"] = None
    return out


def _json_dump(obj, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True))
    return path


def _audio_cfg(cfg: ExperimentConfig):
    """Audio config with the RANSAC seed split from the root seed unless set explicitly."""
    explicit = "seed" in cfg.raw.get("audio", {}).get("ransac", {})
    if explicit:
        return cfg.audio
    ransac = dataclasses.replace(cfg.audio.ransac, seed=derive_seed(cfg.seed, "ransac"))
    return dataclasses.replace(cfg.audio, ransac=ransac)


def _radio_cfg(cfg: ExperimentConfig):
    explicit = cfg.raw.get("radio", {})
    out = cfg.radio
    if "seed" not in explicit.get("cov_train", {}):
        out = dataclasses.replace(out, cov_train=dataclasses.replace(
            out.cov_train, seed=derive_seed(cfg.seed, "train.cov")))
    if "seed" not in explicit.get("cir_train", {}):
        out = dataclasses.replace(out, cir_train=dataclasses.replace(
            out.cir_train, seed=derive_seed(cfg.seed, "train.cir")))
    return out


def _radio_ids(run: _Run) -> tuple[list[str], list[str]]:
    """Campaign run ids (split odd/even) and extra radio trajectory ids (test only)."""
    index = run.inp / "radio" / "runs.json"
    if not index.exists():
        raise FileNotFoundError(f"{index} (run 'simulate' first)")
    data = json.loads(index.read_text())
    return data["campaign"], data["extra"]


def _noisy(r: RadioRun, snr, seed: int) -> RadioRun:
    return r if snr is None else r.with_noise(snr, seed)


# -- commands ---------------------------------------------------------------------

def cmd_simulate(run: _Run) -> dict:
    cfg = run.cfg
    scene = cfg.scene
    out = run.out
    run.stage = "simulate.scene"
    run.track(write_scene(scene, out / "scene.json"), write_mic_csv(scene.mic_array, out / "mics.csv"))
    src = cfg.raw["source"]
    asim = cfg.raw["audio_sim"]
    audio_snrs = cfg.raw["snr_db"] or [asim.get("snr_db")]
    extra_radio = []
    for spec in cfg.trajectories:
        tid = spec["id"]
        run.stage = f"simulate.trajectory[{tid}]"
        traj = trajectory_from_spec(spec, scene)
        run.track(write_trajectory_csv(traj, out / "gt" / f"{tid}.csv"))
        sensors = spec.get("sensors", ["audio", "radio"])
        if "audio" in sensors:
            for snr in audio_snrs:
                run.stage = f"simulate.audio[{tid}]"
                rec = simulate_recording(traj, scene, src["kind"], cfg.seed, tid,
                                         band=src.get("band", (100.0, 8000.0)),
                                         reflection=float(asim.get("reflection", 0.0)),
                                         interferer=asim.get("interferer"), snr_db=snr)
                d = out / "audio" / condition_name(snr) / tid
                write_recording(rec, d)
                run.track(d)
        if "radio" in sensors:
            run.stage = f"simulate.radio[{tid}]"
            rate = float(spec.get("radio_rate", spec["rate"]))
            rtraj = resample_trajectory(traj, rate) if rate != float(spec["rate"]) else traj
            rr = simulate_run(tid, rtraj, scene, spec["pattern"],
                              float(cfg.raw["radio_sim"].get("reflection", 0.5)))
            write_run(rr, out / "radio")
            extra_radio.append(tid)
    campaign = []
    camp = cfg.raw.get("radio_campaign")
    if camp:
        run.stage = "simulate.radio_campaign"
        for rr in grid_campaign(scene, rows=int(camp["rows"]), speed=float(camp.get("speed", 0.5)),
                                rate=float(camp["rate"]), margin=float(camp.get("margin", 0.25)),
                                reflection=float(cfg.raw["radio_sim"].get("reflection", 0.5))):
            write_run(rr, out / "radio")
            campaign.append(rr.run_id)
    if campaign or extra_radio:
        _json_dump({"campaign": campaign, "extra": extra_radio}, out / "radio" / "runs.json")
        run.track(out / "radio")
    return {"trajectories": [t["id"] for t in cfg.trajectories], "radio_campaign": campaign}


def cmd_localize_audio(run: _Run) -> dict:
    cfg = run.cfg
    acfg = _audio_cfg(cfg)
    scene = read_scene(run.inp / "scene.json") if (run.inp / "scene.json").exists() else cfg.scene
    mics = read_mic_csv(run.inp / "mics.csv") if (run.inp / "mics.csv").exists() else scene.mic_array
    base = run.inp / "audio"
    if not base.is_dir():
        raise FileNotFoundError(f"{base} (run 'simulate' first)")
    done = []
    for cond_dir in sorted(p for p in base.iterdir() if p.is_dir()):
        for rec_dir in sorted(p for p in cond_dir.iterdir() if p.is_dir()):
            run.stage = f"localize-audio[{cond_dir.name}/{rec_dir.name}]"
            rec = read_recording(rec_dir)
            traj, report = localize_audio_with_report(rec, mics, scene.temperature, acfg)
            dest = run.out / "estimates" / "audio" / cond_dir.name
            run.track(write_trajectory_csv(traj, dest / f"{rec_dir.name}.csv"),
                      _json_dump(report, dest / f"{rec_dir.name}_report.json"))
            done.append(f"{cond_dir.name}/{rec_dir.name}")
    return {"localized": done}


def cmd_train_radio(run: _Run) -> dict:
    cfg = run.cfg
    rcfg = _radio_cfg(cfg)
    campaign, _ = _radio_ids(run)
    run.stage = "train-radio.split"
    split = build_split(campaign)
    train = [read_run(run.inp / "radio", i) for i in split.train]
    out = {}
    for snr in cfg.snr_conditions:
        cond = condition_name(snr)
        run.stage = f"train-radio[{cond}]"
        models = fit_radio([_noisy(r, snr, cfg.seed) for r in train], rcfg)
        d = run.out / "models" / cond
        models.save(d, meta={"train": list(split.train), "test": list(split.test),
                             "taps": rcfg.taps, "snr_db": snr, "config": rcfg.to_dict()})
        run.track(d)
        out[cond] = {"final_loss_cov": float(models.cov_curve[-1]),
                     "final_loss_cir": float(models.cir_curve[-1])}
    return out


def cmd_localize_radio(run: _Run) -> dict:
    cfg = run.cfg
    campaign, extra = _radio_ids(run)
    split = build_split(campaign)
    targets = list(split.test) + [e for e in extra if e not in split.train]
    done = []
    for snr in cfg.snr_conditions:
        cond = condition_name(snr)
        run.stage = f"localize-radio[{cond}]"
        mdir = run.inp / "models" / cond
        models = RadioModels.load(mdir)
        taps = json.loads((mdir / "model.json").read_text()).get("taps", cfg.radio.taps)
        for tid in targets:
            r = _noisy(read_run(run.inp / "radio", tid), snr, cfg.seed)
            est = localize_radio(models, r.H, r.trajectory.t, taps=taps)
            run.track(write_trajectory_csv(est, run.out / "estimates" / "radio" / cond / f"{tid}.csv"))
            done.append(f"{cond}/{tid}")
    return {"localized": done}


def _gt_for(run: _Run, sensor: str, tid: str) -> Trajectory:
    p = run.inp / "gt" / f"{tid}.csv"
    if sensor == "radio" and not p.exists():
        p = run.inp / "radio" / f"{tid}_gt.csv"
    return read_trajectory_csv(p)


def _sensor_label(sensor: str, cond: str) -> str:
    return sensor if cond == "clean" else f"{sensor}@{cond}"


def cmd_evaluate(run: _Run) -> dict:
    ev = run.cfg.raw["evaluation"]
    base = run.inp / "estimates"
    if not base.is_dir():
        raise FileNotFoundError(f"{base} (run a localize command first)")
    rows = []
    for sensor in ("audio", "radio"):
        sdir = base / sensor
        if not sdir.is_dir():
            continue
        for cond_dir in sorted(p for p in sdir.iterdir() if p.is_dir()):
            for est_path in sorted(cond_dir.glob("*.csv")):
                tid = est_path.stem
                run.stage = f"evaluate[{sensor}/{cond_dir.name}/{tid}]"
                est = read_trajectory_csv(est_path)
                gt = _gt_for(run, sensor, tid)
                stats, aligned = evaluate_trajectory(est, gt, ev["mode"], ev["projection"],
                                                     float(ev.get("max_dt", 0.05)))
                rows.append(ReportRow(tid, _sensor_label(sensor, cond_dir.name), stats,
                                      aligned.drops, (gt.xyz[:, :2], aligned.est[:, :2])))
    if not rows:
        raise FileNotFoundError(f"no estimate CSVs under {base}")
    run.stage = "evaluate.write_report"
    files = write_report(rows, run.out / "report")
    run.track(*(run.out / "report" / f for f in [files["csv"], files["table"], *files["svg"]]))
    return {"rows": len(rows)}


def cmd_report(run: _Run) -> dict:
    """Re-render the human-readable table from the report CSV(s)."""
    inputs = run.cfg.raw.get("evaluation", {}).get("inputs") or [str(run.inp)]
    lines = []
    rows = []
    for d in inputs:
        path = Path(d) / "report" / "report.csv"
        if not path.exists():
            raise FileNotFoundError(f"{path} (run 'evaluate' first)")
        for rec in read_report_csv(path):
            rows.append(rec)
    rendered = [ReportRow(r["trajectory"], r["sensor"],
                          ErrorStats(float(r["mean_cm"]) / 100, float(r["sd_cm"]) / 100,
                                     float(r["median_cm"]) / 100, int(r["count"])),
                          int(r["drops"])) for r in rows]
    lines.append(table_text(rendered))
    dest = run.out / "report" / "summary.txt"
    dest.parent.mkdir(parents=True, exist_ok=True)
    dest.write_text("".join(lines))
    run.track(dest)
    sys.stdout.write("".join(lines))
    return {"rows": len(rows)}


def cmd_repro_suite(run: _Run) -> dict:
    from .repro import run_suite

    run.stage = "repro-suite"
    result = run_suite(run.out, seed=run.cfg.seed,
                       snr_db=(run.cfg.raw["snr_db"] or [10.0])[0])
    run.track(*result["files"])
    for line in result["lines"]:
        print(line)
    if not result["all_passed"]:
        failed = [c for c, ok in result["passed"].items() if not ok]
        raise _CriteriaFailed(failed)
    return {"criteria": result["passed"]}


class _CriteriaFailed(Exception):
    def __init__(self, failed):
        super().__init__(f"acceptance criteria failed: {', '.join(failed)}")
        self.failed = failed


HANDLERS = {
    "simulate": cmd_simulate,
    "localize-audio": cmd_localize_audio,
    "train-radio": cmd_train_radio,
    "localize-radio": cmd_localize_radio,
    "evaluate": cmd_evaluate,
    "report": cmd_report,
    "repro-suite": cmd_repro_suite,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="multiloc", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"multiloc {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", type=Path, default=None, help="experiment JSON")
        s.add_argument("--out", type=Path, default=Path("multiloc-out"), help="output directory")
        s.add_argument("--input", type=Path, default=None,
                       help="run directory to read from (default: --out)")
        s.add_argument("--seed", type=int, default=None, help="root seed")
        s.add_argument("--set", dest="overrides", action="append", default=[],
                       metavar="K=V", help="config override, dotted key (repeatable)")
        s.add_argument("--snr-db", default=None, metavar="LIST",
                       help="comma-separated SNR conditions in dB")
    return p


def _error_record(out: Path | None, record: dict) -> None:
    text = json.dumps(record, indent=2, sort_keys=True)
    print(text, file=sys.stderr)
    if out is not None:
        try:
            out.mkdir(parents=True, exist_ok=True)
            (out / "error.json").write_text(text)
        except OSError:
            pass


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    threads = os.environ.get("MULTILOC_THREADS")
    if threads:
        try:
            _kernels.set_threads(int(threads))
        except ValueError:
            pass
    out = args.out
    run = None
    try:
        cfg = load_config(args.config, args.overrides, args.seed, parse_snr_list(args.snr_db))
        out.mkdir(parents=True, exist_ok=True)
        run = _Run(args.command, cfg, out, args.input or out)
        _json_dump(cfg.to_dict(), out / f"config_{args.command.replace('-', '_')}.json")
        result = HANDLERS[args.command](run)
        run.stage = "manifest"
        run.manifest({"result": result})
        return 0
    except ValidationError as exc:
        _error_record(out, {"status": "invalid", "command": args.command,
                            "errors": exc.fields})
        return 2
    except _CriteriaFailed as exc:
        if run is not None:
            run.manifest({"failed_criteria": exc.failed})
        _error_record(out, {"status": "failed", "command": args.command,
                            "stage": "repro-suite", "failed_criteria": exc.failed})
        return 1
    except (MultilocError, OSError, ValueError, KeyError, RuntimeError) as exc:
        stage = run.stage if run is not None else "setup"
        _error_record(out, {"status": "error", "command": args.command, "stage": stage,
                            "error": type(exc).__name__, "message": str(exc),
                            "trace": traceback.format_exc(limit=3).splitlines()[-3:]})
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
