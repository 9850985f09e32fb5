"""Command-line entry points: synth, enroll, evaluate.

`synth` writes a deterministic synthetic cohort to disk, `enroll` trains the
two per-user models from recorded sessions, and `evaluate` runs a full
genuine-plus-attack experiment through the session protocol and writes a
metrics report with ROC curves. Exit codes: 0 success, 2 configuration
error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import IoFailure, SyncGaitError
from .io import read_imu_csv, read_keypoint_jsonl, write_imu_csv, \
    write_keypoint_jsonl
from .metrics import evaluate as score_evaluate
from .metrics import roc_points_csv
from .pipeline import PipelineConfig, enroll
from .classify import deserialize_model, serialize_model
from .pipeline import Enrollment
from .protocol import ChannelModel, SessionConfig, SessionState, run_session
from .synth import (CameraModel, HijackAttack, MimicryAttack, RelayAttack,
                    generate_attack, generate_session, make_cohort)
from .syncing import ClockOffsetEstimate

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3

ATTACK_KINDS = ("relay", "hijack", "mimicry")


@dataclass
class ExperimentConfig:
    """Resolved knobs for one experiment; file values then flag overrides."""

    cohort_size: int = 5
    sessions_per_subject: int = 1     # synth output sessions
    enroll_sessions: int = 8          # evaluate: in-memory enrollment depth
    duration: float = 8.0             # seconds per session
    clock_offset: float = 0.08        # drone clock minus phone clock
    loss_rate: float = 0.0
    genuine_trials: int = 2           # per subject
    attack_trials: int = 2            # per subject per attack kind
    attacks: tuple[str, ...] = ATTACK_KINDS
    fidelity: float = 0.5             # mimicry blend weight
    fps: float = 60.0
    distance: float = 18.0
    hover_height: float = 4.0
    angle: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.cohort_size < 2:
            raise ValueError("cohort_size must be >= 2")
        if self.sessions_per_subject < 1 or self.enroll_sessions < 1:
            raise ValueError("session counts must be >= 1")
        if self.genuine_trials < 1 or self.attack_trials < 1:
            raise ValueError("trial counts must be >= 1")
        if not 0.0 <= self.loss_rate <= 0.6:
            raise ValueError("loss_rate must lie in [0, 0.6]")
        if not 0.0 <= self.fidelity <= 1.0:
            raise ValueError("fidelity must lie in [0, 1]")
        self.attacks = tuple(self.attacks)
        for a in self.attacks:
            if a not in ATTACK_KINDS:
                raise ValueError(f"unknown attack kind {a!r}")

    @classmethod
    def load(cls, path: str | None, overrides: dict) -> "ExperimentConfig":
        data: dict = {}
        if path is not None:
            try:
                data = json.loads(Path(path).read_text())
            except OSError as exc:
                raise IoFailure(str(exc)) from exc
            except json.JSONDecodeError as exc:
                raise ValueError(f"config is not valid JSON: {exc}") from exc
            if not isinstance(data, dict):
                raise ValueError("config must be a JSON object")
            known = {f.name for f in dataclasses.fields(cls)}
            unknown = set(data) - known
            if unknown:
                raise ValueError(f"unknown config keys: {sorted(unknown)}")
        data.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**data)

    def camera(self) -> CameraModel:
        return CameraModel(hover_height=self.hover_height,
                           horizontal_distance=self.distance,
                           horizontal_angle=self.angle, fps=self.fps)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["attacks"] = list(self.attacks)
        return d

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


def _json_ready(obj):
    """Round floats to 9 significant digits so reports are reproducible."""
    if isinstance(obj, float):
        return float(f"{obj:.9g}")
    if isinstance(obj, dict):
        return {k: _json_ready(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_ready(v) for v in obj]
    return obj


def _write_text(path: Path, text: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    except OSError as exc:
        raise IoFailure(str(exc)) from exc


def _write_json(path: Path, payload: dict) -> None:
    _write_text(path, json.dumps(_json_ready(payload), sort_keys=True,
                                 indent=2) + "\n")


# --- synth -------------------------------------------------------------------

def cmd_synth(cfg: ExperimentConfig, out: Path) -> int:
    cohort = make_cohort(cfg.cohort_size, seed=cfg.seed)
    cam = cfg.camera()
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
    manifest = {"format": "gaitsync-v1", "config": cfg.to_dict(),
                "config_sha256": cfg.digest(), "imu_rate": 100.0,
                "subjects": []}
    for si, subject in enumerate(cohort):
        entry = {"index": si, "cycle_period": subject.cycle_period,
                 "sessions": []}
        for k in range(cfg.sessions_per_subject):
            imu, kp, gt = generate_session(
                subject, cam, cfg.duration, cfg.clock_offset, seed_offset=k)
            stem = f"subject{si:02d}_session{k:02d}"
            write_imu_csv(out / f"{stem}_imu.csv", imu)
            write_keypoint_jsonl(out / f"{stem}_keypoints.jsonl", kp)
            entry["sessions"].append({
                "imu": f"{stem}_imu.csv",
                "keypoints": f"{stem}_keypoints.jsonl",
                "clock_offset": gt.clock_offset,
                "cycle_boundaries": [round(b, 6)
                                     for b in gt.cycle_boundaries],
            })
        manifest["subjects"].append(entry)
    _write_json(out / "manifest.json", manifest)
    print(f"wrote {cfg.cohort_size} subjects x {cfg.sessions_per_subject} "
          f"sessions to {out}")
    return EXIT_OK


# --- enroll ------------------------------------------------------------------

def _load_manifest(data_dir: Path) -> dict:
    try:
        return json.loads((data_dir / "manifest.json").read_text())
    except OSError as exc:
        raise IoFailure(f"cannot read manifest: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise IoFailure(f"manifest is not valid JSON: {exc}") from exc


def cmd_enroll(cfg: ExperimentConfig, data_dir: Path, subject: int,
               out: Path) -> int:
    manifest = _load_manifest(data_dir)
    subjects = manifest.get("subjects", [])
    if not 0 <= subject < len(subjects):
        raise ValueError(f"subject index {subject} outside cohort of "
                         f"{len(subjects)}")
    imu_rate = float(manifest.get("imu_rate", 100.0))
    fps = float(manifest.get("config", {}).get("fps", 60.0))
    sessions = []
    for sess in subjects[subject]["sessions"]:
        imu = read_imu_csv(data_dir / sess["imu"], sample_rate=imu_rate)
        kp = read_keypoint_jsonl(data_dir / sess["keypoints"], frame_rate=fps)
        offset = ClockOffsetEstimate(float(sess["clock_offset"]),
                                     1e-6, 0.005)
        sessions.append((imu, kp, offset))
    enrollment = enroll(sessions, PipelineConfig(), seed=cfg.seed)

    out.mkdir(parents=True, exist_ok=True)
    cons_path = out / f"subject{subject:02d}_consistency.model"
    gait_path = out / f"subject{subject:02d}_gait.model"
    try:
        cons_path.write_bytes(serialize_model(enrollment.consistency_model))
        gait_path.write_bytes(serialize_model(enrollment.gait_model))
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
    meta = {"subject": subject,
            "config_sha256": cfg.digest(),
            "feature_mask": enrollment.feature_mask.astype(int).tolist(),
            "consistency_model": cons_path.name,
            "gait_model": gait_path.name}
    if enrollment.fisher is not None:
        meta["fisher"] = {n: float(s) for n, s in
                          zip(enrollment.fisher.names,
                              enrollment.fisher.normalized)}
    _write_json(out / f"subject{subject:02d}_enrollment.json", meta)
    print(f"enrolled subject {subject}: {cons_path.name}, {gait_path.name}")
    return EXIT_OK


def load_enrollment(out: Path, subject: int) -> Enrollment:
    """Read back the model files written by the enroll command."""
    meta_path = out / f"subject{subject:02d}_enrollment.json"
    try:
        meta = json.loads(meta_path.read_text())
        cons = deserialize_model((out / meta["consistency_model"]).read_bytes())
        gait = deserialize_model((out / meta["gait_model"]).read_bytes())
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
    mask = np.array(meta["feature_mask"], dtype=bool)
    return Enrollment(consistency_model=cons, gait_model=gait,
                      feature_mask=mask)


# --- evaluate ----------------------------------------------------------------

def _run_trial(cfg: ExperimentConfig, enrollment: Enrollment,
               imu, kp, seed: int) -> dict:
    session_cfg = SessionConfig(
        max_attempts=1,
        sample_duration=cfg.duration,
        channel=ChannelModel(loss_rate=cfg.loss_rate),
        clock_offset=cfg.clock_offset,
    )
    result = run_session(session_cfg, enrollment,
                         lambda attempt: imu, lambda attempt: kp, seed=seed)
    if result.record is None:
        return {"accepted": False, "consistency": -1.0, "gait": -1.0,
                "fused": -1.0, "completed": False}
    rec = result.record
    cons = min(rec.consistency_score_drone, rec.consistency_score_phone)
    return {"accepted": result.state == SessionState.ACCEPTED,
            "consistency": cons, "gait": rec.gait_score,
            "fused": min(cons, rec.gait_score), "completed": True}


def _attack_spec(kind: str, victim, attacker, fidelity: float):
    if kind == "relay":
        return RelayAttack(victim, attacker)
    if kind == "hijack":
        return HijackAttack(attacker)
    return MimicryAttack(attacker, victim, fidelity)


def cmd_evaluate(cfg: ExperimentConfig, out: Path) -> int:
    cohort = make_cohort(cfg.cohort_size, seed=cfg.seed)
    cam = cfg.camera()
    offset = ClockOffsetEstimate(cfg.clock_offset, 1e-6, 0.005)

    enrollments = {}
    for si, subject in enumerate(cohort):
        sessions = []
        for k in range(cfg.enroll_sessions):
            imu, kp, _ = generate_session(subject, cam, cfg.duration,
                                          cfg.clock_offset,
                                          seed_offset=10 + k)
            sessions.append((imu, kp, offset))
        enrollments[si] = enroll(sessions, PipelineConfig(), seed=cfg.seed)

    genuine = []
    for si in range(cfg.cohort_size):
        for k in range(cfg.genuine_trials):
            imu, kp, _ = generate_session(cohort[si], cam, cfg.duration,
                                          cfg.clock_offset,
                                          seed_offset=60 + k)
            genuine.append(_run_trial(cfg, enrollments[si], imu, kp,
                                      seed=cfg.seed * 100000 + si * 100 + k))

    attacks: dict[str, list[dict]] = {kind: [] for kind in cfg.attacks}
    for si in range(cfg.cohort_size):
        for k in range(cfg.attack_trials):
            ai = (si + 1 + k) % cfg.cohort_size
            for kind in cfg.attacks:
                spec = _attack_spec(kind, cohort[si], cohort[ai],
                                    cfg.fidelity)
                imu, kp, _ = generate_attack(spec, cam, cfg.duration,
                                             cfg.clock_offset,
                                             seed_offset=900 + 10 * si + k)
                attacks[kind].append(
                    _run_trial(cfg, enrollments[si], imu, kp,
                               seed=cfg.seed * 100000 + 7000
                               + si * 100 + k * 10 + ATTACK_KINDS.index(kind)))

    all_attacks = [t for trials in attacks.values() for t in trials]
    report = {
        "config": cfg.to_dict(),
        "config_sha256": cfg.digest(),
        "genuine": _rates(genuine),
        "attacks": {kind: _rates(trials) for kind, trials in attacks.items()},
    }
    streams = {}
    for name in ("consistency", "gait", "fused"):
        g = [t[name] for t in genuine]
        imp = [t[name] for t in all_attacks]
        rep = score_evaluate(g, imp)
        streams[name] = rep.to_dict()
        _write_text(out / f"roc_{name}.csv", roc_points_csv(rep))
    report["scores"] = streams
    _write_json(out / "report.json", report)
    print(json.dumps(_json_ready(report["scores"]), sort_keys=True))
    print(f"report written to {out / 'report.json'}")
    return EXIT_OK


def _rates(trials: list[dict]) -> dict:
    n = len(trials)
    return {
        "n": n,
        "accept_rate": sum(t["accepted"] for t in trials) / n,
        "consistency_pass_rate": sum(t["consistency"] >= 0
                                     for t in trials) / n,
        "gait_pass_rate": sum(t["gait"] >= 0 for t in trials) / n,
        "fused_pass_rate": sum(t["fused"] >= 0 for t in trials) / n,
    }


# --- argument parsing --------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="syncgait",
        description="cross-modal gait authentication experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", type=int, help="experiment seed")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--fps", type=float, help="camera frame rate")
        p.add_argument("--distance", type=float,
                       help="initial subject-to-camera distance, m")
        p.add_argument("--hover-height", type=float, dest="hover_height",
                       help="camera height above ground, m")
        p.add_argument("--angle", type=float,
                       help="walking path angle off the camera axis, deg")

    p_synth = sub.add_parser("synth", help="write a synthetic cohort")
    common(p_synth)

    p_enroll = sub.add_parser("enroll", help="train per-user models")
    common(p_enroll)
    p_enroll.add_argument("--data", required=True,
                          help="directory written by synth")
    p_enroll.add_argument("--subject", type=int, required=True,
                          help="cohort subject index")

    p_eval = sub.add_parser("evaluate",
                            help="genuine + attack experiment with report")
    common(p_eval)
    p_eval.add_argument("--loss-rate", type=float, dest="loss_rate",
                        help="channel loss probability in [0, 0.6]")
    p_eval.add_argument("--attack", choices=ATTACK_KINDS,
                        help="restrict the experiment to one attack kind")
    p_eval.add_argument("--fidelity", type=float,
                        help="mimicry imitation fidelity in [0, 1]")
    return parser


_OVERRIDE_KEYS = ("seed", "fps", "distance", "hover_height", "angle",
                  "loss_rate", "fidelity")


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        overrides = {k: getattr(args, k, None) for k in _OVERRIDE_KEYS}
        if getattr(args, "attack", None) is not None:
            overrides["attacks"] = (args.attack,)
        cfg = ExperimentConfig.load(args.config, overrides)
        out = Path(args.out)
        if args.command == "synth":
            return cmd_synth(cfg, out)
        if args.command == "enroll":
            return cmd_enroll(cfg, Path(args.data), args.subject, out)
        return cmd_evaluate(cfg, out)
    except IoFailure as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, SyncGaitError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
