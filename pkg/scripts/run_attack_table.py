#!/usr/bin/env python3
"""Per-attack acceptance table: relay, hijack, and a mimicry fidelity sweep.

Relay pairs the victim's real inertial stream with video of a decoy, hijack
presents one impostor to both sensors, and mimicry blends the attacker's
motion toward the victim's with a tunable fidelity. For each case the table
shows how often each verification stage passes and how often the fused
decision accepts.

Example:
    python3 scripts/run_attack_table.py --out results/attacks --seed 7 \
        --fidelities 0.0 0.5 0.9
"""

import argparse
import json
import sys
from pathlib import Path

from syncgait.cli import EXIT_OK, main as cli_main

COLUMNS = ("consistency_pass_rate", "gait_pass_rate", "fused_pass_rate")


def _row(label: str, rates: dict) -> str:
    cells = "  ".join(f"{rates[c]:>12.3f}" for c in COLUMNS)
    return f"{label:<16}{rates['n']:>4}  {cells}"


def run(args: argparse.Namespace) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    config = {
        "cohort_size": args.cohort_size,
        "enroll_sessions": args.enroll_sessions,
        "genuine_trials": args.trials,
        "attack_trials": args.trials,
        "seed": args.seed,
    }
    cfg_path = out / "config.json"
    cfg_path.write_text(json.dumps(config, indent=2))

    print(f"{'case':<16}{'n':>4}  " +
          "  ".join(f"{c.replace('_pass_rate',''):>12}" for c in COLUMNS))

    base_dir = out / "relay_hijack"
    code = cli_main(["evaluate", "--config", str(cfg_path),
                     "--seed", str(args.seed), "--out", str(base_dir)])
    if code != EXIT_OK:
        return code
    report = json.loads((base_dir / "report.json").read_text())
    print(_row("genuine", report["genuine"]))
    for kind in ("relay", "hijack"):
        print(_row(kind, report["attacks"][kind]))

    for fid in args.fidelities:
        run_dir = out / f"mimicry_{fid:.2f}"
        code = cli_main(["evaluate", "--config", str(cfg_path),
                         "--seed", str(args.seed), "--attack", "mimicry",
                         "--fidelity", str(fid), "--out", str(run_dir)])
        if code != EXIT_OK:
            return code
        report = json.loads((run_dir / "report.json").read_text())
        print(_row(f"mimicry f={fid:.2f}", report["attacks"]["mimicry"]))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cohort-size", type=int, default=5)
    p.add_argument("--enroll-sessions", type=int, default=8)
    p.add_argument("--trials", type=int, default=3,
                   help="trials per subject per case")
    p.add_argument("--fidelities", type=float, nargs="+",
                   default=[0.0, 0.5, 0.9],
                   help="mimicry fidelity levels to sweep")
    return p


if __name__ == "__main__":
    sys.exit(run(build_parser().parse_args()))
