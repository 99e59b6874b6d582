"""Command line entry point: ``secure-isac {validate,solve,sweep,beampattern}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .scenario import ScenarioConfig, config_from_dict, db_to_linear, load_config, two_ap_config, tomllib

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_INFEASIBLE = 2
EXIT_SOLVER = 3

SCALES = {"desk": 8, "full": 30}


def _apply_common(cfg: ScenarioConfig, args) -> ScenarioConfig:
    if getattr(args, "scale", None):
        cfg = cfg.with_(N=SCALES[args.scale])
    if getattr(args, "seed", None) is not None:
        cfg = cfg.with_(rng_seed=args.seed)
    if getattr(args, "gamma_db", None) is not None:
        cfg = cfg.with_(gamma=db_to_linear(args.gamma_db))
    if getattr(args, "psi_db", None) is not None:
        cfg = cfg.with_(psi=db_to_linear(args.psi_db))
    return cfg


def _config(args) -> ScenarioConfig:
    if args.config:
        cfg = load_config(args.config)
    else:
        cfg = two_ap_config(N=SCALES[args.scale or "desk"])
    return _apply_common(cfg, args)


def cmd_validate(args) -> int:
    from .experiments import run_validation

    report = run_validation()
    if args.json:
        print(json.dumps(report, indent=2))
    else:
        for name, r in report.items():
            tag = "PASS" if r["passed"] else "FAIL"
            print(f"{tag} {name}: {r['value']:.3e} (threshold {r['threshold']:.1e})")
    return EXIT_OK if all(r["passed"] for r in report.values()) else EXIT_VALIDATION


def cmd_solve(args) -> int:
    from .experiments import run_design, save_solution, solution_dossier
    from .sdp import INFEASIBLE, OPTIMAL

    run = run_design(_config(args), tol=args.tol, drop_sensing=args.drop_sensing)
    text = solution_dossier(run)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    if run.status == OPTIMAL and args.save:
        save_solution(run, args.save)
    if run.status == OPTIMAL:
        return EXIT_OK
    return EXIT_INFEASIBLE if run.status == INFEASIBLE else EXIT_SOLVER


def load_sweep(path, args=None):
    """Parse a sweep file: scenario tables (or ``config = "file"``) plus a ``[sweep]`` table."""
    from .experiments import SweepSpec

    path = Path(path)
    with open(path, "rb") as fh:
        data = tomllib.load(fh)
    sw = data.pop("sweep")
    if "config" in data:
        cfg = load_config(path.parent / data["config"])
    else:
        cfg = config_from_dict(data)
    if args is not None:
        cfg = _apply_common(cfg, args)
    return SweepSpec(
        base=cfg,
        parameter=sw["parameter"],
        values=list(sw["values"]),
        trials=int(sw.get("trials", 1)),
        output_dir=sw.get("output_dir"),
        series_parameter=sw.get("series_parameter"),
        series_values=list(sw.get("series_values", [])),
        tol=sw.get("tol"),
    )


def cmd_sweep(args) -> int:
    from dataclasses import replace

    from .experiments import run_sweep

    spec = load_sweep(args.spec, args)
    spec = replace(spec, workers=args.workers, output_dir=args.out or spec.output_dir or "sweep_out")
    rows, summary = run_sweep(spec)
    for s in summary:
        crb = [f"{v:.4f}" for k, v in s.items() if k.startswith("mean_crb_theta")]
        print(f"{s['series']!s:>8} {s['value']!s:>8}  optimal {s['optimal']}/{s['trials']}  crb {crb}")
    print(f"wrote {spec.output_dir}")
    return EXIT_OK


def cmd_beampattern(args) -> int:
    from .experiments import beampattern_rows, write_csv

    data = np.load(args.solution)
    R = data["R"][args.ap - 1]
    rows = beampattern_rows(R, step_deg=args.step)
    if args.out:
        write_csv(args.out, rows)
    else:
        print("theta_deg,gain_db")
        for r in rows:
            print(f"{r['theta_deg']:.4f},{r['gain_db']:.6f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="secure-isac", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("validate", help="run the oracle / property suite")
    v.add_argument("--json", action="store_true", help="machine-readable report")
    v.set_defaults(func=cmd_validate)

    def scenario_flags(q):
        q.add_argument("--seed", type=int, default=None, help="channel-gain seed")
        q.add_argument("--scale", choices=sorted(SCALES), default=None, help="N=8 (desk) or N=30 (full)")
        q.add_argument("--gamma-db", type=float, default=None, help="common SINR floor [dB]")
        q.add_argument("--psi-db", type=float, default=None, help="eve SNR ceiling [dB]")

    s = sub.add_parser("solve", help="solve one instance and print its dossier")
    s.add_argument("config", nargs="?", default=None, help="scenario TOML (default: two-AP layout)")
    scenario_flags(s)
    s.add_argument("--tol", type=float, default=None)
    s.add_argument("--out", default=None, help="dossier path (default stdout)")
    s.add_argument("--save", default=None, help="store the lifted design as .npz")
    s.add_argument("--drop-sensing", action="store_true", help="remove the dedicated sensing stream")
    s.set_defaults(func=cmd_solve)

    w = sub.add_parser("sweep", help="run a sweep file and write CSVs")
    w.add_argument("spec", help="sweep TOML")
    scenario_flags(w)
    w.add_argument("--workers", type=int, default=1)
    w.add_argument("--out", default=None, help="output directory")
    w.set_defaults(func=cmd_sweep)

    b = sub.add_parser("beampattern", help="AN beampattern of a saved design as CSV")
    b.add_argument("solution", help=".npz written by 'solve --save'")
    b.add_argument("--ap", type=int, default=1, help="AP index (1-based)")
    b.add_argument("--step", type=float, default=0.05, help="grid step [deg]")
    b.add_argument("--out", default=None)
    b.set_defaults(func=cmd_beampattern)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
