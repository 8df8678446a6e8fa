"""Command line front end.

Three subcommands:

  verify        run one scenario, emit the JSON report
  sweep         rerun a scenario across a parameter grid, emit CSV
  list-presets  show the built-in scenarios

Exit codes: 0 when every check passed, 1 when at least one check failed,
2 for configuration problems (bad scenario file, unknown preset, invalid
flag combinations).
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from typing import Optional

from .errors import ScenarioError
from .harness import (
    SCENARIO_PRESETS,
    Scenario,
    load_scenario,
    preset_description,
    run_scenario,
    sweep,
    sweep_to_csv,
)

__all__ = ["main", "build_parser"]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cotlift",
        description="Verify lifted Kaehler structures on the cotangent "
                    "bundle of a constant-curvature base against "
                    "finite-difference oracles.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_scenario_flags(p):
        p.add_argument("--scenario", required=True,
                       help="preset name or path to a scenario JSON file")
        p.add_argument("--seed", type=int, default=None,
                       help="override the sampling seed")
        p.add_argument("--samples", type=int, default=None, metavar="K",
                       help="override points per t value")
        p.add_argument("--t-min", type=float, default=None, dest="t_min")
        p.add_argument("--t-max", type=float, default=None, dest="t_max")
        p.add_argument("--rho", type=float, default=None,
                       help="override the Einstein constant")
        p.add_argument("--branch", choices=["+", "-"], default=None,
                       help="override the case-2 branch")

    pv = sub.add_parser("verify", help="run one scenario end to end")
    add_scenario_flags(pv)
    pv.add_argument("--out", default=None,
                    help="write the JSON report here instead of stdout")

    ps = sub.add_parser("sweep", help="rerun a scenario over a grid")
    add_scenario_flags(ps)
    ps.add_argument("--vary", required=True,
                    choices=["c", "rho", "t_max", "branch"])
    ps.add_argument("--grid", required=True,
                    help="comma-separated values for the varied parameter")
    ps.add_argument("--out", default=None,
                    help="write the CSV table here instead of stdout")
    ps.add_argument("--plot", action="store_true",
                    help="also render the table to a PNG next to the CSV")

    sub.add_parser("list-presets", help="show built-in scenarios")
    return parser


def _scenario_from_args(args) -> Scenario:
    s = load_scenario(args.scenario)
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.samples is not None:
        overrides["points_per_t"] = args.samples
    if args.t_min is not None:
        overrides["t_min"] = args.t_min
    if args.t_max is not None:
        overrides["t_max"] = args.t_max
    if args.rho is not None:
        overrides["rho"] = args.rho
    if args.branch is not None:
        if not s.lam_rule.startswith("case2"):
            raise ScenarioError(
                f"--branch only applies to case2 scenarios, not {s.lam_rule!r}")
        overrides["lam_rule"] = "case2" + args.branch
    if overrides:
        s = dataclasses.replace(s, **overrides)
    s.validate()
    return s


def _cmd_verify(args) -> int:
    s = _scenario_from_args(args)
    report = run_scenario(s)
    payload = report.json_bytes()
    if args.out:
        with open(args.out, "wb") as fh:
            fh.write(payload)
        for rec in report.checks:
            tag = "PASS" if rec["pass"] else "FAIL"
            print(f"[{tag}] {rec['name']:26s} max={rec['max_residual']:.3e} "
                  f"tol={rec['tolerance']:.0e}")
        print(f"report written to {args.out}")
    else:
        sys.stdout.write(payload.decode())
    return 0 if report.passed else 1


def _parse_grid(vary: str, text: str):
    items = [tok.strip() for tok in text.split(",") if tok.strip()]
    if not items:
        raise ScenarioError("--grid is empty")
    if vary == "branch":
        return items
    try:
        return [float(tok) for tok in items]
    except ValueError:
        raise ScenarioError(f"--grid for {vary} needs numbers, got {text!r}")


def _cmd_sweep(args) -> int:
    s = _scenario_from_args(args)
    grid = _parse_grid(args.vary, args.grid)
    rows = sweep(s, args.vary, grid)
    text = sweep_to_csv(rows)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
        print(f"table written to {args.out}")
    else:
        sys.stdout.write(text)
    if args.plot:
        from .plotting import render_sweep
        if args.out:
            stem = args.out.rsplit(".", 1)[0]
        else:
            stem = f"sweep-{s.name}-{args.vary}"
        png = render_sweep(rows, stem + ".png",
                           title=f"{s.name}: sweep over {args.vary}")
        print(f"figure written to {png}")
    return 0 if all(row.get("passed") for row in rows) else 1


def _cmd_list_presets() -> int:
    width = max(len(name) for name in SCENARIO_PRESETS)
    for name in sorted(SCENARIO_PRESETS):
        print(f"{name:<{width}s}  {preset_description(name)}")
    return 0


def main(argv: Optional[list] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "verify":
            return _cmd_verify(args)
        if args.command == "sweep":
            return _cmd_sweep(args)
        return _cmd_list_presets()
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
