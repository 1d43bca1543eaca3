"""Command-line surface: plan, validate, render, sweep, fixtures.

Exit codes: 0 ok, 1 infeasible / planning failure, 2 solver timeout,
3 invalid input.
"""

from __future__ import annotations

import argparse
import json
import shlex
import sys
from pathlib import Path

from .errors import (
    BridgeError,
    BundleError,
    DomainError,
    InfeasibleError,
    PlanningError,
    ScenarioError,
    SolverTimeout,
)
from .executor import efficiency, replay_hypercycles, validate
from .fixtures import BUNDLED, bundled
from .greedy import plan_greedy
from .oneshot import plan_oneshot
from .render import render_svg
from .scenario import (
    Scenario,
    load_bundle,
    load_scenario,
    save_bundle,
    save_scenario,
)
from .smt import SolverConfig
from .sweep import SWEEP_KINDS, run_sweep, write_sweep_outputs
from .twoshot import plan_twoshot, theorem2_condition

EXIT_OK, EXIT_INFEASIBLE, EXIT_TIMEOUT, EXIT_INVALID = 0, 1, 2, 3


def _load_scenario_arg(arg: str) -> Scenario:
    if arg.startswith("fixture:"):
        return bundled(arg.split(":", 1)[1])
    return load_scenario(arg)


def _solver_config(args) -> SolverConfig:
    command = shlex.split(args.solver_cmd) if args.solver_cmd else None
    dump = Path(args.out_dir) / "query.smt2" if args.dump_smt else None
    return SolverConfig(command=command, timeout_secs=args.timeout_secs,
                        dump_path=dump)


def _cmd_plan(args) -> int:
    scenario = _load_scenario_arg(args.scenario)
    config = _solver_config(args)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.algo == "greedy":
        bundle = plan_greedy(scenario)
    elif args.algo == "oneshot":
        bundle = plan_oneshot(scenario, config)
    else:
        bundle, p1 = plan_twoshot(scenario, config)
        p1.save(out_dir / "phase_one.json")
        certified, margins = theorem2_condition(scenario, bundle, p1.residuals)
        print(f"wait-optimality certificate: {'holds' if certified else 'does not hold'} "
              f"(margins {margins})")
    save_bundle(bundle, out_dir / "bundle.json")
    report = efficiency(bundle, scenario)
    (out_dir / "efficiency.json").write_text(
        json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")
    violations = validate(bundle, scenario)
    if violations:
        print(f"WARNING: produced bundle has {len(violations)} violations",
              file=sys.stderr)
    print(f"algo={args.algo} horizon={bundle.horizon} "
          f"extended={bundle.extended_horizon} efficiency={report.efficiency:.1f}% "
          f"wait={report.total_wait} cost={report.recharger_cost}")
    print(f"bundle written to {out_dir / 'bundle.json'}")
    return EXIT_OK


def _cmd_validate(args) -> int:
    scenario = _load_scenario_arg(args.scenario)
    bundle = load_bundle(args.bundle, scenario)
    violations = validate(bundle, scenario)
    report = {
        "ok": not violations,
        "violations": [v.to_dict() for v in violations],
        "replay_3_cycles": replay_hypercycles(bundle, scenario, 3) is None,
    }
    print(json.dumps(report, indent=2))
    return EXIT_OK if not violations else EXIT_INFEASIBLE


def _cmd_render(args) -> int:
    scenario = _load_scenario_arg(args.scenario)
    bundle = load_bundle(args.bundle, scenario) if args.bundle else None
    svg = render_svg(scenario, bundle)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(svg)
    print(f"wrote {out}")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    scenario = _load_scenario_arg(args.scenario)
    config = _solver_config(args)
    values = None
    if args.values:
        raw = [v.strip() for v in args.values.split(",") if v.strip()]
        values = raw if args.kind == "algo-compare" else [int(v) for v in raw]
    rows = run_sweep(args.kind, scenario, values, algo=args.algo, config=config,
                     jobs=args.jobs, seed=args.seed)
    csv_path, svg_path = write_sweep_outputs(
        rows, scenario, config, args.seed, args.kind, Path(args.out_dir))
    for row in rows:
        print(row)
    print(f"wrote {csv_path} and {svg_path}")
    if any(row["status"] == "timeout" for row in rows):
        return EXIT_TIMEOUT
    if all(row["status"] == "infeasible" for row in rows):
        return EXIT_INFEASIBLE
    return EXIT_OK


def _cmd_fixtures(args) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    names = list(BUNDLED) + [f"random20-{args.seed}", f"random30-{args.seed}"]
    for name in names:
        scenario = bundled(name)
        path = out_dir / f"{name.replace('-', '_')}.json"
        save_scenario(scenario, path)
        print(f"wrote {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="loopcharge",
        description="Recharge scheduling and recharger trajectory synthesis "
                    "for loop-bound worker robots",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, scenario=True):
        if scenario:
            p.add_argument("--scenario", required=True,
                           help="scenario JSON path or fixture:<name>")
        p.add_argument("--solver-cmd", default=None,
                       help="solver command reading SMT-LIB 2 on stdin")
        p.add_argument("--timeout-secs", type=float, default=10800.0)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out-dir", default="out")
        p.add_argument("--dump-smt", action="store_true",
                       help="dump emitted SMT-LIB text beside the results")

    p = sub.add_parser("plan", help="synthesize a plan bundle")
    common(p)
    p.add_argument("--algo", choices=["oneshot", "twoshot", "greedy"],
                   default="twoshot")
    p.set_defaults(func=_cmd_plan)

    p = sub.add_parser("validate", help="replay and check a plan bundle")
    p.add_argument("--scenario", required=True)
    p.add_argument("--bundle", required=True)
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("render", help="render scenario (and bundle) to SVG")
    p.add_argument("--scenario", required=True)
    p.add_argument("--bundle", default=None)
    p.add_argument("--out", default="out/plan.svg")
    p.set_defaults(func=_cmd_render)

    p = sub.add_parser("sweep", help="run an experiment sweep")
    common(p)
    p.add_argument("--kind", choices=list(SWEEP_KINDS), required=True)
    p.add_argument("--values", default=None,
                   help="comma-separated sweep values (defaults per kind)")
    p.add_argument("--algo", choices=["oneshot", "twoshot", "greedy"],
                   default="twoshot")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("fixtures", help="materialize bundled fixture scenarios")
    p.add_argument("--out-dir", default="fixtures")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_fixtures)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ScenarioError, BundleError, DomainError, ValueError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (InfeasibleError, PlanningError) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except SolverTimeout as exc:
        print(f"timeout: {exc}", file=sys.stderr)
        return EXIT_TIMEOUT
    except BridgeError as exc:
        print(f"solver bridge error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
