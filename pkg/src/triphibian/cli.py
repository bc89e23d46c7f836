"""Command-line entry point.

Exit codes: 0 success, 2 validation failure, 3 integration divergence,
4 rejected transition in strict mode.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .allocation import Mode, MotionCommand, allocate
from .errors import AllocationError, DomainError, IntegrationDiverged, ScenarioError
from .fsm import graph_json
from .model import load_params
from .reports import hover_trim, morph_sweep_csv, render_allocation_table
from .scenario import load_scenario, validate
from .sim import run

EXIT_OK, EXIT_INVALID, EXIT_DIVERGED, EXIT_REJECTED = 0, 2, 3, 4


def _run_one(path: Path, out: Path | None, seed, strict: bool, report_path: Path | None):
    """Run one scenario file; returns (exit code, message)."""
    try:
        sc = load_scenario(path)
    except ScenarioError as exc:
        return EXIT_INVALID, "\n".join(exc.errors)
    try:
        report, _ = run(sc, telemetry_path=out, seed=seed)
    except ScenarioError as exc:
        return EXIT_INVALID, "\n".join(exc.errors)
    except IntegrationDiverged as exc:
        return EXIT_DIVERGED, f"diverged: {exc} (last good t={exc.last_good_time})"
    doc = report.to_dict()
    if report_path is not None:
        report_path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    msg = json.dumps(doc, indent=2, sort_keys=True)
    if (strict or sc.strict) and report.rejected:
        return EXIT_REJECTED, msg
    return EXIT_OK, msg


def cmd_run(args) -> int:
    code, msg = _run_one(Path(args.scenario), Path(args.output) if args.output else None,
                         args.seed, args.strict, Path(args.report) if args.report else None)
    print(msg, file=sys.stderr if code == EXIT_INVALID else sys.stdout)
    return code


def cmd_validate(args) -> int:
    try:
        sc = load_scenario(args.scenario)
    except ScenarioError as exc:
        errors = exc.errors
    else:
        errors = validate(sc)
    for e in errors:
        print(e)
    if not errors:
        print("ok")
    return EXIT_INVALID if errors else EXIT_OK


def cmd_trim(args) -> int:
    print(hover_trim(load_params(args.params)).render(), end="")
    return EXIT_OK


def cmd_allocate_table(args) -> int:
    print(render_allocation_table(), end="")
    return EXIT_OK


def cmd_allocate(args) -> int:
    try:
        act = allocate(MotionCommand(args.mode, args.op, args.magnitude))
    except (AllocationError, DomainError, ValueError) as exc:
        print(exc, file=sys.stderr)
        return EXIT_INVALID
    print(json.dumps({
        "throttle": list(act.throttle),
        "transition_servo": act.transition_servo,
        "tail_trim": act.tail_trim,
        "pattern": list(act.pattern()),
    }))
    return EXIT_OK


def cmd_morph_sweep(args) -> int:
    print(morph_sweep_csv(load_params(args.params), args.steps), end="")
    return EXIT_OK


def cmd_graph(args) -> int:
    print(graph_json())
    return EXIT_OK


def cmd_batch(args) -> int:
    files = sorted(Path(args.directory).glob("*.toml"))
    out_dir = Path(args.output_dir) if args.output_dir else None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)

    def job(path):
        out = out_dir / f"{path.stem}.csv" if out_dir else None
        return path, _run_one(path, out, args.seed, args.strict, None)

    worst = EXIT_OK
    with ThreadPoolExecutor(max_workers=args.jobs) as pool:
        for path, (code, msg) in pool.map(job, files):
            status = "ok" if code == EXIT_OK else f"exit {code}"
            print(f"{path.name}: {status}")
            if code != EXIT_OK:
                print(msg, file=sys.stderr)
            worst = max(worst, code)
    return worst


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="triphibian", description=__doc__.splitlines()[0])
    p.add_argument("--seed", type=int, default=None,
                   help="recorded in the run header; the model itself is deterministic")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a scenario and write telemetry")
    r.add_argument("scenario")
    r.add_argument("-o", "--output", help="telemetry path (overrides the scenario's)")
    r.add_argument("--report", help="write the run report as JSON here")
    r.add_argument("--strict", action="store_true", help="exit 4 if any transition was rejected")
    r.set_defaults(func=cmd_run)

    v = sub.add_parser("validate", help="check a scenario without running it")
    v.add_argument("scenario")
    v.set_defaults(func=cmd_validate)

    t = sub.add_parser("trim", help="hover thrust budget")
    t.add_argument("--params", help="parameter file (default: $TRIPHIBIAN_PARAMS or packaged nominal)")
    t.set_defaults(func=cmd_trim)

    a = sub.add_parser("allocate-table", help="print the actuation pattern table")
    a.set_defaults(func=cmd_allocate_table)

    al = sub.add_parser("allocate", help="allocate one motion command")
    al.add_argument("mode", choices=[m.value for m in Mode])
    al.add_argument("op")
    al.add_argument("magnitude", type=float, nargs="?", default=1.0)
    al.set_defaults(func=cmd_allocate)

    m = sub.add_parser("morph-sweep", help="per-fan pose versus deployment fraction as CSV")
    m.add_argument("--steps", type=int, default=100)
    m.add_argument("--params")
    m.set_defaults(func=cmd_morph_sweep)

    g = sub.add_parser("graph", help="transition graph adjacency as JSON")
    g.set_defaults(func=cmd_graph)

    b = sub.add_parser("batch", help="run every scenario in a directory")
    b.add_argument("directory")
    b.add_argument("--output-dir")
    b.add_argument("--jobs", type=int, default=4)
    b.add_argument("--strict", action="store_true")
    b.set_defaults(func=cmd_batch)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
