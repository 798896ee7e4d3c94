"""Command line entry point: ``mdvrp solve`` and ``mdvrp bench``."""
from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path

from . import bench
from .engine import Termination
from .instance import ParseError, load, validate

log = logging.getLogger("mdvrp")


def _termination(args, wall_default: float) -> Termination:
    limit = bench.parse_duration(args.time_limit) if args.time_limit else wall_default
    return Termination(stagnation_iterations=args.stagnation, wall_clock_limit=limit)


def _params(args, algorithm: str):
    if not args.params:
        return None
    return bench.parse_params(Path(args.params).read_text(encoding="utf-8"), algorithm)


def _load_checked(path: Path):
    inst = load(path)
    problems = validate(inst)
    if problems:
        raise ParseError(f"{path}: " + "; ".join(problems))
    return inst


def _instance_paths(target: Path) -> list[Path]:
    if target.is_file():
        return [target]
    if not target.is_dir():
        raise FileNotFoundError(f"no such instance file or directory: {target}")
    paths = sorted(p for p in target.iterdir() if p.is_file() and not p.name.startswith("."))
    if not paths:
        raise FileNotFoundError(f"no instance files in {target}")
    return paths


def cmd_solve(args) -> int:
    inst = _load_checked(Path(args.instance))
    rec = bench.run_one(inst, args.algorithm, _params(args, args.algorithm),
                        _termination(args, math.inf if args.stagnation else bench.DEFAULT_WALL_CLOCK), args.seed)
    if rec.solution_text:
        sys.stdout.write(rec.solution_text)
    status = "feasible" if rec.feasible else "INFEASIBLE"
    print(f"# {inst.name} {args.algorithm} seed={args.seed} cost={rec.best_cost:.2f} "
          f"time={rec.elapsed:.1f}s stop={rec.terminated_by} {status}")
    if rec.diagnostics:
        print(f"# {rec.diagnostics}", file=sys.stderr)
    return 0 if rec.feasible else 1


def cmd_bench(args) -> int:
    algorithms = [a.strip() for a in args.algorithm.split(",") if a.strip()]
    paths = _instance_paths(Path(args.instances))
    known = bench.bks_table()
    for p in paths:  # fail fast on bad input before any run starts
        inst = _load_checked(p)
        if inst.name not in known:
            raise KeyError(f"{p}: no best-known cost for instance {inst.name!r}; expected Cordeau names p01-p23")
    params = _params(args, algorithms[0]) if args.params else None
    if params is not None and len(algorithms) > 1:
        raise ValueError("--params needs a single --algorithm")
    seeds = [int(s) for s in args.seeds.split(",")] if args.seeds else bench.default_seeds(args.runs)
    journal = bench.Journal(args.out)
    records = bench.run_experiment(
        paths, algorithms, params, _termination(args, bench.DEFAULT_WALL_CLOCK),
        seeds, args.parallel, on_record=_progress(journal),
    )
    report = bench.summarize(records)
    written = bench.emit(report, args.out)
    journal.close()
    sys.stdout.write(bench.table_text(report))
    print(f"# wrote {', '.join(str(p) for p in written.values())}")
    failed = [r for r in records if not r.feasible]
    for r in failed:
        print(f"# FAILED {r.instance} {r.algorithm} seed={r.seed}: {r.diagnostics}", file=sys.stderr)
    return 1 if failed else 0


def _progress(journal):
    def on_record(rec):
        journal(rec)
        log.info("%s %s seed=%d cost=%.2f %.1fs %s", rec.instance, rec.algorithm, rec.seed,
                 rec.best_cost, rec.elapsed, rec.terminated_by)
    return on_record


def _budget_flags(p):
    p.add_argument("--params", help="key=value parameter file")
    p.add_argument("--time-limit", help="wall-clock limit per run, e.g. 90s, 10m, 1h (default 1h)")
    p.add_argument("--stagnation", type=int, help="iterations without improvement before stopping "
                                                  "(default: the engine's n_i)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mdvrp", description="Multi-depot vehicle routing solvers.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="solve one instance and print the routes")
    s.add_argument("--instance", required=True, help="Cordeau-format instance file")
    s.add_argument("--algorithm", required=True, choices=sorted(bench.ENGINES))
    s.add_argument("--seed", type=int, default=1)
    _budget_flags(s)
    s.set_defaults(func=cmd_solve)

    b = sub.add_parser("bench", help="run a seeded campaign and write results/summary tables")
    b.add_argument("--instances", required=True, help="directory of instance files (or a single file)")
    b.add_argument("--algorithm", required=True, help="aco, ica, hybrid, or a comma-separated list")
    b.add_argument("--runs", type=int, default=10, help="seeds 1..runs (default 10)")
    b.add_argument("--seeds", help="explicit comma-separated seeds, overrides --runs")
    b.add_argument("--parallel", type=int, default=1, help="concurrent runs (default 1)")
    b.add_argument("--out", required=True, help="output directory")
    _budget_flags(b)
    b.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(message)s", stream=sys.stderr)
    if args.command == "bench":
        for a in args.algorithm.split(","):
            if a.strip() and a.strip() not in bench.ENGINES:
                parser.error(f"unknown algorithm {a.strip()!r}")
    try:
        return args.func(args)
    except (ParseError, ValueError, OSError, KeyError) as exc:
        print(f"mdvrp: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
