"""Command line entry point: ``monoinclusion {run,table,suite,check}``."""

import argparse
import json
import logging
import sys
import time
from dataclasses import fields, replace
from pathlib import Path

import numpy as np

from ..solvers import ALGORITHMS, InvariantError, RunAborted
from .registry import INERTIA_KINDS, PROBLEMS, ExperimentConfig, run_experiment
from .tables import TABLES, make_table
from .traces import emit_trace

log = logging.getLogger("monoinclusion")

_CONFIG_KEYS = {f.name for f in fields(ExperimentConfig)} - {"extra"}


def _x0_arg(text):
    return text


def _add_run_flags(p):
    # defaults are None so a --config file can fill them; flags win
    p.add_argument("--config", help="JSON file with ExperimentConfig fields")
    p.add_argument("--problem", dest="problem_id", choices=PROBLEMS)
    p.add_argument("--algorithm", dest="algorithm_id", choices=ALGORITHMS)
    p.add_argument("--max-iters", dest="max_iters", type=int)
    p.add_argument("--x0", type=_x0_arg,
                   help="comma-separated coordinates or a preset (ones, zeros)")
    p.add_argument("--gamma0", type=float)
    p.add_argument("--mu", type=float)
    p.add_argument("--inertia", choices=INERTIA_KINDS)
    p.add_argument("--alpha", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--tol", type=float, help="stop once |w_n - y_n| < tol")
    p.add_argument("--checked", dest="checked_mode", action="store_true", default=None)
    p.add_argument("--unchecked", dest="checked_mode", action="store_false")


def _experiment_from_args(args):
    values = {}
    if args.config:
        with open(args.config) as fh:
            values = json.load(fh)
        unknown = set(values) - _CONFIG_KEYS
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")
    for key in _CONFIG_KEYS:
        v = getattr(args, key, None)
        if v is not None:
            values[key] = v
    return ExperimentConfig(**values)


def summarize(cfg, trace, wall_ms):
    last = trace[-1] if trace else None
    return {
        "config": cfg.to_dict(),
        "final_err_obj": None if last is None else last.err_obj,
        "final_err_x": None if last is None else last.err_x,
        "iterations": len(trace),
        "wall_ms": None if cfg.checked_mode else wall_ms,
    }


def cmd_run(args):
    if args.out:
        args.output_path = args.out
    cfg = _experiment_from_args(args)
    t0 = time.perf_counter()
    _, trace = run_experiment(cfg)
    wall = (time.perf_counter() - t0) * 1e3
    if cfg.output_path:
        emit_trace(trace, cfg.output_path)
    print(json.dumps(summarize(cfg, trace, wall), indent=2))
    return 0


def cmd_table(args):
    table = make_table(TABLES[args.which])
    print(table.format())
    if args.json:
        Path(args.json).write_text(json.dumps(table.to_json(), indent=2) + "\n")
    return 0


def suite_experiments():
    """The acceptance experiments, in a fixed order."""
    out = []
    for alg in ("ihpa", "ispa", "mttm", "vttm", "tseng", "lpfb"):
        out.append((f"example1_{alg}", ExperimentConfig(
            problem_id="example1", algorithm_id=alg, max_iters=100, x0="ones")))
    for alg in ("tseng", "lpfb"):
        out.append((f"example2_{alg}", ExperimentConfig(
            problem_id="example2", algorithm_id=alg, max_iters=200, x0="zeros")))
    for seed in range(3):
        for alg in ("ihpa", "ispa"):
            out.append((f"random{seed}_{alg}", ExperimentConfig(
                problem_id="random-quadratic-l1", algorithm_id=alg, max_iters=200,
                seed=seed, x0="zeros")))
    return out


def cmd_suite(args):
    out = Path(args.out_dir)
    (out / "traces").mkdir(parents=True, exist_ok=True)
    summary = []
    for name, cfg in suite_experiments():
        # paths in the summary are relative to out_dir so reruns compare byte-for-byte
        cfg = replace(cfg, output_path=f"traces/{name}.csv")
        t0 = time.perf_counter()
        _, trace = run_experiment(cfg)
        emit_trace(trace, out / cfg.output_path)
        summary.append(summarize(cfg, trace, (time.perf_counter() - t0) * 1e3))
        log.info("%s: %d iterations", name, len(trace))
    for which, spec in TABLES.items():
        table = make_table(spec)
        for (i, alg), trace in sorted(table.traces.items()):
            path = f"traces/{which}_start{i}_{alg}.csv"
            cfg = ExperimentConfig(problem_id="example2", algorithm_id=alg,
                                   max_iters=spec.max_iters, x0=list(spec.start_points[i]),
                                   output_path=path)
            emit_trace(trace, out / path)
            summary.append(summarize(cfg, trace, None))
        (out / f"{which}.json").write_text(json.dumps(table.to_json(), indent=2) + "\n")
        (out / f"{which}.txt").write_text(table.format() + "\n")
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    print(f"wrote {len(summary)} experiments to {out}")
    return 0


def cmd_check(args):
    cases = [("example1", 0, "ones"), ("example2", 0, None)]
    cases += [("random-quadratic-l1", seed, "zeros")
              for seed in range(args.seed, args.seed + args.instances)]
    failures = 0
    for problem_id, seed, x0 in cases:
        for alg in ("ihpa", "ispa"):
            cfg = ExperimentConfig(problem_id=problem_id, algorithm_id=alg,
                                   max_iters=args.iters, seed=seed, x0=x0)
            try:
                run_experiment(cfg)
                status = "ok"
            except RunAborted as exc:
                if not isinstance(exc.__cause__, InvariantError):
                    raise
                failures += 1
                status = f"VIOLATION: {exc.__cause__}"
            print(f"{problem_id}[{seed}] {alg}: {status}")
    print(f"{failures} violation(s)")
    return 1 if failures else 0


def build_parser():
    parser = argparse.ArgumentParser(prog="monoinclusion", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one experiment and write its trace CSV")
    _add_run_flags(p)
    p.add_argument("--out", help="trace CSV path")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("table", help="regenerate a function-value error table")
    p.add_argument("--which", choices=sorted(TABLES), default="table1")
    p.add_argument("--json", help="also write the table as JSON")
    p.set_defaults(func=cmd_table)

    p = sub.add_parser("suite", help="run all acceptance experiments")
    p.add_argument("--out-dir", default="suite-output")
    p.set_defaults(func=cmd_suite)

    p = sub.add_parser("check", help="checked-mode invariant runs over random instances")
    p.add_argument("--instances", type=int, default=20)
    p.add_argument("--iters", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_check)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse: usage error (2) or --help (0)
        return exc.code
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ValueError, KeyError) as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (RunAborted, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
