"""Command-line harness.

Exit codes: 0 success, 2 infeasible, 3 time limit with an incumbent,
4 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .bench import (
    ALGORITHMS,
    GeneratorConfig,
    UsageError,
    e3s_like,
    generate,
    genome_like,
    report_rows,
    run,
    sweep,
)
from .graph import CONTINUOUS, DISCRETE, InvalidInstanceError, TaskGraph, validate
from .instance_io import (
    InstanceFormatError,
    instance_to_dict,
    load_instance,
    load_schedule_dict,
    save_instance,
    schedule_to_dict,
)
from .optim.lpfile import export_model
from .scheduling import Schedule, validate_schedule

EXIT_OK = 0
EXIT_INFEASIBLE = 2
EXIT_TIME_LIMIT = 3
EXIT_USAGE = 4


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse default exits with 2
        raise UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="dagspeed", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="run one algorithm on an instance file")
    p_solve.add_argument("--instance", required=True)
    p_solve.add_argument("--algo", required=True, choices=sorted(ALGORITHMS))
    p_solve.add_argument("--cores", type=int, default=None)
    p_solve.add_argument("--budget", type=float, default=5.0)
    p_solve.add_argument("--baseline", choices=["continuous", "discrete"], default="continuous")
    p_solve.add_argument("--out", default=None, help="write report + solution JSON here")

    p_gen = sub.add_parser("generate", help="write a synthetic instance file")
    p_gen.add_argument("--family", default="sp-random",
                       choices=["sp-random", "layered-dag", "chain", "independent"])
    p_gen.add_argument("--n", type=int, required=True)
    p_gen.add_argument("--seed", type=int, required=True)
    p_gen.add_argument("--preset", choices=["e3s", "genome"], default=None)
    p_gen.add_argument("--slack", type=float, default=2.0)
    p_gen.add_argument("--kind", choices=[CONTINUOUS, DISCRETE], default=DISCRETE)
    p_gen.add_argument("--levels", type=int, default=20)
    p_gen.add_argument("--speed-min", type=float, default=0.5)
    p_gen.add_argument("--speed-max", type=float, default=2.0)
    p_gen.add_argument("--weight-lo", type=float, default=0.5)
    p_gen.add_argument("--weight-hi", type=float, default=2.0)
    p_gen.add_argument("--alpha", type=float, default=3.0)
    p_gen.add_argument("--density", type=float, default=0.3)
    p_gen.add_argument("--out", required=True)

    p_sweep = sub.add_parser("sweep", help="run a benchmark grid into a CSV")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--out", required=True)

    p_val = sub.add_parser("validate", help="check a schedule file against an instance")
    p_val.add_argument("--instance", required=True)
    p_val.add_argument("--schedule", required=True)

    p_lp = sub.add_parser("export-lp", help="write the instance's integer model as LP")
    p_lp.add_argument("--instance", required=True)
    p_lp.add_argument("--model", choices=["auto", "speed", "sched"], default="auto")
    p_lp.add_argument("--out", required=True)
    return parser


def _load(path: str) -> TaskGraph:
    graph = load_instance(path)
    violations = validate(graph)
    if violations:
        raise UsageError(
            "invalid instance: " + "; ".join(str(v) for v in violations)
        )
    return graph


def _cmd_solve(args) -> int:
    graph = _load(args.instance)
    outcome = run(
        graph,
        args.algo,
        cores=args.cores,
        budget=args.budget,
        baseline=args.baseline,
        instance_id=Path(args.instance).stem,
        repeat_fast_timing=False,
    )
    r = outcome.report
    norm = "n/a" if r.normalized_energy is None else f"{r.normalized_energy:.6g}"
    energy = "n/a" if r.energy is None else f"{r.energy:.6g}"
    print(
        f"{r.algorithm} on {r.instance}: status={r.status} energy={energy} "
        f"normalized={norm} wall={r.wall_time_ms:.3f}ms"
    )
    if args.out:
        doc: dict = {"report": r.__dict__.copy()}
        doc["report"]["flags"] = list(r.flags)
        if outcome.schedule is not None:
            doc["solution"] = {"kind": "schedule", **schedule_to_dict(outcome.schedule)}
        elif outcome.assignment is not None:
            a = outcome.assignment
            doc["solution"] = {
                "kind": "speeds",
                "tasks": {
                    tid: {"speed": float(s)} for tid, s in zip(a.task_ids, a.speeds)
                },
                "total_energy": a.total_energy,
            }
        Path(args.out).write_text(json.dumps(doc, indent=2, default=str) + "\n", encoding="utf-8")
    if r.status in ("infeasible",):
        return EXIT_INFEASIBLE
    if r.status in ("time_limit",):
        return EXIT_TIME_LIMIT if r.energy is not None else EXIT_INFEASIBLE
    if r.status in ("numerical_failure",):
        return EXIT_INFEASIBLE
    return EXIT_OK


def _cmd_generate(args) -> int:
    if args.preset == "e3s":
        cfg = e3s_like(args.seed, args.n, args.family)
    elif args.preset == "genome":
        cfg = genome_like(args.seed, args.n, args.family)
    else:
        cfg = GeneratorConfig(
            family=args.family, n=args.n, seed=args.seed,
            weight_lo=args.weight_lo, weight_hi=args.weight_hi,
            slack=args.slack, speed_kind=args.kind, level_count=args.levels,
            speed_min=args.speed_min, speed_max=args.speed_max,
            alpha=args.alpha, density=args.density,
        )
    graph = generate(cfg)
    save_instance(graph, args.out)
    print(f"wrote {args.out}: {graph.n} tasks, {len(graph.edges)} edges, deadline {graph.deadline:.6g}")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    try:
        config = json.loads(Path(args.config).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read sweep config: {exc}") from exc
    reports = sweep(config, csv_path=args.out)
    print(f"wrote {args.out}: {len(reports)} rows")
    return EXIT_OK


def _cmd_validate(args) -> int:
    graph = _load(args.instance)
    doc = load_schedule_dict(args.schedule)
    ids = tuple(t.id for t in graph.tasks)
    entries = doc["tasks"]
    missing = [tid for tid in ids if tid not in entries]
    if missing:
        raise UsageError(f"schedule is missing tasks: {missing}")
    schedule = Schedule(
        ids,
        np.array([int(entries[tid]["core"]) for tid in ids]),
        np.array([float(entries[tid]["start"]) for tid in ids]),
        np.array([float(entries[tid]["speed"]) for tid in ids]),
        graph.weights.copy(),
        graph.speed_model.alpha,
    )
    violations = validate_schedule(graph, schedule)
    if violations:
        for v in violations:
            print(v)
        return EXIT_INFEASIBLE
    print(f"schedule is valid: makespan {schedule.makespan:.6g}, energy {schedule.total_energy:.6g}")
    return EXIT_OK


def _cmd_export_lp(args) -> int:
    graph = _load(args.instance)
    export_model(graph, args.out, model=args.model)
    print(f"wrote {args.out}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "solve":
            return _cmd_solve(args)
        if args.command == "generate":
            return _cmd_generate(args)
        if args.command == "sweep":
            return _cmd_sweep(args)
        if args.command == "validate":
            return _cmd_validate(args)
        if args.command == "export-lp":
            return _cmd_export_lp(args)
        raise UsageError(f"unknown command {args.command!r}")
    except (UsageError, InstanceFormatError, InvalidInstanceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    sys.exit(main())
