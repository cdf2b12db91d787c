"""Command line entry point: ``hstdelay <subcommand> ...``.

Exit status is 0 when every asserted bound and check holds, 1 when any of
them fails and 2 on bad input.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import fileformat as ff
from .generate import KINDS, PROFILES, generate
from .oracle import OracleRefusal, opt_fl_deadline_exact, opt_grid
from .pipeline import ALGORITHMS, PROBLEM_OF, embed_instance, run_algorithm
from .preflow import PreflowError, build_fl_deadline_preflow, graph_dump, verify_charging_bounds
from .report import RunReport, build_report, write_csv
from .requests import Instance, InstanceError

AUTO_FEAS_MAX_REQUESTS = 8


def _write(path, text: str) -> None:
    if path is None or str(path) == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _emit_reports(reports: list[RunReport], fmt: str, out) -> None:
    if fmt == "json":
        _write(out, json.dumps([r.row() for r in reports], indent=1) + "\n")
    else:
        _write(out, write_csv(reports))


def offline_solution(instance: Instance, mode: str, refine: int = 1):
    """Offline comparator for ``instance`` (a tree instance for mad/osd)."""
    if mode == "none":
        return None
    if mode == "auto":
        if len(instance.requests) > AUTO_FEAS_MAX_REQUESTS:
            return None
        try:
            return offline_solution(instance, "exact" if instance.problem == "fl-deadline" else "grid", refine)
        except OracleRefusal:
            return None
    if mode == "exact":
        if instance.problem != "fl-deadline":
            raise InstanceError("the exact oracle covers fl-deadline only; use --mode grid")
        return opt_fl_deadline_exact(instance)
    if instance.problem in ("mad", "osd") and instance.tree is None:
        raise InstanceError(f"the {instance.problem} grid oracle needs a tree instance; run `embed` first")
    return opt_grid(instance, refine=refine)


def run_one(instance: Instance, algorithm: str, seed: int, feas_mode: str = "none", refine: int = 1,
            instance_id: str | None = None, master_seed: int | None = None, trial_seed: int | None = None,
            solution=None):
    """Run, account and bound one trial; returns (report, trace)."""
    result = run_algorithm(instance, algorithm, seed)
    feas = solution if solution is not None else offline_solution(result.instance, feas_mode, refine)
    report = build_report(result, instance, feas=feas, instance_id=instance_id or instance.name,
                          master_seed=master_seed, trial_seed=trial_seed)
    return report, result.trace


def _bench_trial(job):
    args, i = job
    trial_seed = args["master"] ^ i
    if args["instance"] is not None:
        instance = ff.load_instance(args["instance"])
        name = f"{instance.name}#{i}"
    else:
        instance, _ = generate(args["kind"], PROBLEM_OF[args["algo"]], args["n"], args["requests"], trial_seed,
                               args["profile"])
        name = instance.name
    report, trace = run_one(instance, args["algo"], trial_seed, args["feas"], args["refine"],
                            instance_id=name, master_seed=args["master"], trial_seed=trial_seed)
    return report, ff.dumps(ff.trace_to_json(trace))


# -- subcommands -----------------------------------------------------------


def cmd_gen(a) -> int:
    problem = a.problem or PROBLEM_OF[a.algo]
    inst, block = generate(a.kind, problem, a.n, a.requests, a.seed, a.profile, name=a.name)
    _write(a.out, ff.dumps(ff.instance_to_json(inst, block)))
    return 0


def cmd_embed(a) -> int:
    inst = ff.load_instance(a.instance)
    hosted = embed_instance(inst, a.seed).instance
    _write(a.out, ff.dumps(ff.instance_to_json(hosted)))
    return 0


def cmd_run(a) -> int:
    inst = ff.load_instance(a.instance)
    solution = None
    if a.solution:
        if inst.tree is None:
            raise InstanceError("--solution needs a tree instance (offline costs are compared on the same tree)")
        solution = ff.solution_from_json(json.loads(Path(a.solution).read_text()))
    report, trace = run_one(inst, a.algo, a.seed, a.feas, a.grid_refine, instance_id=a.instance_id,
                            trial_seed=a.seed, solution=solution)
    if a.trace:
        _write(a.trace, ff.dumps(ff.trace_to_json(trace)))
    _emit_reports([report], a.format, a.out)
    for err in report.errors:
        print(f"accountant: {err}", file=sys.stderr)
    return 0 if report.ok else 1


def cmd_oracle(a) -> int:
    inst = ff.load_instance(a.instance)
    sol = offline_solution(inst, a.mode, a.grid_refine)
    _write(a.out, ff.dumps(ff.solution_to_json(sol)))
    return 0


def cmd_verify_preflow(a) -> int:
    inst = ff.load_instance(a.instance)
    if inst.tree is None:
        raise InstanceError("verify-preflow needs a tree instance; run `embed` first")
    if a.trace:
        trace = ff.trace_from_json(json.loads(Path(a.trace).read_text()))
        tree = inst.tree
    else:
        result = run_algorithm(inst, inst.problem, a.seed)
        if getattr(result.run, "pieces", 1) > 1:
            raise PreflowError("this instance has edges heavier than f/2 and runs in pieces; the charging graph "
                               "assumes w(e) <= f along every root-leaf path")
        trace, tree = result.trace, result.tree
    if a.solution:
        offline = ff.solution_from_json(json.loads(Path(a.solution).read_text()))
    else:
        offline = opt_fl_deadline_exact(inst) if inst.problem == "fl-deadline" else opt_grid(inst, refine=a.grid_refine)
    build = build_fl_deadline_preflow(inst, trace, offline, experimental=a.experimental)
    report = verify_charging_bounds(build, offline, trace.k, inst.f, tree)
    for name, ok in report.checks.items():
        print(f"{name}: {'ok' if ok else 'FAIL'}")
    for name, value in report.values.items():
        print(f"{name} = {ff.q(value)}")
    if a.dump:
        _write(a.dump, json.dumps(graph_dump(build), indent=1, sort_keys=True) + "\n")
    return 0 if report.ok else 1


def cmd_bench(a) -> int:
    if a.instance is None and a.kind is None:
        raise InstanceError("bench needs --instance or --kind")
    job = {"master": a.seed, "instance": a.instance, "kind": a.kind, "algo": a.algo, "n": a.n,
           "requests": a.requests, "profile": a.profile, "feas": a.feas, "refine": a.grid_refine}
    jobs = [(job, i) for i in range(a.trials)]
    if a.jobs > 1:
        with ProcessPoolExecutor(max_workers=a.jobs) as pool:
            results = list(pool.map(_bench_trial, jobs))
    else:
        results = [_bench_trial(j) for j in jobs]
    reports = [r for r, _ in results]
    if a.trace_dir:
        out_dir = Path(a.trace_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        for i, (_, text) in enumerate(results):
            (out_dir / f"trial-{i:04d}.trace.json").write_text(text)
    _emit_reports(reports, a.format, a.out)
    if a.out and a.out != "-" and not a.no_figures:
        from .plotting import render_bench_figures

        out = Path(a.out)
        render_bench_figures(reports, out.with_suffix(""))
    failed = [r for r in reports if not r.ok]
    for r in failed:
        bad = [b.name for b in r.bounds if not b.ok] + [k for k, v in r.checks.items() if not v]
        if not r.accountant_agrees:
            bad.append("accountant")
        print(f"trial {r.trial_seed}: failed {', '.join(bad)}", file=sys.stderr)
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hstdelay", description="Online deadline/delay algorithms on trees and metrics.")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a seeded random instance")
    g.add_argument("--kind", choices=KINDS, required=True)
    g.add_argument("--problem", choices=sorted(set(PROBLEM_OF.values())))
    g.add_argument("--algo", choices=ALGORITHMS, default="fl-deadline", help="pick the problem from an algorithm")
    g.add_argument("--n", type=int, default=8, help="points (euclidean) or leaves (trees)")
    g.add_argument("--requests", type=int, default=10)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--profile", choices=PROFILES, required=True)
    g.add_argument("--name")
    g.add_argument("--out")
    g.set_defaults(func=cmd_gen)

    e = sub.add_parser("embed", help="re-host a metric instance on a random dominating tree")
    e.add_argument("--instance", required=True)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--out")
    e.set_defaults(func=cmd_embed)

    feas_help = "offline comparator: none, exact (fl-deadline), grid, or auto (small instances only)"

    r = sub.add_parser("run", help="run one algorithm and report its bounds")
    r.add_argument("--instance", required=True)
    r.add_argument("--algo", choices=ALGORITHMS, required=True)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--feas", choices=("none", "exact", "grid", "auto"), default="none", help=feas_help)
    r.add_argument("--solution", help="offline solution file to use as the comparator")
    r.add_argument("--grid-refine", type=int, default=1)
    r.add_argument("--format", choices=("csv", "json"), default="csv")
    r.add_argument("--instance-id")
    r.add_argument("--trace", help="write the execution trace here")
    r.add_argument("--out")
    r.set_defaults(func=cmd_run)

    o = sub.add_parser("oracle", help="solve an instance offline")
    o.add_argument("--instance", required=True)
    o.add_argument("--mode", choices=("exact", "grid"), default="grid")
    o.add_argument("--grid-refine", type=int, default=1)
    o.add_argument("--out")
    o.set_defaults(func=cmd_oracle)

    v = sub.add_parser("verify-preflow", help="check the charging graph of a facility run")
    v.add_argument("--instance", required=True)
    v.add_argument("--trace")
    v.add_argument("--solution")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--grid-refine", type=int, default=1)
    v.add_argument("--experimental", action="store_true", help="allow delay-curve instances")
    v.add_argument("--dump", help="write the charging graph as JSON")
    v.set_defaults(func=cmd_verify_preflow)

    b = sub.add_parser("bench", help="many seeded trials to CSV, with figures next to it")
    b.add_argument("--algo", choices=ALGORITHMS, required=True)
    b.add_argument("--instance", help="fixed instance; otherwise one is generated per trial")
    b.add_argument("--kind", choices=KINDS)
    b.add_argument("--profile", choices=PROFILES, default="linear-slopes")
    b.add_argument("--n", type=int, default=8)
    b.add_argument("--requests", type=int, default=10)
    b.add_argument("--trials", type=int, default=10)
    b.add_argument("--seed", type=int, default=0, help="master seed; trial i uses seed ^ i")
    b.add_argument("--feas", choices=("none", "exact", "grid", "auto"), default="none", help=feas_help)
    b.add_argument("--grid-refine", type=int, default=1)
    b.add_argument("--format", choices=("csv", "json"), default="csv")
    b.add_argument("--jobs", type=int, default=1)
    b.add_argument("--trace-dir")
    b.add_argument("--no-figures", action="store_true")
    b.add_argument("--out")
    b.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InstanceError, PreflowError, OracleRefusal, ValueError, OSError) as exc:
        print(f"hstdelay {args.command}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
