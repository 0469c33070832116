"""Command line front end.

Exit codes: 0 success, 1 usage or parse error, 2 infeasible, 3 oracle budget refusal.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys

from . import __version__
from .minplus import InfeasibleRequestError, SolverConfig
from .model import Scenario, dump_json, validate_scenario
from .oracle import BudgetExceeded, exhaustive_search
from .scenarios import (
    HeterogeneousParams,
    HomogeneousParams,
    gen_heterogeneous,
    gen_homogeneous,
    monte_carlo,
)
from .scheduling import SCHEDULER_NAMES, get_criterion
from .solver import solve

EXIT_OK, EXIT_USAGE, EXIT_INFEASIBLE, EXIT_BUDGET = 0, 1, 2, 3
LONG_RUN_SAMPLES = 10_000


class UsageError(Exception):
    pass


def _read_scenario(path) -> Scenario:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from exc
    try:
        return Scenario.from_dict(data)
    except ValueError as exc:
        raise UsageError(f"{path}: {exc}") from exc


def _write(text: str, path):
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    try:
        with open(path, "w") as fh:
            fh.write(text)
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc.strerror}") from exc


def _config(args) -> SolverConfig:
    try:
        return SolverConfig(dc=args.dc, policy=args.policy, seed=args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _schedulers(spec: str) -> list[str]:
    if spec == "all":
        return list(SCHEDULER_NAMES)
    try:
        return [get_criterion(x.strip()).name for x in spec.split(",") if x.strip()]
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def cmd_gen(args) -> int:
    try:
        if args.kind == "homogeneous":
            p = HomogeneousParams(K=args.k, N=args.n, H=args.h, tau_h=args.tau_h,
                                  size_gb=args.size_gb)
            s = gen_homogeneous(p, args.seed)
        else:
            s = gen_heterogeneous(int(args.kind[-1]), args.seed,
                                  HeterogeneousParams(K=args.k, N=args.n))
    except ValueError as exc:
        raise UsageError(f"invalid parameters: {exc}") from exc
    _write(dump_json(s.to_dict()), args.out)
    issues = validate_scenario(s)
    print(f"{args.kind}: K={s.K} N={s.N} H={s.H} requests={s.num_requests} "
          f"{'valid' if not issues else f'{len(issues)} issue(s)'}", file=sys.stderr)
    return EXIT_OK


def cmd_validate(args) -> int:
    s = _read_scenario(args.scenario)
    issues = validate_scenario(s)
    for issue in issues:
        print(f"{issue.rule} at {issue.index}")
    print(f"{args.scenario}: {'valid' if not issues else f'{len(issues)} issue(s)'}")
    return EXIT_OK if not issues else EXIT_USAGE


def cmd_solve(args) -> int:
    s = _read_scenario(args.scenario)
    issues = validate_scenario(s)
    if issues:
        raise UsageError(f"invalid scenario: {issues[0].rule} at {issues[0].index}")
    cfg = _config(args)
    names = _schedulers(args.scheduler)
    status = EXIT_OK
    reports = []
    for name in names:
        try:
            rep = solve(s, name, cfg)
        except InfeasibleRequestError as exc:
            print(f"{name}: infeasible: {exc}")
            status = EXIT_INFEASIBLE
            continue
        reports.append(rep)
        extra = f", {len(rep.infeasible)} skipped" if rep.infeasible else ""
        print(f"{name}: {rep.num_vpns} VPNs, cost {rep.total_cost:.4f}, Q={rep.num_requests}, "
              f"{rep.wall_time * 1000:.1f} ms{extra}")
    if reports and args.out:
        if len(reports) == 1:
            payload = reports[0].to_dict()
        else:
            payload = {"results": [r.to_dict() for r in reports]}
        _write(dump_json(payload), args.out)
    return status


def cmd_oracle(args) -> int:
    s = _read_scenario(args.scenario)
    try:
        res = exhaustive_search(s, dc=args.dc, budget=args.budget)
    except BudgetExceeded as exc:
        print(f"refused: {exc}")
        return EXIT_BUDGET
    if not res.feasible:
        print("no feasible plan on the search lattice")
        return EXIT_INFEASIBLE
    out = {
        "optimal_cost": round(res.cost, 6),
        "min_vpns": res.min_vpns,
        "num_optimal": res.num_optimal,
        "nodes": res.nodes,
        "plan": res.plan.to_dict(),
    }
    print(f"optimum {res.cost:.6f} with {res.min_vpns} VPNs ({res.nodes} nodes)")
    if args.compare:
        cfg = _config(args)
        try:
            rep = solve(s, args.scheduler, cfg)
            gap = rep.total_cost - res.cost
            out["mph_cost"] = round(rep.total_cost, 6)
            out["gap"] = round(gap, 6)
            print(f"heuristic {rep.total_cost:.6f}, gap {gap:.6f}")
        except InfeasibleRequestError as exc:
            print(f"heuristic infeasible: {exc}")
    if args.out:
        _write(dump_json(out), args.out)
    return EXIT_OK


def cmd_bench(args) -> int:
    names = _schedulers(args.schedulers)
    n = LONG_RUN_SAMPLES if args.long_run else args.samples
    if n < 1:
        raise UsageError("--samples must be >= 1")
    cfg = dataclasses.replace(_config(args), keep_log=False)
    stats = monte_carlo(int(args.variant[-1]), n, names, cfg, seed=args.seed)
    out_dir = args.out or "."
    cdf_path, sum_path = stats.write_csv(out_dir)
    print(f"het{stats.variant}: {stats.n_samples} samples, {stats.n_infeasible} infeasible draws rejected")
    for row in stats.summary_rows():
        fails = stats.failures.get(row["scheduler"], 0)
        print(f"{row['scheduler']:>11}  mean cost {row['mean_cost']:.4f}  cv {row['cv']:.4f}  "
              f"mean vpns {row['mean_vpns']:.3f}  win vs rand {row['win_rate_vs_rand']:.3f}"
              + (f"  failures {fails}" if fails else ""))
    print(f"wrote {cdf_path} and {sum_path}")
    return EXIT_OK


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--dc", type=float, default=1.0, help="grid step in Mb/s (default 1)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--policy", choices=("abort", "skip"), default="abort")
    p.add_argument("--out", default=None, help="output file (directory for bench)")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="bulkplan", description="Deadline-constrained bulk transfer planner")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", parents=[common], help="generate a scenario file")
    g.add_argument("kind", choices=("homogeneous", "het1", "het2", "het3"))
    g.add_argument("--k", type=int, default=4)
    g.add_argument("--n", type=int, default=20)
    g.add_argument("--h", type=int, default=16, help="catalogue size (homogeneous)")
    g.add_argument("--tau-h", type=float, default=3.0, help="deadline in hours (homogeneous)")
    g.add_argument("--size-gb", type=float, default=200.0)
    g.set_defaults(func=cmd_gen)

    v = sub.add_parser("validate", parents=[common], help="check scenario invariants")
    v.add_argument("scenario")
    v.set_defaults(func=cmd_validate)

    s = sub.add_parser("solve", parents=[common], help="run the min-plus heuristic")
    s.add_argument("scenario")
    s.add_argument("--scheduler", default="n_asc", help="criterion name, comma list, or 'all'")
    s.set_defaults(func=cmd_solve)

    o = sub.add_parser("oracle", parents=[common], help="exhaustive global optimum (tiny instances)")
    o.add_argument("scenario")
    o.add_argument("--budget", type=float, default=1e8)
    o.add_argument("--compare", action="store_true", help="also run the heuristic and print the gap")
    o.add_argument("--scheduler", default="n_asc")
    o.set_defaults(func=cmd_oracle)

    b = sub.add_parser("bench", parents=[common], help="Monte-Carlo scheduler comparison")
    b.add_argument("variant", choices=("het1", "het2", "het3"))
    b.add_argument("--samples", "-n", type=int, default=500)
    b.add_argument("--schedulers", default="all")
    b.add_argument("--long-run", action="store_true", help=f"use {LONG_RUN_SAMPLES} samples")
    b.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
