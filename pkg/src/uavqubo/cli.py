"""Command-line front end: gen, cluster, allocate, pipeline, sweep, table2,
export-qubo.

Every subcommand reads JSON configs, writes its outputs under --out, and
exits nonzero with a machine-readable JSON error on stderr when anything
fails.
"""

import argparse
import json
import sys
from pathlib import Path

from . import experiments
from .allocation import (
    build_allocation_qubo,
    dinkelbach_solve,
    penalty_bound_allocation,
    plan_to_json,
)
from .clustering import (
    assignment_from_json,
    assignment_to_json,
    build_clustering_qubo,
    cluster,
    clustering_penalty_lower,
    poor_matching_fraction,
)
from .netmodel import scenario_from_config, scenario_from_json, scenario_to_json
from .qubo import export_qubo_file
from .solvers import exhaustive_sampler, sa_sampler, sd_sampler


def _load_scenario(path):
    with open(path) as fh:
        doc = json.load(fh)
    if "uav_positions" in doc:
        return scenario_from_json(path)
    return scenario_from_config(doc)


def _sampler(args, seed_key):
    seed = experiments.split_seed(args.seed, seed_key)
    if args.solver == "exhaustive":
        return exhaustive_sampler()
    if args.solver == "sd":
        return sd_sampler(restarts=args.restarts, seed=seed)
    if args.solver == "sa":
        return sa_sampler(sweeps=args.sweeps, restarts=args.restarts,
                          seed=seed, decompose=True)
    if args.solver == "sa-bench":
        return sa_sampler(seed=seed, **experiments.BENCH_CLUSTER_SA)
    raise ValueError(f"unknown solver {args.solver!r}")


def _out_dir(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_gen(args):
    with open(args.config) as fh:
        cfg = json.load(fh)
    if args.seed is not None:
        cfg["seed"] = args.seed
    scenario = scenario_from_config(cfg)
    out = _out_dir(args)
    scenario_to_json(scenario, out / "scenario.json")
    print(out / "scenario.json")


def cmd_cluster(args):
    scenario = _load_scenario(args.config)
    out = _out_dir(args)
    assignment = cluster(scenario, _sampler(args, "cluster"))
    assignment_to_json(assignment, out / "assignment.json")
    if args.oracle and scenario.num_uavs * scenario.num_gus <= 20:
        oracle = cluster(scenario, exhaustive_sampler())
        if abs(oracle.objective - assignment.objective) > 1e-9:
            print(f"oracle mismatch: {oracle.objective!r} "
                  f"vs {assignment.objective!r}", file=sys.stderr)
    print(json.dumps({"objective": assignment.objective,
                      "poor_matching_pct":
                          100 * poor_matching_fraction(assignment, scenario),
                      "solve_time_s": assignment.solve_time_s}))


def cmd_allocate(args):
    scenario = _load_scenario(args.config)
    assignment = assignment_from_json(args.assignment)
    out = _out_dir(args)
    plan = dinkelbach_solve(scenario, assignment, _sampler(args, "alloc"),
                            tol=args.tol,
                            max_served_per_uav=scenario.radio.max_gus_per_uav)
    plan_to_json(plan, scenario.radio.power_levels_dbm, out / "plan.json")
    print(json.dumps({"sum_rate": plan.sum_rate, "lambda_i": plan.lambda_i,
                      "iterations": plan.dinkelbach_iters}))


def cmd_pipeline(args):
    scenario = _load_scenario(args.config)
    out = _out_dir(args)
    assignment, plan, rate = experiments.pipeline(
        scenario, _sampler(args, "cluster"), _sampler(args, "alloc"),
        tol=args.tol)
    assignment_to_json(assignment, out / "assignment.json")
    plan_to_json(plan, scenario.radio.power_levels_dbm, out / "plan.json")
    print(json.dumps({"sum_rate": rate,
                      "clustering_objective": assignment.objective,
                      "lambda_i": plan.lambda_i}))


def cmd_sweep(args):
    config = experiments.ExperimentConfig.from_json(args.config)
    if args.out is not None:
        config.out_dir = args.out
    records = experiments.sweep(config)
    out = Path(config.out_dir)
    experiments.emit_plotdata(records, "sumrate_vs_uavs",
                              out / "sumrate_vs_uavs.csv")
    experiments.emit_plotdata(records, "sumrate_vs_gus",
                              out / "sumrate_vs_gus.csv")
    experiments.emit_plotdata(records, "runtime_vs_uavs",
                              out / "runtime_vs_uavs.csv")
    failures = sum(r.status != "ok" for r in records)
    print(json.dumps({"records": len(records), "failures": failures,
                      "out_dir": str(out)}))


def cmd_table2(args):
    with open(args.config) as fh:
        cfg = json.load(fh)
    seeds = cfg.pop("seeds", list(range(10)))
    out = _out_dir(args)
    rows = experiments.report_clustering_table(cfg, seeds, out / "table2.csv")
    print(json.dumps({"rows": rows, "out": str(out / "table2.csv")}))


def cmd_export_qubo(args):
    scenario = _load_scenario(args.config)
    out = _out_dir(args)
    if args.kind == "clustering":
        lam = args.penalty or 1.05 * clustering_penalty_lower(scenario)
        model = build_clustering_qubo(scenario, lam)
        path = out / "clustering.qubo"
    else:
        assignment = assignment_from_json(args.assignment)
        lam = args.penalty or penalty_bound_allocation(
            scenario, assignment, args.scaling).chosen
        model = build_allocation_qubo(scenario, assignment, args.scaling, lam)
        path = out / "allocation.qubo"
    export_qubo_file(model, path)
    print(path)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="uavqubo",
        description="QUBO pipeline for multi-UAV clustering and resource "
                    "allocation with classical annealing samplers")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, assignment=False):
        p.add_argument("--config", required=True,
                       help="scenario config or scenario JSON")
        p.add_argument("--solver", default="sa",
                       choices=["sa", "sd", "exhaustive", "sa-bench"])
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--sweeps", type=int, default=150)
        p.add_argument("--restarts", type=int, default=2)
        p.add_argument("--tol", type=float, default=1e-6)
        p.add_argument("--out", default=".")
        p.add_argument("--oracle", action="store_true",
                       help="cross-check against brute force when tractable")
        if assignment:
            p.add_argument("--assignment", required=True,
                           help="assignment JSON from the cluster command")

    p = sub.add_parser("gen", help="emit a scenario JSON")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("cluster", help="solve the clustering stage")
    common(p)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("allocate", help="solve allocation for a clustering")
    common(p, assignment=True)
    p.set_defaults(func=cmd_allocate)

    p = sub.add_parser("pipeline", help="cluster then allocate")
    common(p)
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("sweep", help="run an experiment sweep config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("table2", help="clustering benchmark table")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_table2)

    p = sub.add_parser("export-qubo", help="write a .qubo coordinate file")
    p.add_argument("--config", required=True)
    p.add_argument("--kind", choices=["clustering", "allocation"],
                   default="clustering")
    p.add_argument("--assignment", default=None)
    p.add_argument("--penalty", type=float, default=None)
    p.add_argument("--scaling", type=float, default=0.0,
                   help="interference scaling for the allocation model")
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_export_qubo)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except Exception as exc:
        print(json.dumps({"error": str(exc), "type": type(exc).__name__}),
              file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
