"""Command-line interface: gen / solve / validate / bench / trace."""

from __future__ import annotations

import argparse
import json
import os
import sys

from .baselines import solve_comp, solve_pibt_comm, solve_plf
from .bench import BenchConfig, PLANNERS, emit_trace, run_suite
from .comm import CommModel
from .envgen import EnvParams, gen_env, gen_instance, load_instance, save_instance
from .planner import PlannerConfig, Solution, solve
from .validate import validate
from .world import WorldMap


def _parse_seeds(spec: str) -> list[int]:
    """'a..b' is the half-open range [a, b); a single integer is one seed."""
    if ".." in spec:
        a, b = spec.split("..")
        return list(range(int(a), int(b)))
    return [int(spec)]


def _add_planner_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--tds", type=float, default=5.0, help="total budget, s")
    p.add_argument("--tsa", type=float, default=0.2, help="low-level budget, s")
    p.add_argument("--m", type=int, default=5, help="expansion rounds")
    p.add_argument("--alpha", type=float, default=0.1, help="travel-cost weight")
    p.add_argument("--penalty-c", type=float, default=0.05,
                   help="node reselection penalty")
    p.add_argument("--vc", type=float, default=1.0, help="agent speed, m/s")
    p.add_argument("--dc", type=float, default=0.5, help="collision distance, m")
    p.add_argument("--dt-comm", type=float, default=0.25,
                   help="comm sampling step, s")
    p.add_argument("--seed", type=int, default=0)


def _config_from(args) -> PlannerConfig:
    return PlannerConfig(t_ds=args.tds, t_sa=args.tsa, m=args.m,
                         alpha=args.alpha, c=args.penalty_c, v_c=args.vc,
                         d_c=args.dc, dt_comm=args.dt_comm, seed=args.seed)


def main(argv=None) -> int:
    top = argparse.ArgumentParser(prog="mapf-tct")
    sub = top.add_subparsers(dest="cmd", required=True)

    g = sub.add_parser("gen", help="generate a map (and optionally an instance)")
    g.add_argument("--family", required=True,
                   choices=["forest", "office", "waves", "rings", "maze"])
    g.add_argument("--difficulty", choices=["easy", "medium", "hard"])
    g.add_argument("--size", type=float, default=114.0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True, help="map JSON path")
    g.add_argument("--n", type=int, help="also sample an n-agent instance")
    g.add_argument("--instance-out", help="instance JSON path")
    g.add_argument("--comm", choices=["lcr", "los"], default="lcr")
    g.add_argument("--rc", type=float, default=15.0)
    g.add_argument("--dc", type=float, default=0.5)
    g.add_argument("--vc", type=float, default=1.0)
    g.add_argument("--layout", choices=["strip", "long_thin", "rect"],
                   default="strip")

    s = sub.add_parser("solve", help="solve one instance file")
    s.add_argument("--instance", required=True)
    s.add_argument("--planner", default="maapgdl", choices=sorted(PLANNERS))
    s.add_argument("--out", help="solution JSON path")
    s.add_argument("--dump-tct", help="dump the search tree nodes to JSON")
    _add_planner_flags(s)

    v = sub.add_parser("validate", help="check a solution against its instance")
    v.add_argument("--instance", required=True)
    v.add_argument("--solution", required=True)
    v.add_argument("--dt", type=float, default=0.05)
    v.add_argument("--out", help="report JSON path (default stdout)")

    b = sub.add_parser("bench", help="run a benchmark sweep")
    b.add_argument("--planner", default="maapgdl",
                   help="comma-separated planner names")
    b.add_argument("--family", default="forest",
                   help="comma-separated families")
    b.add_argument("--n", default="5", help="comma-separated agent counts")
    b.add_argument("--seeds", default="0..10", help="half-open range a..b")
    b.add_argument("--comm", choices=["lcr", "los"], default="lcr")
    b.add_argument("--rc", type=float, default=15.0)
    b.add_argument("--difficulty", choices=["easy", "medium", "hard"])
    b.add_argument("--size", type=float, default=114.0)
    b.add_argument("--layout", choices=["strip", "long_thin", "rect"],
                   default="strip")
    b.add_argument("--out", default="bench_out", help="output directory")
    b.add_argument("--workers", type=int, default=0,
                   help="parallel runs (0 = one per core; "
                        "MAPF_TCT_WORKERS overrides)")
    _add_planner_flags(b)

    t = sub.add_parser("trace", help="render a solution to SVG + JSON trace")
    t.add_argument("--instance", required=True)
    t.add_argument("--solution", required=True)
    t.add_argument("--out", required=True, help="SVG path")

    args = top.parse_args(argv)

    if args.cmd == "gen":
        params = EnvParams(family=args.family, size=args.size,
                           difficulty=args.difficulty, seed=args.seed)
        world = gen_env(params)
        world.save(args.out)
        print(f"wrote map {args.out} ({len(world.rects)} obstacle rects)")
        if args.n:
            model = (CommModel.line_of_sight(world, r_c=args.rc)
                     if args.comm == "los"
                     else CommModel.limited_range(args.rc))
            inst = gen_instance(world, args.n, args.seed, d_c=args.dc,
                                model=model, v_c=args.vc, layout=args.layout)
            out = args.instance_out or os.path.splitext(args.out)[0] + "_inst.json"
            save_instance(inst, out, map_path=args.out)
            print(f"wrote instance {out}")
        return 0

    if args.cmd == "solve":
        instance = load_instance(args.instance)
        config = _config_from(args)
        debug: dict = {}
        if args.planner == "maapgdl":
            sol = solve(instance, config, debug=debug)
        else:
            sol = PLANNERS[args.planner](instance, config)
        print(f"status={sol.status} runtime={sol.stats.runtime:.3f}s "
              f"travel={sum(sol.stats.per_agent_travel):.1f}m")
        if args.out:
            with open(args.out, "w") as f:
                json.dump(sol.to_json(), f)
        if args.dump_tct and "tree" in debug:
            tree = debug["tree"]
            rows = [{"id": nd.id, "parent": nd.parent, "t": nd.t,
                     "state": [list(p) for p in nd.state], "g": nd.g,
                     "h": nd.h, "f": nd.f, "penalty": nd.penalty}
                    for nd in tree.nodes]
            with open(args.dump_tct, "w") as f:
                json.dump(rows, f)
        return 0 if sol.status == "AllReachGoal" else 1

    if args.cmd == "validate":
        instance = load_instance(args.instance)
        with open(args.solution) as f:
            sol = Solution.from_json(json.load(f))
        report = validate(instance, sol, dt=args.dt)
        blob = json.dumps(report.to_json(), indent=1)
        if args.out:
            with open(args.out, "w") as f:
                f.write(blob)
        else:
            print(blob)
        return 0 if report.ok else 2

    if args.cmd == "bench":
        workers = args.workers if args.workers > 0 else (os.cpu_count() or 1)
        config = BenchConfig(
            planners=args.planner.split(","),
            families=args.family.split(","),
            agent_counts=[int(x) for x in args.n.split(",")],
            seeds=_parse_seeds(args.seeds),
            t_ds=args.tds, t_sa=args.tsa, m=args.m, alpha=args.alpha,
            c=args.penalty_c, comm=args.comm, r_c=args.rc, v_c=args.vc,
            d_c=args.dc, dt_comm=args.dt_comm, size=args.size,
            difficulty=args.difficulty, layout=args.layout,
            output_dir=args.out, workers=workers)
        rows = run_suite(config)
        for r in rows:
            print(f"{r.planner:>10} {r.family:>8} n={r.n:<3} "
                  f"success={r.success_rate:.2f} "
                  f"runtime={r.runtime_mean:.2f}s dist={r.dist_mean:.1f}m")
        print(f"metrics written to {args.out}/metrics.csv")
        return 0

    if args.cmd == "trace":
        instance = load_instance(args.instance)
        with open(args.solution) as f:
            sol = Solution.from_json(json.load(f))
        emit_trace(instance, sol, args.out)
        print(f"wrote {args.out}")
        return 0

    return 1


if __name__ == "__main__":
    sys.exit(main())
