"""Benchmark harness: planner x environment x agent-count sweeps over seeds,
success/runtime/distance metrics with failure penalties, CSV/JSON tables, and
per-solution SVG traces."""

from __future__ import annotations

import json
import math
import os
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict

import numpy as np

from .baselines import solve_comp, solve_pibt_comm, solve_plf
from .comm import CommModel, acomm_static
from .envgen import EnvParams, gen_env, gen_instance
from .paths import TimedPath
from .planner import (ALL_REACH_GOAL, TIMEOUT, PlannerConfig, Solution,
                      SolveStats, solve)
from .validate import validate

FAIL_DISTANCE = 300.0


def _always_fail(instance, config):
    """Test stub: burns no time and never succeeds (penalty bookkeeping)."""
    paths = [TimedPath.single(s, 0.0) for s in instance.starts]
    stats = SolveStats(runtime=config.t_ds, per_agent_travel=[0.0] * instance.n)
    return Solution(paths=paths, status=TIMEOUT, stats=stats)


PLANNERS = {
    "maapgdl": solve,
    "comp": solve_comp,
    "plf": solve_plf,
    "pibt-comm": solve_pibt_comm,
    "always-fail": _always_fail,
}


@dataclass
class BenchConfig:
    planners: list[str]
    families: list[str]
    agent_counts: list[int]
    seeds: list[int]
    t_ds: float = 5.0
    t_sa: float = 0.2
    m: int = 5
    alpha: float = 0.1
    c: float = 0.05
    comm: str = "lcr"
    r_c: float = 15.0
    v_c: float = 1.0
    d_c: float = 0.5
    dt_comm: float = 0.25
    size: float = 114.0
    difficulty: str | None = None
    layout: str = "strip"
    output_dir: str = "bench_out"
    workers: int = 1
    save_solutions: bool = True

    def __post_init__(self):
        if not self.planners or not self.families or not self.agent_counts \
                or not self.seeds:
            raise ValueError("planners, families, agent_counts, seeds must be non-empty")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        for p in self.planners:
            if p not in PLANNERS:
                raise ValueError(f"unknown planner {p!r}")


@dataclass
class MetricsRow:
    planner: str
    family: str
    n: int
    success_rate: float
    runtime_mean: float
    runtime_std: float
    dist_mean: float
    dist_std: float
    runs: int


def run_one(task: dict) -> dict:
    """One (planner, family, n, seed) run; never raises, failures carry a
    diagnostic instead."""
    planner = task["planner"]
    family = task["family"]
    n = task["n"]
    seed = task["seed"]
    out: dict = {"planner": planner, "family": family, "n": n, "seed": seed,
                 "success": False, "runtime": task["t_ds"],
                 "dist": FAIL_DISTANCE, "status": "error", "diagnostic": ""}
    try:
        params = EnvParams(family=family, size=task["size"],
                           difficulty=task.get("difficulty"), seed=seed)
        world = gen_env(params)
        model = (CommModel.line_of_sight(world, r_c=task["r_c"])
                 if task["comm"] == "los"
                 else CommModel.limited_range(task["r_c"]))
        instance = gen_instance(world, n, seed, d_c=task["d_c"], model=model,
                                r_c=15.0, v_c=task["v_c"],
                                layout=task.get("layout", "strip"))
        config = PlannerConfig(t_ds=task["t_ds"], t_sa=task["t_sa"],
                               m=task["m"], alpha=task["alpha"], c=task["c"],
                               v_c=task["v_c"], d_c=task["d_c"],
                               dt_comm=task["dt_comm"], seed=seed)
        sol = PLANNERS[planner](instance, config)
        out["status"] = sol.status
        ok = sol.status == ALL_REACH_GOAL
        if ok:
            report = validate(instance, sol)
            ok = report.ok
            if not ok:
                out["diagnostic"] = "validator rejected: " + json.dumps(
                    [v.to_json() for v in report.violations[:3]])
        if ok:
            out["success"] = True
            out["runtime"] = sol.stats.runtime
            out["dist"] = (sum(sol.stats.per_agent_travel) / n
                           if sol.stats.per_agent_travel else 0.0)
        if task.get("output_dir") and task.get("save_solutions", True):
            name = f"sol_{planner}_{family}_{n}_{seed}.json"
            with open(os.path.join(task["output_dir"], name), "w") as f:
                json.dump(sol.to_json(), f)
            out["solution_file"] = name
    except Exception:
        out["diagnostic"] = traceback.format_exc(limit=3)
    return out


def _worker_count(config: BenchConfig) -> int:
    env = os.environ.get("MAPF_TCT_WORKERS")
    if env:
        return max(1, int(env))
    return config.workers


def run_suite(config: BenchConfig) -> list[MetricsRow]:
    """Full sweep; deterministic row and seed order, results aggregated per
    (planner, family, n) with failure penalties (runtime = t_ds, 300 m)."""
    os.makedirs(config.output_dir, exist_ok=True)
    tasks = []
    for planner in config.planners:
        for family in config.families:
            for n in config.agent_counts:
                for seed in config.seeds:
                    tasks.append({
                        "planner": planner, "family": family, "n": n,
                        "seed": seed, "t_ds": config.t_ds, "t_sa": config.t_sa,
                        "m": config.m, "alpha": config.alpha, "c": config.c,
                        "comm": config.comm, "r_c": config.r_c,
                        "v_c": config.v_c, "d_c": config.d_c,
                        "dt_comm": config.dt_comm, "size": config.size,
                        "difficulty": config.difficulty,
                        "layout": config.layout,
                        "output_dir": config.output_dir,
                        "save_solutions": config.save_solutions,
                    })
    workers = _worker_count(config)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_one, tasks))
    else:
        results = [run_one(t) for t in tasks]

    by_key: dict[tuple, list[dict]] = {}
    for r in results:
        by_key.setdefault((r["planner"], r["family"], r["n"]), []).append(r)
    rows: list[MetricsRow] = []
    for planner in config.planners:
        for family in config.families:
            for n in config.agent_counts:
                runs = by_key.get((planner, family, n), [])
                runs.sort(key=lambda r: r["seed"])
                succ = sum(1 for r in runs if r["success"])
                rts = np.array([r["runtime"] for r in runs])
                ds = np.array([r["dist"] for r in runs])
                rows.append(MetricsRow(
                    planner=planner, family=family, n=n,
                    success_rate=succ / len(runs) if runs else 0.0,
                    runtime_mean=float(rts.mean()) if runs else 0.0,
                    runtime_std=float(rts.std()) if runs else 0.0,
                    dist_mean=float(ds.mean()) if runs else 0.0,
                    dist_std=float(ds.std()) if runs else 0.0,
                    runs=len(runs)))
    write_metrics(rows, config.output_dir)
    with open(os.path.join(config.output_dir, "runs.json"), "w") as f:
        json.dump(results, f, indent=1)
    return rows


def metrics_csv(rows: list[MetricsRow]) -> str:
    """Deterministic CSV: fixed column order, 6-decimal floats."""
    lines = [
        "# std columns are population standard deviations",
        "# failed runs: runtime = t_ds, per-agent distance = 300 m",
        "planner,family,n,success_rate,runtime_mean,runtime_std,"
        "dist_mean,dist_std,runs",
    ]
    for r in rows:
        lines.append(
            f"{r.planner},{r.family},{r.n},{r.success_rate:.6f},"
            f"{r.runtime_mean:.6f},{r.runtime_std:.6f},"
            f"{r.dist_mean:.6f},{r.dist_std:.6f},{r.runs}")
    return "\n".join(lines) + "\n"


def write_metrics(rows: list[MetricsRow], output_dir: str) -> None:
    with open(os.path.join(output_dir, "metrics.csv"), "w") as f:
        f.write(metrics_csv(rows))
    with open(os.path.join(output_dir, "metrics.json"), "w") as f:
        json.dump([asdict(r) for r in rows], f, indent=1)


# ---- trace rendering -------------------------------------------------------

PALETTE = ["#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
           "#e377c2", "#17becf", "#bcbd22", "#7f7f7f"]


def emit_trace(instance, solution, out: str, n_snapshots: int = 5) -> None:
    """SVG rendering of a solution (obstacles, start/goal markers, agent
    polylines, dashed comm edges at snapshot times) plus a JSON trace of
    positions sampled every 0.1 s for external plotting."""
    world = instance.world
    paths = solution.paths
    n = instance.n
    t_max = max(p.end_time for p in paths)
    s = []
    s.append(f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 '
             f'{world.width} {world.height}" width="800" height="800">')
    s.append(f'<g transform="translate(0,{world.height}) scale(1,-1)">')
    s.append(f'<rect x="0" y="0" width="{world.width}" height="{world.height}" '
             f'fill="#fafafa" stroke="#333" stroke-width="0.3"/>')
    for group in world.obstacles:
        for r in group:
            s.append(f'<rect x="{r.x}" y="{r.y}" width="{r.w}" height="{r.h}" '
                     f'fill="#444"/>')
    # dashed comm edges at snapshot times
    snaps = [k * t_max / max(n_snapshots - 1, 1) for k in range(n_snapshots)] \
        if t_max > 0 else [0.0]
    for t in snaps:
        pos = [p.sample(t) for p in paths]
        for i in range(n):
            for j in range(i + 1, n):
                if acomm_static(pos[i], pos[j], instance.model):
                    s.append(f'<line x1="{pos[i][0]:.3f}" y1="{pos[i][1]:.3f}" '
                             f'x2="{pos[j][0]:.3f}" y2="{pos[j][1]:.3f}" '
                             f'stroke="#999" stroke-width="0.15" '
                             f'stroke-dasharray="0.8,0.8"/>')
    for i, p in enumerate(paths):
        color = PALETTE[i % len(PALETTE)]
        pts = " ".join(f"{x:.3f},{y:.3f}" for x, y in p.pts)
        s.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                 f'stroke-width="0.35"/>')
        sx, sy = instance.starts[i]
        gx, gy = instance.goals[i]
        s.append(f'<circle cx="{sx}" cy="{sy}" r="0.8" fill="{color}"/>')
        s.append(f'<rect x="{gx - 0.7}" y="{gy - 0.7}" width="1.4" height="1.4" '
                 f'fill="none" stroke="{color}" stroke-width="0.3"/>')
        if not p.reached_goal:
            ex, ey = p.end_pos
            s.append(f'<path d="M {ex - 1} {ey - 1} L {ex + 1} {ey + 1} '
                     f'M {ex - 1} {ey + 1} L {ex + 1} {ey - 1}" '
                     f'stroke="{color}" stroke-width="0.4"/>')
    s.append("</g></svg>")
    with open(out, "w") as f:
        f.write("\n".join(s))

    dt = 0.1
    steps = int(math.floor(t_max / dt + 1e-9)) + 1
    trace = {
        "dt": dt,
        "t_max": t_max,
        "status": solution.status,
        "agents": [[list(p.sample(k * dt)) for k in range(steps)]
                   for p in paths],
    }
    root, _ = os.path.splitext(out)
    with open(root + ".json", "w") as f:
        json.dump(trace, f)
