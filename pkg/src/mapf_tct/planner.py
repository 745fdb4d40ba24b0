"""High-level planner: grows the team communication tree by repeatedly
selecting a node, drawing a random planning order, and expanding each agent's
path over up to m rounds with collision-at-goal trimming."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, asdict

import numpy as np

from .comm import CommModel, tcomm
from .heuristics import fields_for_goals, point_heuristic
from .paths import Point, TimedPath
from .sapf import plan_single
from .tct import (GoalsDisconnected, StartsDisconnected, Tct,
                  closest_node_to_goal, expand_tree, get_paths, init_tree,
                  select_node)
from .world import NavGraph, SubDivision, add_nodes, build_graph, subdivide

ALL_REACH_GOAL = "AllReachGoal"
PARTIAL = "Partial"
TIMEOUT = "Timeout"
INFEASIBLE = "Infeasible"
STUCK = "Stuck"


@dataclass
class PlannerConfig:
    t_ds: float = 5.0          # total wall-clock budget, seconds
    t_sa: float = 0.2          # per low-level call budget, seconds
    m: int = 5                 # path expansion rounds per iteration
    alpha: float = 0.1         # travel-cost weight in the node cost
    c: float = 0.05            # node reselection penalty, meters
    v_c: float = 1.0           # agent speed, m/s
    d_c: float = 0.5           # collision distance, meters
    dt_comm: float = 0.25      # communication sampling step, seconds
    seed: int = 0
    resolution: float = 1.0
    min_cell_size: float = 0.25
    h_mode: str = "bookkeeping"     # or "field_lookup"
    reopen_reinsert: bool = False

    def __post_init__(self):
        for name in ("t_ds", "t_sa", "alpha", "c", "v_c", "d_c", "dt_comm",
                     "resolution", "min_cell_size"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.m < 1:
            raise ValueError("m must be >= 1")


@dataclass
class SolveStats:
    runtime: float = 0.0
    iterations: int = 0
    tct_nodes: int = 0
    per_agent_travel: list[float] = field(default_factory=list)
    rounds_used: int = 0       # rounds executed in the final iteration
    overshoot: float = 0.0     # runtime beyond t_ds (bounded by n*m*t_sa)


@dataclass
class Solution:
    paths: list[TimedPath]
    status: str
    stats: SolveStats

    def to_json(self) -> dict:
        return {
            "status": self.status,
            "paths": [p.to_list() for p in self.paths],
            "reached": [p.reached_goal for p in self.paths],
            "stats": asdict(self.stats),
        }

    @staticmethod
    def from_json(data: dict) -> "Solution":
        reached = data.get("reached", [False] * len(data["paths"]))
        paths = [TimedPath.from_list(rows, reached_goal=r)
                 for rows, r in zip(data["paths"], reached)]
        stats = SolveStats(**data.get("stats", {}))
        return Solution(paths=paths, status=data["status"], stats=stats)


@dataclass
class PlanningContext:
    """World discretization and per-agent heuristic fields shared by the
    planner and the baselines."""

    sub: SubDivision
    graph: NavGraph            # base graph with goal points injected
    goal_ids: list[int]
    fields: list
    model: CommModel
    v_c: float
    d_c: float

    def point_h(self, j: int, p: Point) -> float:
        return point_heuristic(p, self.fields[j], self.graph)


def prepare(instance, config: PlannerConfig) -> PlanningContext:
    sub = subdivide(instance.world, config.resolution, config.min_cell_size)
    base = build_graph(sub)
    graph, goal_ids = add_nodes(base, list(instance.goals), neighbor_links=True)
    fields = fields_for_goals(graph, goal_ids)
    return PlanningContext(sub=sub, graph=graph, goal_ids=goal_ids,
                           fields=fields, model=instance.model,
                           v_c=instance.v_c, d_c=instance.d_c)


def random_order(n: int, rng: np.random.Generator) -> list[int]:
    """Uniformly random planning order from the run's seeded generator."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return [int(i) for i in rng.permutation(n)]


def _at_goal(pos: Point, goal: Point) -> bool:
    return math.hypot(pos[0] - goal[0], pos[1] - goal[1]) <= 1e-9


def init_paths(node, goals: list[Point]) -> list[TimedPath]:
    """Single-waypoint paths at the node's state; agents already at their
    goals start with the reached flag set."""
    return [TimedPath.single(pos, node.t, reached_goal=_at_goal(pos, g))
            for pos, g in zip(node.state, goals)]


def modify_if_overlap(agent: int, paths: list[TimedPath], d_c: float) -> bool:
    """Collision-at-goal repair: if the agent's permanent Stop at its goal
    comes within d_c of another path's future movement, every path extending
    beyond the earliest conflict time t_c is trimmed back to t_c.

    Returns True when no conflict exists (the agent's arrival stands)."""
    me = paths[agent]
    gx, gy = me.end_pos
    t_arr = me.end_time
    d2 = d_c * d_c
    t_c = math.inf
    for j, p in enumerate(paths):
        if j == agent or p is None or len(p) < 2:
            continue
        for i in range(len(p) - 1):
            t0, t1 = p.times[i], p.times[i + 1]
            if t1 <= t_arr or t1 <= t0:
                continue
            lo = max(t0, t_arr)
            span = t1 - t0
            (x0, y0), (x1, y1) = p.pts[i], p.pts[i + 1]
            vx = (x1 - x0) / span
            vy = (y1 - y0) / span
            dx = x0 + vx * (lo - t0) - gx
            dy = y0 + vy * (lo - t0) - gy
            a = vx * vx + vy * vy
            c0 = dx * dx + dy * dy - d2
            if a < 1e-18:
                if c0 < 0:
                    t_c = min(t_c, lo)
                continue
            if c0 < 0:
                t_c = min(t_c, lo)
                continue
            b = 2.0 * (dx * vx + dy * vy)
            disc = b * b - 4.0 * a * c0
            if disc <= 0:
                continue
            sq = math.sqrt(disc)
            tau_in = (-b - sq) / (2.0 * a)
            tau_out = (-b + sq) / (2.0 * a)
            width = t1 - lo
            if max(tau_in, 0.0) < min(tau_out, width):
                t_c = min(t_c, lo + max(tau_in, 0.0))
    if not math.isfinite(t_c):
        return True
    # back off a hair so trimmed agents end strictly outside the d_c boundary
    t_c = max(t_arr, t_c - 1e-6)
    for j, p in enumerate(paths):
        if j == agent:
            continue
        if p.end_time > t_c + 1e-12:
            paths[j] = p.trimmed(t_c)
    return False


def solve(instance, config: PlannerConfig | None = None,
          debug: dict | None = None) -> Solution:
    """Plan team-connected, collision-free paths for all agents.

    Uses the instance's v_c/d_c/comm model (the config copies are
    generation-side defaults). Infeasible start-goal connectivity is reported
    as a status; disconnected start or goal configurations raise. When a dict
    is passed as debug, the grown search tree is stored under debug["tree"].
    """
    config = config or PlannerConfig()
    t_begin = time.perf_counter()
    n = instance.n
    goals = list(instance.goals)
    starts = list(instance.starts)
    model = instance.model
    v_c, d_c = instance.v_c, instance.d_c

    if not tcomm(starts, model):
        raise StartsDisconnected("instance starts are not team-connected")
    if not tcomm(goals, model):
        raise GoalsDisconnected("instance goals are not team-connected")

    ctx = prepare(instance, config)
    h_parts = [ctx.point_h(j, starts[j]) for j in range(n)]
    if not all(math.isfinite(h) for h in h_parts):
        paths = [TimedPath.single(s, 0.0, reached_goal=_at_goal(s, g))
                 for s, g in zip(starts, goals)]
        stats = SolveStats(runtime=time.perf_counter() - t_begin,
                           per_agent_travel=[0.0] * n)
        return Solution(paths=paths, status=INFEASIBLE, stats=stats)

    tree = init_tree(starts, model, config.alpha, sum(h_parts))
    rng = np.random.default_rng(config.seed)
    deadline = t_begin + config.t_ds
    iterations = 0
    rounds_used = 0
    success_node = None
    memo: dict = {}  # reselected nodes replay identical low-level subproblems

    while time.perf_counter() < deadline:
        iterations += 1
        v = select_node(tree, config.c)
        order = random_order(n, rng)
        paths = init_paths(v, goals)
        all_rg = all(p.reached_goal for p in paths)
        rounds_used = 0
        if not all_rg:
            for _ in range(config.m):
                rounds_used += 1
                all_rg = True
                changed = False
                for i in order:
                    if paths[i].reached_goal:
                        continue
                    seg = plan_single(i, goals[i], ctx.graph, paths,
                                      ctx.fields[i], model, d_c, config.t_sa,
                                      v_c=v_c, dt_comm=config.dt_comm,
                                      reopen_reinsert=config.reopen_reinsert,
                                      memo=memo)
                    if len(seg) > 1:
                        paths[i] = paths[i].extended(seg)
                        changed = True
                    if paths[i].reached_goal:
                        if not modify_if_overlap(i, paths, d_c):
                            all_rg = False
                            changed = True  # trims altered other paths
                    else:
                        all_rg = False
                if all_rg or not changed:
                    break  # stable paths make further rounds no-ops
        added, complete = expand_tree(tree, paths, v, model, ctx.point_h,
                                      config.h_mode)
        if all_rg and complete:
            success_node = tree.nodes[-1] if added else v
            break

    if debug is not None:
        debug["tree"] = tree
    best = success_node if success_node is not None else closest_node_to_goal(tree)
    out = get_paths(tree, best)
    for j in range(n):
        out[j].reached_goal = _at_goal(out[j].end_pos, goals[j])
    reached = [p.reached_goal for p in out]
    if all(reached):
        status = ALL_REACH_GOAL
    elif any(reached):
        status = PARTIAL
    else:
        status = TIMEOUT
    runtime = time.perf_counter() - t_begin
    stats = SolveStats(runtime=runtime, iterations=iterations,
                       tct_nodes=len(tree),
                       per_agent_travel=[p.length() for p in out],
                       rounds_used=rounds_used,
                       overshoot=max(0.0, runtime - config.t_ds))
    return Solution(paths=out, status=status, stats=stats)
