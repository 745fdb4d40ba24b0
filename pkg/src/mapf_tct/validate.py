"""Independent brute-force checker for solutions: goal achievement, speed
limits, pairwise collisions, and team connectivity. Deliberately avoids the
planner's incremental machinery; only world geometry and the Instance /
Solution schemas are shared."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .world import segments_blocked

GOAL_TOL = 1e-6
SPEED_TOL = 1e-9


class MismatchedInstance(Exception):
    """Solution and instance disagree on the number of agents."""


@dataclass
class Violation:
    kind: str
    time: float
    agents: tuple[int, ...]
    measured: float

    def to_json(self) -> dict:
        return {"kind": self.kind, "time": self.time,
                "agents": list(self.agents), "measured": self.measured}


@dataclass
class ValidationReport:
    ok_goals: bool = True
    ok_speed: bool = True
    ok_collision: bool = True
    ok_tcomm_node_times: bool = True
    tcomm_sampled_coverage: float = 1.0
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return (self.ok_goals and self.ok_speed and self.ok_collision
                and self.ok_tcomm_node_times)

    def to_json(self) -> dict:
        return {
            "ok_goals": self.ok_goals,
            "ok_speed": self.ok_speed,
            "ok_collision": self.ok_collision,
            "ok_tcomm_node_times": self.ok_tcomm_node_times,
            "tcomm_sampled_coverage": self.tcomm_sampled_coverage,
            "violations": [v.to_json() for v in self.violations],
        }


def _interp_many(times: list[float], pts, ts: np.ndarray) -> np.ndarray:
    """(S, 2) positions at ts with endpoint holds."""
    t = np.asarray(times)
    xs = np.asarray([p[0] for p in pts])
    ys = np.asarray([p[1] for p in pts])
    return np.stack([np.interp(ts, t, xs), np.interp(ts, t, ys)], axis=1)


def _connected(adj: np.ndarray) -> bool:
    """Reachability sweep over a boolean adjacency matrix."""
    n = adj.shape[0]
    seen = np.zeros(n, dtype=bool)
    stack = [0]
    seen[0] = True
    while stack:
        v = stack.pop()
        for u in np.nonzero(adj[v] & ~seen)[0]:
            seen[u] = True
            stack.append(int(u))
    return bool(seen.all())


def _pair_collision(times_a, pts_a, times_b, pts_b, t_lo, t_hi, d_c):
    """Earliest instant in [t_lo, t_hi] where the pair is strictly closer than
    d_c, scanning every overlapping linear piece (ends held); None if never."""
    d2 = d_c * d_c
    events = sorted(set([t_lo, t_hi]
                        + [t for t in times_a if t_lo < t < t_hi]
                        + [t for t in times_b if t_lo < t < t_hi]))
    ev = np.array(events)
    pa = _interp_many(times_a, pts_a, ev)
    pb = _interp_many(times_b, pts_b, ev)
    best = None

    for k in range(len(events) - 1):
        lo, hi = events[k], events[k + 1]
        span = hi - lo
        ax0, ay0 = pa[k]
        ax1, ay1 = pa[k + 1]
        bx0, by0 = pb[k]
        bx1, by1 = pb[k + 1]
        dx = ax0 - bx0
        dy = ay0 - by0
        if span > 0:
            ux = ((ax1 - ax0) - (bx1 - bx0)) / span
            uy = ((ay1 - ay0) - (by1 - by0)) / span
        else:
            ux = uy = 0.0
        a = ux * ux + uy * uy
        c0 = dx * dx + dy * dy - d2
        if c0 < 0:
            return lo, math.sqrt(max(c0 + d2, 0.0))
        if a < 1e-18:
            continue
        b = 2.0 * (dx * ux + dy * uy)
        disc = b * b - 4.0 * a * c0
        if disc <= 0:
            continue
        sq = math.sqrt(disc)
        tau_in = (-b - sq) / (2.0 * a)
        tau_out = (-b + sq) / (2.0 * a)
        if max(tau_in, 0.0) < min(tau_out, span):
            tstar = min(max(-b / (2.0 * a), 0.0), span)
            mx = dx + ux * tstar
            my = dy + uy * tstar
            return lo + max(tau_in, 0.0), math.sqrt(mx * mx + my * my)
    return best


def validate(instance, solution, dt: float = 0.05) -> ValidationReport:
    """Check a solution against its instance over [0, T_max]."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    paths = solution.paths if hasattr(solution, "paths") else solution
    n = instance.n
    if len(paths) != n:
        raise MismatchedInstance(f"{len(paths)} paths for {n} agents")
    model = instance.model
    v_c, d_c = instance.v_c, instance.d_c
    report = ValidationReport()
    t_max = max(p.times[-1] for p in paths)

    # (a) goals
    for i, p in enumerate(paths):
        gx, gy = instance.goals[i]
        ex, ey = p.pts[-1]
        err = math.hypot(ex - gx, ey - gy)
        if err > GOAL_TOL:
            report.ok_goals = False
            report.violations.append(Violation("goal", p.times[-1], (i,), err))

    # (b) speed
    for i, p in enumerate(paths):
        for k in range(len(p.times) - 1):
            span = p.times[k + 1] - p.times[k]
            d = math.hypot(p.pts[k + 1][0] - p.pts[k][0],
                           p.pts[k + 1][1] - p.pts[k][1])
            if span <= 0:
                if d > 1e-9:
                    report.ok_speed = False
                    report.violations.append(
                        Violation("speed", p.times[k], (i,), math.inf))
                continue
            if d / span > v_c + SPEED_TOL:
                report.ok_speed = False
                report.violations.append(
                    Violation("speed", p.times[k], (i,), d / span))

    # (c) pairwise collisions, analytic, ends held stationary
    for i in range(n):
        for j in range(i + 1, n):
            hit = _pair_collision(paths[i].times, paths[i].pts,
                                  paths[j].times, paths[j].pts,
                                  0.0, t_max, d_c)
            if hit is not None:
                report.ok_collision = False
                report.violations.append(
                    Violation("collision", hit[0], (i, j), hit[1]))

    # (d, e) team connectivity at waypoint times and on the dt grid
    node_times = sorted({t for p in paths for t in p.times})
    k_max = int(math.floor(t_max / dt + 1e-9))
    grid = [k * dt for k in range(k_max + 1)]
    all_times = np.array(node_times + grid)
    pos = np.empty((n, all_times.shape[0], 2))
    for i, p in enumerate(paths):
        pos[i] = _interp_many(p.times, p.pts, all_times)

    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    if pairs and n > 1:
        pi = np.array([a for a, _ in pairs])
        pj = np.array([b for _, b in pairs])
        if model.kind == "lcr":
            diff = pos[pi] - pos[pj]
            ok_pair = (diff[:, :, 0] ** 2 + diff[:, :, 1] ** 2
                       <= model.r_c * model.r_c)
        else:
            S = all_times.shape[0]
            a = pos[pi].reshape(-1, 2)
            b = pos[pj].reshape(-1, 2)
            ok_pair = ~segments_blocked(a, b, model.world).reshape(len(pairs), S)
    else:
        ok_pair = np.ones((0, all_times.shape[0]), dtype=bool)

    def connected_at(col: int) -> bool:
        if n == 1:
            return True
        adj = np.zeros((n, n), dtype=bool)
        for k, (a, b) in enumerate(pairs):
            if ok_pair[k, col]:
                adj[a, b] = adj[b, a] = True
        return _connected(adj)

    n_node = len(node_times)
    for col, t in enumerate(node_times):
        if not connected_at(col):
            report.ok_tcomm_node_times = False
            report.violations.append(Violation("tcomm_node", t, (), 0.0))
    ok_count = 0
    for k, t in enumerate(grid):
        if connected_at(n_node + k):
            ok_count += 1
        else:
            report.violations.append(Violation("tcomm_sampled", t, (), 0.0))
    report.tcomm_sampled_coverage = ok_count / len(grid) if grid else 1.0
    return report
