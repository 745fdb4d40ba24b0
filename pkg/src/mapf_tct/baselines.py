"""Comparison planners: joint-state A* over team configurations, platooning
leader-follower with random restarts, and synchronized priority stepping with
communication-filtered actions."""

from __future__ import annotations

import itertools
import math
import time
from heapq import heappush, heappop

import numpy as np

from .comm import (CommModel, MotionSegment, _sample_times, acomm_during_move,
                   acomm_static, collision_during_move, tcomm)
from .heuristics import get_heuristic
from .paths import Point, TimedPath
from .planner import (ALL_REACH_GOAL, PARTIAL, STUCK, TIMEOUT, PlannerConfig,
                      SolveStats, Solution, _at_goal, prepare, random_order)
from .sapf import plan_single
from .tct import GoalsDisconnected, StartsDisconnected
from .world import add_nodes


def _merge_holds(times: list[float], pts: list[Point]) -> tuple[list, list]:
    """Drop interior waypoints of constant-position runs."""
    keep_t = [times[0]]
    keep_p = [pts[0]]
    for k in range(1, len(pts)):
        same_prev = (abs(pts[k][0] - keep_p[-1][0]) <= 1e-12
                     and abs(pts[k][1] - keep_p[-1][1]) <= 1e-12)
        same_next = (k + 1 < len(pts)
                     and abs(pts[k][0] - pts[k + 1][0]) <= 1e-12
                     and abs(pts[k][1] - pts[k + 1][1]) <= 1e-12)
        if same_prev and same_next:
            continue
        keep_t.append(times[k])
        keep_p.append(pts[k])
    return keep_t, keep_p


def _team_valid(paths: list[TimedPath], model: CommModel, d_c: float) -> bool:
    """Planning-side sanity check: pairwise collision-free (ends held) and
    team-connected at every waypoint time."""
    n = len(paths)
    for i in range(n):
        for (p0, p1, t0, t1) in paths[i].segments():
            seg = MotionSegment.between(p0, p1, t0, t1)
            for j in range(n):
                if j != i and collision_during_move(seg, paths[j], d_c):
                    return False
    t_max = max(p.end_time for p in paths)
    node_times = sorted({t for p in paths for t in p.times} | {t_max})
    for t in node_times:
        if not tcomm([p.sample(t) for p in paths], model):
            return False
    return True


# ---- COMP: joint-state A* --------------------------------------------------

def solve_comp(instance, config: PlannerConfig | None = None) -> Solution:
    """A* over joint team states. Joint actions pick one move (or Stop) per
    agent; an action is legal when the synchronized transit is pairwise
    collision-free and team-connected at sampled instants. Cost is elapsed
    time, guided by the summed per-agent distance fields (scaled to time), so
    solutions are makespan-optimal."""
    config = config or PlannerConfig()
    t_begin = time.perf_counter()
    deadline = t_begin + config.t_ds
    n = instance.n
    model = instance.model
    v_c, d_c = instance.v_c, instance.d_c
    if not tcomm(list(instance.starts), model):
        raise StartsDisconnected("instance starts are not team-connected")
    if not tcomm(list(instance.goals), model):
        raise GoalsDisconnected("instance goals are not team-connected")

    ctx = prepare(instance, config)
    graph, start_ids = add_nodes(ctx.graph, list(instance.starts),
                                 neighbor_links=True)
    goal_ids = ctx.goal_ids
    fields = ctx.fields

    def hval(state) -> float:
        total = 0.0
        for i, v in enumerate(state):
            hi = get_heuristic(v, fields[i], graph)
            if not math.isfinite(hi):
                return math.inf
            total += hi
        return total / (n * v_c)

    start_state = tuple(start_ids)
    goal_state = tuple(goal_ids)
    h0 = hval(start_state)
    gscore = {start_state: 0.0}
    came_from: dict = {}
    heap = [(h0, h0, 0, start_state)]
    seq = 0
    closed: set = set()
    best_state = start_state
    best_h = h0
    timed_out = False

    def options(v: int):
        opts = [(v, graph.position(v), 0.0)]
        for u, w in graph.neighbors(v):
            opts.append((u, graph.position(u), w))
        return opts

    while heap:
        f, h, _, state = heappop(heap)
        if state in closed:
            continue
        t_now = gscore[state]
        closed.add(state)
        if h < best_h:
            best_h, best_state = h, state
        if state == goal_state:
            break
        if time.perf_counter() > deadline:
            timed_out = True
            break
        per_agent = [options(v) for v in state]
        count = 0
        for choice in itertools.product(*per_agent):
            count += 1
            if count % 512 == 0 and time.perf_counter() > deadline:
                timed_out = True
                break
            lens = [c[2] for c in choice]
            dur = max(lens) / v_c
            if dur <= 0:
                continue  # all-Stop is a no-op
            nxt = tuple(c[0] for c in choice)
            t_next = t_now + dur
            if nxt in closed:
                continue
            if t_next >= gscore.get(nxt, math.inf) - 1e-12:
                continue
            # synchronized transit: each agent moves then holds until t_next
            motions = []
            for i, (u, pos_u, w) in enumerate(choice):
                p0 = graph.position(state[i])
                if w > 0:
                    motions.append(TimedPath([t_now, t_now + w / v_c], [p0, pos_u]))
                else:
                    motions.append(TimedPath.single(p0, t_now))
            legal = True
            for i in range(n):
                segs = []
                mi = motions[i]
                if len(mi) > 1:
                    segs.append(MotionSegment.between(mi.pts[0], mi.pts[1],
                                                      mi.times[0], mi.times[1]))
                    if mi.times[1] < t_next:
                        segs.append(MotionSegment.between(mi.pts[1], mi.pts[1],
                                                          mi.times[1], t_next))
                else:
                    segs.append(MotionSegment.between(mi.pts[0], mi.pts[0],
                                                      t_now, t_next))
                for j in range(i + 1, n):
                    if any(collision_during_move(s, motions[j], d_c) for s in segs):
                        legal = False
                        break
                if not legal:
                    break
            if legal and n > 1:
                for t in _sample_times(t_now, t_next, config.dt_comm):
                    if not tcomm([m.sample(t) for m in motions], model):
                        legal = False
                        break
            if not legal:
                continue
            hn = hval(nxt)
            if not math.isfinite(hn):
                continue
            gscore[nxt] = t_next
            came_from[nxt] = (state, t_now, lens)
            seq += 1
            heappush(heap, (t_next + hn, hn, seq, nxt))
        if timed_out:
            break

    reached = (goal_state in closed) or (goal_state in gscore
                                         and best_state == goal_state)
    target = goal_state if goal_state in gscore else best_state
    paths = _comp_paths(instance, graph, start_ids, target, came_from, v_c)
    for j in range(n):
        paths[j].reached_goal = _at_goal(paths[j].end_pos, instance.goals[j])
    status = ALL_REACH_GOAL if all(p.reached_goal for p in paths) else TIMEOUT
    runtime = time.perf_counter() - t_begin
    stats = SolveStats(runtime=runtime, iterations=len(closed),
                       tct_nodes=len(gscore),
                       per_agent_travel=[p.length() for p in paths])
    return Solution(paths=paths, status=status, stats=stats)


def _comp_paths(instance, graph, start_ids, target, came_from, v_c):
    chain = []
    state = target
    while state in came_from:
        prev, t_prev, lens = came_from[state]
        chain.append((prev, state, t_prev, lens))
        state = prev
    chain.reverse()
    n = instance.n
    times = [[0.0] for _ in range(n)]
    pts = [[graph.position(v)] for v in start_ids]
    for prev, state, t_prev, lens in chain:
        for i in range(n):
            if lens[i] > 0:
                if times[i][-1] < t_prev - 1e-12:
                    times[i].append(t_prev)
                    pts[i].append(pts[i][-1])
                times[i].append(t_prev + lens[i] / v_c)
                pts[i].append(graph.position(state[i]))
    out = []
    for i in range(n):
        kt, kp = _merge_holds(times[i], pts[i])
        out.append(TimedPath(kt, kp))
    return out


# ---- PLF: platooning leader-follower ----------------------------------------

def solve_plf(instance, config: PlannerConfig | None = None) -> Solution:
    """Shuffle an order, plan the leader unconstrained, then each follower in
    one expansion with communication required against the already-planned
    paths; any failure restarts from scratch with a new shuffle."""
    config = config or PlannerConfig()
    t_begin = time.perf_counter()
    deadline = t_begin + config.t_ds
    n = instance.n
    model = instance.model
    v_c, d_c = instance.v_c, instance.d_c
    goals = list(instance.goals)
    starts = list(instance.starts)
    if not tcomm(starts, model):
        raise StartsDisconnected("instance starts are not team-connected")
    if not tcomm(goals, model):
        raise GoalsDisconnected("instance goals are not team-connected")

    ctx = prepare(instance, config)
    rng = np.random.default_rng(config.seed)
    attempts = 0
    last = None
    while time.perf_counter() < deadline:
        attempts += 1
        order = random_order(n, rng)
        planned: list[TimedPath | None] = [None] * n
        ok = True
        for k, i in enumerate(order):
            planned[i] = TimedPath.single(starts[i], 0.0,
                                          reached_goal=_at_goal(starts[i], goals[i]))
            if planned[i].reached_goal:
                continue
            budget = min(config.t_sa, deadline - time.perf_counter())
            if budget <= 0:
                ok = False
                break
            seg = plan_single(i, goals[i], ctx.graph, planned, ctx.fields[i],
                              model, d_c, budget, v_c=v_c,
                              dt_comm=config.dt_comm,
                              lead_mode="always" if k == 0 else "never")
            if len(seg) > 1:
                planned[i] = planned[i].extended(seg)
            if not planned[i].reached_goal:
                ok = False
                break
        last = planned
        if ok and all(p is not None for p in planned):
            paths = [p for p in planned]
            if _team_valid(paths, model, d_c):
                runtime = time.perf_counter() - t_begin
                stats = SolveStats(runtime=runtime, iterations=attempts,
                                   per_agent_travel=[p.length() for p in paths])
                return Solution(paths=paths, status=ALL_REACH_GOAL, stats=stats)
    paths = []
    for i in range(n):
        p = (last[i] if last and last[i] is not None
             else TimedPath.single(starts[i], 0.0))
        p.reached_goal = _at_goal(p.end_pos, goals[i])
        paths.append(p)
    runtime = time.perf_counter() - t_begin
    stats = SolveStats(runtime=runtime, iterations=attempts,
                       per_agent_travel=[p.length() for p in paths])
    return Solution(paths=paths, status=TIMEOUT, stats=stats)


# ---- PIBT-COMM: synchronized priority stepping ------------------------------

def solve_pibt_comm(instance, config: PlannerConfig | None = None) -> Solution:
    """Priority inheritance with backtracking over the navigation graph.
    All agents step synchronously (fixed step duration, movers retimed over
    the whole step); a non-first agent's candidate actions are filtered to
    those keeping communication with an agent that already moved this step."""
    config = config or PlannerConfig()
    t_begin = time.perf_counter()
    deadline = t_begin + config.t_ds
    n = instance.n
    model = instance.model
    v_c, d_c = instance.v_c, instance.d_c
    goals = list(instance.goals)
    starts = list(instance.starts)
    if not tcomm(starts, model):
        raise StartsDisconnected("instance starts are not team-connected")
    if not tcomm(goals, model):
        raise GoalsDisconnected("instance goals are not team-connected")

    ctx = prepare(instance, config)
    graph, start_ids = add_nodes(ctx.graph, starts, neighbor_links=True)
    goal_ids = list(ctx.goal_ids)
    fields = ctx.fields
    step_dur = math.sqrt(2.0) * config.resolution / v_c

    rng = np.random.default_rng(config.seed)
    eta = rng.permutation(n) / n       # stable random tie-break priorities
    since_goal = [0] * n
    pos_ids = list(start_ids)
    wp_times = [[0.0] for _ in range(n)]
    wp_pts = [[graph.position(v)] for v in start_ids]
    T = 0.0
    clean = True
    status = TIMEOUT
    max_steps = 200000

    for _ in range(max_steps):
        if all(pos_ids[i] == goal_ids[i] for i in range(n)):
            status = ALL_REACH_GOAL if clean else TIMEOUT
            break
        if time.perf_counter() > deadline:
            status = TIMEOUT
            break
        order = sorted(range(n), key=lambda i: -(since_goal[i] + eta[i]))
        first = order[0]
        decided: dict[int, tuple[int, TimedPath]] = {}
        occupied_next: dict[int, int] = {}
        current_vid = {pos_ids[i]: i for i in range(n)}

        def motion_of(i: int, to_vid: int) -> TimedPath:
            p0 = graph.position(pos_ids[i])
            p1 = graph.position(to_vid)
            if to_vid == pos_ids[i]:
                return TimedPath([T, T + step_dur], [p0, p0])
            return TimedPath([T, T + step_dur], [p0, p1])

        def feasible(i: int, to_vid: int, pending: list[TimedPath]) -> bool:
            mo = motion_of(i, to_vid)
            seg = MotionSegment.between(mo.pts[0], mo.pts[1], mo.times[0],
                                        mo.times[1])
            others = [m for _, m in decided.values()] + pending
            for m in others:
                if collision_during_move(seg, m, d_c):
                    return False
            if i != first:
                partners = others
                if partners and not any(
                        acomm_during_move(seg, m, model, config.dt_comm)
                        for m in partners):
                    return False
            return True

        def pibt(i: int, pending: list[TimedPath]) -> bool:
            cands = [(get_heuristic(u, fields[i], graph), k, u)
                     for k, (u, _) in enumerate(graph.neighbors(pos_ids[i]))]
            cands.append((get_heuristic(pos_ids[i], fields[i], graph),
                          len(cands), pos_ids[i]))
            cands.sort()
            for _, _, u in cands:
                if u in occupied_next:
                    continue
                # no head-on swaps with already-decided agents
                if any(tv == pos_ids[i] and pos_ids[j] == u
                       for j, (tv, _) in decided.items()):
                    continue
                if not feasible(i, u, pending):
                    continue
                holder = current_vid.get(u)
                if holder is not None and holder != i and holder not in decided:
                    mo = motion_of(i, u)
                    occupied_next[u] = i
                    if not pibt(holder, pending + [mo]):
                        del occupied_next[u]
                        continue
                    decided[i] = (u, mo)
                    return True
                occupied_next[u] = i
                decided[i] = (u, motion_of(i, u))
                return True
            # forced stay; flag runs whose stay breaks the checked rules
            mo = motion_of(i, pos_ids[i])
            if not feasible(i, pos_ids[i], pending):
                nonlocal clean
                clean = False
            occupied_next[pos_ids[i]] = i
            decided[i] = (pos_ids[i], mo)
            return False

        for i in order:
            if i not in decided:
                pibt(i, [])

        moved = False
        for i in range(n):
            to_vid, _ = decided[i]
            if to_vid != pos_ids[i]:
                moved = True
            pos_ids[i] = to_vid
            wp_times[i].append(T + step_dur)
            wp_pts[i].append(graph.position(to_vid))
            if pos_ids[i] == goal_ids[i]:
                since_goal[i] = 0
            else:
                since_goal[i] += 1
        T += step_dur
        if not moved:
            status = (ALL_REACH_GOAL
                      if all(pos_ids[i] == goal_ids[i] for i in range(n))
                      and clean else STUCK)
            break

    paths = []
    for i in range(n):
        kt, kp = _merge_holds(wp_times[i], wp_pts[i])
        p = TimedPath(kt, kp)
        p.reached_goal = _at_goal(p.end_pos, goals[i])
        paths.append(p)
    if status == ALL_REACH_GOAL and not all(p.reached_goal for p in paths):
        status = TIMEOUT
    runtime = time.perf_counter() - t_begin
    stats = SolveStats(runtime=runtime, iterations=int(T / step_dur),
                       per_agent_travel=[p.length() for p in paths])
    return Solution(paths=paths, status=status, stats=stats)
