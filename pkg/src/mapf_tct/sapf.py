"""Low-level single-agent pathfinding with dynamic leading: best-first search
in continuous time over the augmented graph, with per-action collision and
communication checks against the other agents' planned paths."""

from __future__ import annotations

import math
import time
from heapq import heappush, heappop

import numpy as np

from .comm import CommModel, LCR, _sample_times
from .heuristics import HeuristicField, get_heuristic
from .paths import Point, TimedPath
from .world import NavGraph, PointBlocked, segments_blocked

BIG_T = 1e18


class PathEnsemble:
    """Piece-array view of the other agents' planned paths for one search call.

    Paths hold their first/last positions outside their time span. All checks
    are vectorized over the concatenated linear pieces (holds included).
    """

    def __init__(self, planned: list[TimedPath | None], exclude: int,
                 model: CommModel, d_c: float, dt_comm: float = 0.25):
        self.model = model
        self.d_c = d_c
        self.dt_comm = dt_comm
        self.paths: list[TimedPath] = []
        for i, p in enumerate(planned):
            if i == exclude or p is None:
                continue
            self.paths.append(p)
        self.m = len(self.paths)
        self.max_end = max((p.end_time for p in self.paths), default=-math.inf)
        self.reached = np.array([p.reached_goal for p in self.paths], dtype=bool)

        p0x, p0y, vx, vy, t0, t1, tref, pid = [], [], [], [], [], [], [], []
        for k, p in enumerate(self.paths):
            ts, ps = p.times, p.pts
            # pre-span hold
            p0x.append(ps[0][0]); p0y.append(ps[0][1])
            vx.append(0.0); vy.append(0.0)
            t0.append(-BIG_T); t1.append(ts[0]); tref.append(ts[0]); pid.append(k)
            for i in range(len(ts) - 1):
                span = ts[i + 1] - ts[i]
                if span <= 0:
                    continue
                p0x.append(ps[i][0]); p0y.append(ps[i][1])
                vx.append((ps[i + 1][0] - ps[i][0]) / span)
                vy.append((ps[i + 1][1] - ps[i][1]) / span)
                t0.append(ts[i]); t1.append(ts[i + 1]); tref.append(ts[i]); pid.append(k)
            # post-span hold
            p0x.append(ps[-1][0]); p0y.append(ps[-1][1])
            vx.append(0.0); vy.append(0.0)
            t0.append(ts[-1]); t1.append(BIG_T); tref.append(ts[-1]); pid.append(k)
        self.p0x = np.array(p0x); self.p0y = np.array(p0y)
        self.vx = np.array(vx); self.vy = np.array(vy)
        self.t0 = np.array(t0); self.t1 = np.array(t1)
        self.tref = np.array(tref)
        self.pid = np.array(pid, dtype=np.intp)

    # -- geometry kernels --------------------------------------------------

    def _window(self, ta0: float, ta1: float):
        sel = np.nonzero((self.t0 <= ta1) & (self.t1 >= ta0))[0]
        lo = np.maximum(self.t0[sel], ta0)
        hi = np.minimum(self.t1[sel], ta1)
        return sel, lo, hi

    def _relative(self, move, sel, lo):
        (ax, ay), (bx, by), ta0, ta1 = move
        if ta1 > ta0:
            avx = (bx - ax) / (ta1 - ta0)
            avy = (by - ay) / (ta1 - ta0)
        else:
            avx = avy = 0.0
        dx = (ax + avx * (lo - ta0)) - (self.p0x[sel]
                                        + self.vx[sel] * (lo - self.tref[sel]))
        dy = (ay + avy * (lo - ta0)) - (self.p0y[sel]
                                        + self.vy[sel] * (lo - self.tref[sel]))
        ux = avx - self.vx[sel]
        uy = avy - self.vy[sel]
        return dx, dy, ux, uy

    def collides(self, move) -> bool:
        """Strict closest-point-of-approach collision (< d_c) on any piece."""
        if self.m == 0:
            return False
        sel, lo, hi = self._window(move[2], move[3])
        if sel.size == 0:
            return False
        dx, dy, ux, uy = self._relative(move, sel, lo)
        span = hi - lo
        a = ux * ux + uy * uy
        with np.errstate(divide="ignore", invalid="ignore"):
            tstar = np.where(a < 1e-18, 0.0,
                             np.clip(-(dx * ux + dy * uy) / np.maximum(a, 1e-300),
                                     0.0, span))
        mx = dx + ux * tstar
        my = dy + uy * tstar
        return bool((mx * mx + my * my < self.d_c * self.d_c).any())

    def cover_each(self, move) -> np.ndarray:
        """Per-path bool: does that path keep communication with the mover
        over the whole move interval?"""
        if self.model.kind == LCR:
            sel, lo, hi = self._window(move[2], move[3])
            dx, dy, ux, uy = self._relative(move, sel, lo)
            span = hi - lo
            d2lo = dx * dx + dy * dy
            ex = dx + ux * span
            ey = dy + uy * span
            d2hi = ex * ex + ey * ey
            worst = np.maximum(d2lo, d2hi)
            path_max = np.zeros(self.m)
            np.maximum.at(path_max, self.pid[sel], worst)
            return path_max <= self.model.r_c * self.model.r_c
        blocked = self._los_blocked(move)
        return ~blocked.any(axis=1)

    def union_cover(self, move) -> bool:
        """At every sampled instant, some path is in communication."""
        if self.m == 0:
            return False
        if self.model.kind == LCR:
            ts = _sample_times(move[2], move[3], self.dt_comm)
            mover = self._mover_positions(move, ts)
            r2 = self.model.r_c * self.model.r_c
            for s, t in enumerate(ts):
                px, py = mover[s]
                ok = False
                for p in self.paths:
                    qx, qy = p.sample(t)
                    if (px - qx) ** 2 + (py - qy) ** 2 <= r2:
                        ok = True
                        break
                if not ok:
                    return False
            return True
        blocked = self._los_blocked(move)
        return bool((~blocked).any(axis=0).all())

    def _mover_positions(self, move, ts):
        (ax, ay), (bx, by), ta0, ta1 = move
        out = []
        for t in ts:
            if ta1 > ta0:
                u = min(max((t - ta0) / (ta1 - ta0), 0.0), 1.0)
            else:
                u = 0.0
            out.append((ax + u * (bx - ax), ay + u * (by - ay)))
        return out

    def _los_blocked(self, move) -> np.ndarray:
        """(m, S) visibility-blocked matrix at the sample grid."""
        ts = np.array(_sample_times(move[2], move[3], self.dt_comm))
        S = ts.shape[0]
        mover = np.array(self._mover_positions(move, ts))
        others = self._interp_all(ts)
        pflat = np.broadcast_to(mover, (self.m, S, 2)).reshape(-1, 2)
        blocked = segments_blocked(pflat, others.reshape(-1, 2), self.model.world)
        return blocked.reshape(self.m, S)

    def _interp_all(self, ts: np.ndarray) -> np.ndarray:
        """(m, S, 2) other-agent positions at the given times (ends held)."""
        if not hasattr(self, "_parrs"):
            self._parrs = []
            for p in self.paths:
                self._parrs.append((np.array(p.times),
                                    np.array([q[0] for q in p.pts]),
                                    np.array([q[1] for q in p.pts])))
        out = np.empty((self.m, ts.shape[0], 2))
        for k, (pt, px, py) in enumerate(self._parrs):
            out[k, :, 0] = np.interp(ts, pt, px)
            out[k, :, 1] = np.interp(ts, pt, py)
        return out

    def batch_los(self, vpos: Point, vt: float, ends, durs) -> list[np.ndarray]:
        """Visibility-blocked matrices for all candidate actions at once:
        one segments_blocked call over every (action, sample, path) triple."""
        grids = []
        movers = []
        offsets = [0]
        for (ex, ey), dur in zip(ends, durs):
            ts = np.array(_sample_times(vt, vt + dur, self.dt_comm))
            if dur > 0:
                u = np.clip((ts - vt) / dur, 0.0, 1.0)
            else:
                u = np.zeros_like(ts)
            movers.append(np.stack([vpos[0] + u * (ex - vpos[0]),
                                    vpos[1] + u * (ey - vpos[1])], axis=1))
            grids.append(ts)
            offsets.append(offsets[-1] + ts.shape[0])
        all_ts = np.concatenate(grids)
        all_mover = np.concatenate(movers, axis=0)       # (T, 2)
        others = self._interp_all(all_ts)                # (m, T, 2)
        T = all_ts.shape[0]
        pflat = np.broadcast_to(all_mover, (self.m, T, 2)).reshape(-1, 2)
        blocked = segments_blocked(pflat, others.reshape(-1, 2),
                                   self.model.world).reshape(self.m, T)
        return [blocked[:, offsets[k]:offsets[k + 1]]
                for k in range(len(ends))]

    def positions_at(self, t: float) -> list[Point]:
        return [p.sample(t) for p in self.paths]

    # -- batched kernel over all candidate actions of one expansion ---------

    def batch_checks(self, vpos: Point, vt: float, ends, durs):
        """For A candidate moves sharing the start (vpos, vt): returns
        (collides (A,), covered (A,)) where covered holds only for the range
        model (per-path full-interval coverage, any path); for line of sight
        covered is None and callers fall back to per-action checks."""
        A = len(ends)
        durs = np.asarray(durs, dtype=float)
        ux_a = np.array([e[0] for e in ends])
        uy_a = np.array([e[1] for e in ends])
        ut_a = vt + durs
        with np.errstate(divide="ignore", invalid="ignore"):
            avx = np.where(durs > 0, (ux_a - vpos[0]) / np.maximum(durs, 1e-300), 0.0)
            avy = np.where(durs > 0, (uy_a - vpos[1]) / np.maximum(durs, 1e-300), 0.0)

        # only pieces whose time span can intersect the widest action window
        ut_max = float(ut_a.max())
        sel = np.nonzero((self.t0 <= ut_max) & (self.t1 >= vt))[0]
        t0s, t1s, trefs = self.t0[sel], self.t1[sel], self.tref[sel]
        vxs, vys, pids = self.vx[sel], self.vy[sel], self.pid[sel]

        lo = np.maximum(t0s, vt)                     # (Ms,)
        hi = np.minimum(t1s[None, :], ut_a[:, None])  # (A, Ms)
        mask = hi >= lo[None, :]
        # other-agent positions at lo are shared across actions
        qlx = self.p0x[sel] + vxs * (lo - trefs)
        qly = self.p0y[sel] + vys * (lo - trefs)
        dx = (vpos[0] + avx[:, None] * (lo - vt)[None, :]) - qlx[None, :]
        dy = (vpos[1] + avy[:, None] * (lo - vt)[None, :]) - qly[None, :]
        rux = avx[:, None] - vxs[None, :]
        ruy = avy[:, None] - vys[None, :]
        span = np.where(mask, hi - lo[None, :], 0.0)
        a = rux * rux + ruy * ruy
        with np.errstate(divide="ignore", invalid="ignore"):
            tstar = np.where(a < 1e-18, 0.0,
                             np.clip(-(dx * rux + dy * ruy)
                                     / np.maximum(a, 1e-300), 0.0, span))
        mx = dx + rux * tstar
        my = dy + ruy * tstar
        min_d2 = mx * mx + my * my
        collides = ((min_d2 < self.d_c * self.d_c) & mask).any(axis=1)

        covered = None
        if self.model.kind == LCR:
            ex = dx + rux * span
            ey = dy + ruy * span
            d2lo = dx * dx + dy * dy
            d2hi = ex * ex + ey * ey
            worst = np.where(mask, np.maximum(d2lo, d2hi), 0.0)
            keys = (np.arange(A)[:, None] * self.m + pids[None, :]).ravel()
            path_max = np.zeros(A * self.m)
            np.maximum.at(path_max, keys, worst.ravel())
            covered = (path_max.reshape(A, self.m)
                       <= self.model.r_c * self.model.r_c)
        return collides, covered


def _comm_at_goal(ens: PathEnsemble, move, model: CommModel) -> bool:
    """Leadership guard: a new leader whose current neighbors include agents
    parked at their goals must keep communication with at least one of them
    for the whole move; with no parked neighbor the guard passes."""
    if ens.m == 0:
        return True
    from .comm import acomm_static

    (vx, vy), _, vt, _ = move
    at_goal_nbrs = []
    for k, p in enumerate(ens.paths):
        if not ens.reached[k]:
            continue
        if acomm_static((vx, vy), p.sample(vt), model):
            at_goal_nbrs.append(k)
    if not at_goal_nbrs:
        return True
    cover = ens.cover_each(move)
    return bool(cover[at_goal_nbrs].any())


def _action_valid(ens: PathEnsemble, move, lead_mode: str) -> bool:
    """Dynamic-leading action check: collision-free and (leader or in
    communication with at least one planned path)."""
    ut = move[3]
    if lead_mode == "never":
        lead = False
    elif ens.m == 0 or lead_mode == "always":
        lead = True
    else:
        lead = ut > ens.max_end
        if lead:
            lead = _comm_at_goal(ens, move, ens.model)
    if ens.collides(move):
        return False
    if lead:
        return True
    if ens.m == 0:
        return False
    if ens.cover_each(move).any():
        return True
    return ens.union_cover(move)


class SearchNode:
    """Timed search node over the augmented graph (g in meters, t in seconds)."""

    __slots__ = ("vertex", "t", "g", "h", "f", "parent", "closed")

    def __init__(self, vertex: int, t: float, g: float, h: float,
                 parent: "SearchNode | None"):
        self.vertex = vertex
        self.t = t
        self.g = g
        self.h = h
        self.f = g + h
        self.parent = parent
        self.closed = False


def _move_of(graph: NavGraph, u: SearchNode, v: SearchNode):
    return (graph.position(v.vertex), graph.position(u.vertex), v.t, u.t)


def is_action_valid(agent: int, planned: list[TimedPath | None],
                    u: SearchNode, v: SearchNode, model: CommModel,
                    d_c: float, dt_comm: float = 0.25,
                    graph: NavGraph | None = None,
                    move=None, lead_mode: str = "dynamic") -> bool:
    """Standalone action check (tests / re-validation). The search itself uses
    a prebuilt PathEnsemble with the same kernel."""
    ens = PathEnsemble(planned, exclude=agent, model=model, d_c=d_c,
                       dt_comm=dt_comm)
    if move is None:
        move = _move_of(graph, u, v)
    return _action_valid(ens, move, lead_mode)


def is_comm_at_goal(u: SearchNode, planned: list[TimedPath | None],
                    agent: int, model: CommModel,
                    graph: NavGraph | None = None, move=None,
                    d_c: float = 0.5, dt_comm: float = 0.25) -> bool:
    ens = PathEnsemble(planned, exclude=agent, model=model, d_c=d_c,
                       dt_comm=dt_comm)
    if move is None:
        move = (graph.position(u.parent.vertex), graph.position(u.vertex),
                u.parent.t, u.t)
    return _comm_at_goal(ens, move, model)


def _reconstruct(graph: NavGraph, node: SearchNode, goal: Point) -> TimedPath:
    chain = []
    cur: SearchNode | None = node
    while cur is not None:
        chain.append(cur)
        cur = cur.parent
    chain.reverse()
    times: list[float] = []
    pts: list[Point] = []
    for nd in chain:
        p = graph.position(nd.vertex)
        if times and nd.t == times[-1] and p == pts[-1]:
            continue  # zero-length hop through an injected duplicate
        times.append(nd.t)
        pts.append(p)
    end = pts[-1]
    reached = math.hypot(end[0] - goal[0], end[1] - goal[1]) <= 1e-9
    return TimedPath(times, pts, reached_goal=reached)


def plan_single(agent: int, goal: Point, graph: NavGraph,
                planned: list[TimedPath | None], field: HeuristicField,
                model: CommModel, d_c: float, budget: float,
                v_c: float = 1.0, dt_comm: float = 0.25,
                lead_mode: str = "dynamic", reopen_reinsert: bool = False,
                max_pops: int | None = None,
                memo: dict | None = None) -> TimedPath:
    """Grow one agent's path from the end of its planned prefix toward its
    goal. Returns the goal-reaching segment if found within budget, else the
    path to the lowest-(f, h) node seen; a single-waypoint segment signals a
    stalled agent for this round.

    memo (optional dict) caches results by the content of (agent, own end,
    other paths): reselected tree nodes replay identical subproblems, and the
    search is deterministic given its inputs.
    """
    own = planned[agent]
    key = None
    if memo is not None:
        key = (agent, own.content_key(),
               tuple((p.content_key(), p.reached_goal)
                     for i, p in enumerate(planned)
                     if i != agent and p is not None))
        hit = memo.get(key)
        if hit is not None:
            return hit
    result = _plan_single_search(agent, goal, graph, planned, field, model,
                                 d_c, budget, v_c, dt_comm, lead_mode,
                                 reopen_reinsert, max_pops)
    if memo is not None:
        memo[key] = result
    return result


def _plan_single_search(agent, goal, graph, planned, field, model, d_c,
                        budget, v_c, dt_comm, lead_mode, reopen_reinsert,
                        max_pops) -> TimedPath:
    own = planned[agent]
    start_pos, start_t = own.end_pos, own.end_time
    try:
        aug, (goal_id, start_id) = graph.with_points(
            [goal, start_pos], neighbor_links=True)
    except PointBlocked:
        return TimedPath.single(start_pos, start_t)

    ens = PathEnsemble(planned, exclude=agent, model=model, d_c=d_c,
                       dt_comm=dt_comm)
    h0 = get_heuristic(start_id, field, aug)
    if not math.isfinite(h0):
        return TimedPath.single(start_pos, start_t)
    root = SearchNode(start_id, start_t, 0.0, h0, None)
    if start_id == goal_id:
        return _reconstruct(aug, root, goal)
    nodes: dict[int, SearchNode] = {start_id: root}
    open_heap: list[tuple[float, float, int, int]] = []
    seq = 0
    heappush(open_heap, (root.f, root.h, seq, start_id))
    best = root
    best_key = (root.f, root.h)
    deadline = time.perf_counter() + budget
    pops = 0

    def consider_best(nd: SearchNode):
        nonlocal best, best_key
        key = (nd.f, nd.h)
        if key < best_key:
            best = nd
            best_key = key

    while open_heap:
        f, h, _, vid = heappop(open_heap)
        node = nodes[vid]
        if node.closed or f != node.f:
            continue
        if time.perf_counter() > deadline:
            break
        pops += 1
        if max_pops is not None and pops > max_pops:
            break
        node.closed = True
        if vid == goal_id:
            return _reconstruct(aug, node, goal)
        vpos = aug.position(vid)

        cands = []  # (u, upos, ut, ug, uh, existing node or None)
        for u, w in aug.neighbors(vid):
            ut = node.t + w / v_c
            ug = node.g + w
            un = nodes.get(u)
            if un is None:
                uh = get_heuristic(u, field, aug)
                if math.isfinite(uh):
                    cands.append((u, aug.position(u), ut, ug, uh, None))
            elif ug < un.g - 1e-12:
                cands.append((u, aug.position(u), ut, ug, un.h, un))
        if not cands:
            continue

        valid = _batch_valid(ens, vpos, node.t, cands, lead_mode)

        for k, (u, upos, ut, ug, uh, un) in enumerate(cands):
            if not valid[k]:
                continue
            if un is None:
                un = SearchNode(u, ut, ug, uh, node)
                nodes[u] = un
                seq += 1
                heappush(open_heap, (un.f, un.h, seq, u))
                if u == goal_id:
                    return _reconstruct(aug, un, goal)
                consider_best(un)
            else:
                un.parent = node
                un.t = ut
                un.g = ug
                un.f = ug + un.h
                if not un.closed:
                    seq += 1
                    heappush(open_heap, (un.f, un.h, seq, u))
                elif reopen_reinsert:
                    un.closed = False
                    seq += 1
                    heappush(open_heap, (un.f, un.h, seq, u))
                consider_best(un)
    return _reconstruct(aug, best, goal)


def _batch_valid(ens: PathEnsemble, vpos: Point, vt: float, cands,
                 lead_mode: str) -> list[bool]:
    """Validity of all candidate actions expanding one node, sharing the
    vectorized collision/coverage arrays."""
    A = len(cands)
    if ens.m == 0:
        return [lead_mode != "never"] * A
    ends = [c[1] for c in cands]
    durs = [c[2] - vt for c in cands]
    collides, covered = ens.batch_checks(vpos, vt, ends, durs)
    los_blocked: list[np.ndarray] | None = None
    if covered is None and not collides.all():
        los_blocked = ens.batch_los(vpos, vt, ends, durs)

    at_goal_nbrs: list[int] | None = None

    def goal_neighbors() -> list[int]:
        nonlocal at_goal_nbrs
        if at_goal_nbrs is None:
            from .comm import acomm_static
            at_goal_nbrs = [k for k, p in enumerate(ens.paths)
                            if ens.reached[k]
                            and acomm_static(vpos, p.sample(vt), ens.model)]
        return at_goal_nbrs

    out = []
    for k, (u, upos, ut, ug, uh, un) in enumerate(cands):
        if collides[k]:
            out.append(False)
            continue
        move = (vpos, upos, vt, ut)
        if covered is not None:
            cover_k = covered[k]
        else:
            cover_k = ~los_blocked[k].any(axis=1)
        if lead_mode == "never":
            lead = False
        elif lead_mode == "always":
            lead = True
        else:
            lead = ut > ens.max_end
            if lead:
                nbrs = goal_neighbors()
                if nbrs:
                    lead = bool(cover_k[nbrs].any())
        if lead:
            out.append(True)
            continue
        comm = bool(cover_k.any())
        if not comm:
            if covered is not None:
                comm = ens.union_cover(move)
            else:
                comm = bool((~los_blocked[k]).any(axis=0).all())
        out.append(comm)
    return out
