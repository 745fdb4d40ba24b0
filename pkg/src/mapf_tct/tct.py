"""Team communication tree: timestamped team configurations, weighted cost
model, penalized node selection, and expansion from a round of agent paths."""

from __future__ import annotations

import math
from bisect import bisect_right
from heapq import heappush, heappop

import numpy as np

from .comm import CommModel, UnionFind, tcomm
from .paths import Point, TimedPath


class StartsDisconnected(Exception):
    """Start configuration does not satisfy team connectivity."""


class GoalsDisconnected(Exception):
    """Goal configuration does not satisfy team connectivity."""


def node_cost(g: float, h: float, alpha: float) -> float:
    """Weighted node cost; single definition so tests reproduce it bit-exactly."""
    return alpha * g + (1.0 - alpha) * h


class TCTNode:
    __slots__ = ("id", "parent", "state", "t", "g", "h", "f_base", "penalty",
                 "costogoal")

    def __init__(self, nid: int, parent: int | None, state: list[Point],
                 t: float, g: float, h: float, alpha: float):
        self.id = nid
        self.parent = parent
        self.state = state
        self.t = t
        self.g = g
        self.h = h
        self.f_base = node_cost(g, h, alpha)
        self.penalty = 0.0
        self.costogoal: list[float] | None = None  # per-agent bookkeeping

    @property
    def f(self) -> float:
        return self.f_base + self.penalty


class Tct:
    """Append-only tree of team configurations with a penalized frontier."""

    def __init__(self, alpha: float):
        self.alpha = alpha
        self.nodes: list[TCTNode] = []
        self._heap: list[tuple[float, float, int]] = []

    def __len__(self) -> int:
        return len(self.nodes)

    def add(self, parent: int | None, state: list[Point], t: float,
            g: float, h: float) -> TCTNode:
        node = TCTNode(len(self.nodes), parent, state, t, g, h, self.alpha)
        self.nodes.append(node)
        heappush(self._heap, (node.f, -node.t, node.id))
        return node


def init_tree(starts: list[Point], model: CommModel, alpha: float,
              h0: float) -> Tct:
    """Tree with a single root at the start configuration (t = 0, g = 0)."""
    if not tcomm(starts, model):
        raise StartsDisconnected("start configuration is not team-connected")
    tree = Tct(alpha)
    tree.add(None, list(starts), 0.0, 0.0, h0)
    return tree


def select_node(tree: Tct, c: float) -> TCTNode:
    """Pop the lowest-f node (ties: larger t, then lower id), then penalize it
    by c so repeated selection drifts to alternatives."""
    heap = tree._heap
    while heap:
        f, negt, nid = heap[0]
        node = tree.nodes[nid]
        if f != node.f:
            heappop(heap)  # stale entry from an earlier penalty bump
            continue
        heappop(heap)
        node.penalty += c
        heappush(heap, (node.f, -node.t, node.id))
        return node
    raise ValueError("empty tree")


def closest_node_to_goal(tree: Tct) -> TCTNode:
    """Node with minimum h (ties: lower t, then lower id)."""
    return min(tree.nodes, key=lambda nd: (nd.h, nd.t, nd.id))


def get_pos_at_time(path: TimedPath, t: float) -> Point:
    """Linear interpolation between the bracketing waypoints; t must lie
    within the path's time span."""
    times = path.times
    if t < times[0] - 1e-9 or t > times[-1] + 1e-9:
        raise ValueError(f"time {t} outside path span [{times[0]}, {times[-1]}]")
    if t <= times[0]:
        return path.pts[0]
    if t >= times[-1]:
        return path.pts[-1]
    i = bisect_right(times, t) - 1
    if times[i] == t:
        return path.pts[i]
    u = (t - times[i]) / (times[i + 1] - times[i])
    x0, y0 = path.pts[i]
    x1, y1 = path.pts[i + 1]
    return (x0 + u * (x1 - x0), y0 + u * (y1 - y0))


def expand_tree(tree: Tct, paths: list[TimedPath], node: TCTNode,
                model: CommModel, point_h, h_mode: str = "bookkeeping",
                ) -> tuple[int, bool]:
    """Chain new nodes under `node`, one per distinct waypoint time across all
    paths, while team connectivity holds.

    point_h(agent_index, point) estimates an agent's remaining distance to its
    goal. Returns (nodes added, completed) where completed is False when the
    expansion stopped early (connectivity break or a stalled path overrun).
    """
    n = len(paths)
    times: list[float] = []
    for p in paths:
        times.extend(p.times)
    times.sort()
    # distinct event times after the node's timestamp
    events: list[float] = []
    for t in times:
        if t <= node.t + 1e-9:
            continue
        if events and t - events[-1] < 1e-9:
            continue
        events.append(t)
    if not events:
        return 0, True

    # a stalled (non-goal) path cannot provide positions beyond its end
    cutoff = len(events)
    for p in paths:
        if not p.reached_goal:
            over = np.searchsorted(np.array(events), p.end_time + 1e-12)
            cutoff = min(cutoff, int(over))
    truncated = cutoff < len(events)
    events = events[:cutoff]
    if not events:
        return 0, False if truncated else True

    ev = np.array(events)
    E = ev.shape[0]
    pos = np.empty((n, E, 2))
    for j, p in enumerate(paths):
        pt = np.array(p.times)
        pos[j, :, 0] = np.interp(ev, pt, np.array([q[0] for q in p.pts]))
        pos[j, :, 1] = np.interp(ev, pt, np.array([q[1] for q in p.pts]))

    # per-event pairwise connectivity
    if n > 1:
        pi, pj = np.triu_indices(n, k=1)
        if model.kind == "lcr":
            diff = pos[pi] - pos[pj]
            ok_pair = (diff[:, :, 0] ** 2 + diff[:, :, 1] ** 2
                       <= model.r_c * model.r_c)
        else:
            from .world import segments_blocked
            a = pos[pi].reshape(-1, 2)
            b = pos[pj].reshape(-1, 2)
            ok_pair = ~segments_blocked(a, b, model.world).reshape(len(pi), E)
    else:
        pi = pj = np.zeros(0, dtype=int)
        ok_pair = np.zeros((0, E), dtype=bool)

    prev = np.array([node.state[j] for j in range(n)])
    disp = np.empty((n, E))
    d0 = pos[:, 0, :] - prev
    disp[:, 0] = np.hypot(d0[:, 0], d0[:, 1])
    if E > 1:
        dd = pos[:, 1:, :] - pos[:, :-1, :]
        disp[:, 1:] = np.hypot(dd[:, :, 0], dd[:, :, 1])

    # remaining path length plus goal distance from the path end
    costogoal = [p.length() + point_h(j, p.end_pos) for j, p in enumerate(paths)]

    parent = node
    added = 0
    for k in range(E):
        if n > 1:
            uf = UnionFind(n)
            row = ok_pair[:, k]
            for e in np.nonzero(row)[0]:
                uf.union(int(pi[e]), int(pj[e]))
            root = uf.find(0)
            if any(uf.find(i) != root for i in range(1, n)):
                return added, False
        g = parent.g
        h = 0.0
        state = [(float(pos[j, k, 0]), float(pos[j, k, 1])) for j in range(n)]
        for j in range(n):
            d = float(disp[j, k])
            g += d
            costogoal[j] -= d
            if h_mode == "bookkeeping":
                h += max(costogoal[j], 0.0)
        if h_mode == "field_lookup":
            h = sum(point_h(j, state[j]) for j in range(n))
        parent = tree.add(parent.id, state, float(ev[k]), g, h)
        added += 1
    return added, not truncated


def get_paths(tree: Tct, node: TCTNode) -> list[TimedPath]:
    """Per-agent timed paths reconstructed along the root-to-node chain.

    Consecutive duplicate positions merge into Stop holds (first and last
    waypoint of each run kept)."""
    chain: list[TCTNode] = []
    cur: TCTNode | None = node
    while cur is not None:
        chain.append(cur)
        cur = tree.nodes[cur.parent] if cur.parent is not None else None
    chain.reverse()
    n = len(node.state)
    out: list[TimedPath] = []
    for j in range(n):
        times = [nd.t for nd in chain]
        pts = [nd.state[j] for nd in chain]
        keep_t: list[float] = [times[0]]
        keep_p: list[Point] = [pts[0]]
        for k in range(1, len(pts)):
            same_prev = _close(pts[k], keep_p[-1])
            same_next = k + 1 < len(pts) and _close(pts[k], pts[k + 1])
            if same_prev and same_next:
                continue  # interior of a hold run
            keep_t.append(times[k])
            keep_p.append(pts[k])
        out.append(TimedPath(keep_t, keep_p))
    return out


def _close(a: Point, b: Point) -> bool:
    return abs(a[0] - b[0]) <= 1e-12 and abs(a[1] - b[1]) <= 1e-12
