"""Communication models (limited range / line of sight), pairwise checks for
static positions and timed motions, collision tests, and team connectivity."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .paths import Point, TimedPath
from .world import WorldMap, segment_blocked

LCR = "lcr"
LOS = "los"


@dataclass(frozen=True)
class CommModel:
    """Pairwise communication model.

    lcr: two agents communicate iff their distance is <= r_c (inclusive).
    los: two agents communicate iff no obstacle blocks the segment between
    them (no range limit).
    """

    kind: str
    r_c: float = 15.0
    world: WorldMap | None = None

    def __post_init__(self):
        if self.kind not in (LCR, LOS):
            raise ValueError(f"unknown comm model kind {self.kind!r}")
        if self.kind == LCR and self.r_c <= 0:
            raise ValueError("r_c must be positive")
        if self.kind == LOS and self.world is None:
            raise ValueError("line-of-sight model needs the world")

    @staticmethod
    def limited_range(r_c: float = 15.0) -> "CommModel":
        return CommModel(LCR, r_c=r_c)

    @staticmethod
    def line_of_sight(world: WorldMap, r_c: float = 15.0) -> "CommModel":
        return CommModel(LOS, r_c=r_c, world=world)


def acomm_static(p: Point, q: Point, model: CommModel) -> bool:
    """Pairwise communication between two static positions."""
    if model.kind == LCR:
        return math.hypot(p[0] - q[0], p[1] - q[1]) <= model.r_c
    return not segment_blocked(p, q, model.world)


@dataclass(frozen=True)
class MotionSegment:
    """One constant-speed linear move over [t0, t1] (speed 0 only for Stop)."""

    p0: Point
    p1: Point
    t0: float
    t1: float
    speed: float

    @staticmethod
    def between(p0: Point, p1: Point, t0: float, t1: float) -> "MotionSegment":
        d = math.hypot(p1[0] - p0[0], p1[1] - p0[1])
        dt = t1 - t0
        if dt < 0:
            raise ValueError("t1 must be >= t0")
        if dt == 0:
            if d > 1e-9:
                raise ValueError("instantaneous displacement")
            return MotionSegment(p0, p1, t0, t1, 0.0)
        return MotionSegment(p0, p1, t0, t1, d / dt)

    def pos_at(self, t: float) -> Point:
        if self.t1 == self.t0:
            return self.p0
        u = (t - self.t0) / (self.t1 - self.t0)
        u = min(max(u, 0.0), 1.0)
        return (self.p0[0] + u * (self.p1[0] - self.p0[0]),
                self.p0[1] + u * (self.p1[1] - self.p0[1]))


def _sample_times(t0: float, t1: float, dt: float) -> list[float]:
    """t0, t0+dt, ... with t1 always included."""
    if t1 <= t0:
        return [t0]
    out = []
    k = 0
    while True:
        t = t0 + k * dt
        if t >= t1 - 1e-12:
            break
        out.append(t)
        k += 1
    out.append(t1)
    return out


def acomm_during_move(mover: MotionSegment, other: TimedPath,
                      model: CommModel, dt_comm: float = 0.25) -> bool:
    """True iff the mover stays in communication with the other agent at every
    checked instant of [t0, t1] (endpoints always included).

    For the range model the other path's waypoint times inside the move are
    also checked; squared distance is convex on each linear piece, so piece
    boundaries carry the maximum and no violation can slip between samples.
    """
    times = _sample_times(mover.t0, mover.t1, dt_comm)
    if model.kind == LCR:
        extra = [t for t in other.times if mover.t0 < t < mover.t1]
        if extra:
            times = sorted(set(times) | set(extra))
    for t in times:
        if not acomm_static(mover.pos_at(t), other.sample(t), model):
            return False
    return True


def collision_during_move(mover: MotionSegment, other: TimedPath,
                          d_c: float) -> bool:
    """True iff at some instant of [t0, t1] the two agents are strictly closer
    than d_c. Analytic closest-point-of-approach per overlapping linear piece
    (the other agent holds its endpoint positions outside its path span)."""
    d2 = d_c * d_c
    ta0, ta1 = mover.t0, mover.t1
    ax, ay = mover.p0
    if ta1 > ta0:
        avx = (mover.p1[0] - ax) / (ta1 - ta0)
        avy = (mover.p1[1] - ay) / (ta1 - ta0)
    else:
        avx = avy = 0.0

    def piece_hit(qx, qy, qvx, qvy, lo, hi) -> bool:
        # relative state at window start
        dx = (ax + avx * (lo - ta0)) - qx
        dy = (ay + avy * (lo - ta0)) - qy
        ux = avx - qvx
        uy = avy - qvy
        span = hi - lo
        a = ux * ux + uy * uy
        if a < 1e-18:
            return dx * dx + dy * dy < d2
        tstar = -(dx * ux + dy * uy) / a
        tstar = min(max(tstar, 0.0), span)
        mx = dx + ux * tstar
        my = dy + uy * tstar
        return mx * mx + my * my < d2

    times = other.times
    pts = other.pts
    # hold before the first waypoint
    if ta0 < times[0]:
        lo, hi = ta0, min(ta1, times[0])
        if piece_hit(pts[0][0], pts[0][1], 0.0, 0.0, lo, hi):
            return True
    # interior pieces
    for i in range(len(times) - 1):
        lo = max(ta0, times[i])
        hi = min(ta1, times[i + 1])
        if hi < lo:
            continue
        q0, q1 = pts[i], pts[i + 1]
        span = times[i + 1] - times[i]
        if span > 0:
            qvx = (q1[0] - q0[0]) / span
            qvy = (q1[1] - q0[1]) / span
        else:
            qvx = qvy = 0.0
        qx = q0[0] + qvx * (lo - times[i])
        qy = q0[1] + qvy * (lo - times[i])
        if piece_hit(qx, qy, qvx, qvy, lo, hi):
            return True
    # hold after the last waypoint
    if ta1 > times[-1]:
        lo, hi = max(ta0, times[-1]), ta1
        if piece_hit(pts[-1][0], pts[-1][1], 0.0, 0.0, lo, hi):
            return True
    return False


class UnionFind:
    """Array union-find with path compression and union by size."""

    def __init__(self, n: int):
        self.rep = list(range(n))
        self.size = [1] * n

    def find(self, i: int) -> int:
        root = i
        while self.rep[root] != root:
            root = self.rep[root]
        while self.rep[i] != root:
            self.rep[i], i = root, self.rep[i]
        return root

    def union(self, i: int, j: int) -> None:
        ri, rj = self.find(i), self.find(j)
        if ri == rj:
            return
        if self.size[ri] < self.size[rj]:
            ri, rj = rj, ri
        self.rep[rj] = ri
        self.size[ri] += self.size[rj]

    def connected(self, i: int, j: int) -> bool:
        return self.find(i) == self.find(j)


def tcomm(positions: list[Point], model: CommModel) -> bool:
    """Team connectivity: the pairwise communication graph admits a spanning
    tree over all agents."""
    n = len(positions)
    if n == 0:
        raise ValueError("tcomm needs at least one position")
    if n == 1:
        return True
    uf = UnionFind(n)
    for i in range(n):
        for j in range(i + 1, n):
            if acomm_static(positions[i], positions[j], model):
                uf.union(i, j)
    root = uf.find(0)
    return all(uf.find(i) == root for i in range(1, n))
