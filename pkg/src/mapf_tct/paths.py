"""Timed waypoint paths for constant-speed agents."""

from __future__ import annotations

import math
from bisect import bisect_right

Point = tuple[float, float]


class TimedPath:
    """A sequence of (position, time) waypoints traversed at constant speed.

    Beyond the last waypoint the agent holds its final position: an agent
    that reached its goal parks there forever, and a stalled agent keeps
    its last planned position until it is replanned.
    """

    __slots__ = ("times", "pts", "reached_goal", "costogoal", "_key")

    def __init__(self, times, pts, reached_goal: bool = False, costogoal: float = 0.0):
        self.times: list[float] = [float(t) for t in times]
        self.pts: list[Point] = [(float(p[0]), float(p[1])) for p in pts]
        if len(self.times) != len(self.pts) or not self.times:
            raise ValueError("times and pts must be equal-length and non-empty")
        self.reached_goal = bool(reached_goal)
        self.costogoal = float(costogoal)
        self._key: tuple | None = None

    def content_key(self) -> tuple:
        """Hashable waypoint fingerprint (waypoints are fixed after creation;
        only bookkeeping flags may change)."""
        if self._key is None:
            self._key = (tuple(self.times), tuple(self.pts))
        return self._key

    def __len__(self) -> int:
        return len(self.times)

    def __repr__(self) -> str:
        return (f"TimedPath({len(self)} wps, t=[{self.times[0]:.3f},"
                f"{self.times[-1]:.3f}], reached={self.reached_goal})")

    @property
    def start_time(self) -> float:
        return self.times[0]

    @property
    def end_time(self) -> float:
        return self.times[-1]

    @property
    def start_pos(self) -> Point:
        return self.pts[0]

    @property
    def end_pos(self) -> Point:
        return self.pts[-1]

    def length(self) -> float:
        """Total travel distance along the waypoints."""
        total = 0.0
        for (x0, y0), (x1, y1) in zip(self.pts, self.pts[1:]):
            total += math.hypot(x1 - x0, y1 - y0)
        return total

    def segments(self):
        """Yield (p0, p1, t0, t1) linear pieces."""
        for i in range(len(self.times) - 1):
            yield self.pts[i], self.pts[i + 1], self.times[i], self.times[i + 1]

    def sample(self, t: float) -> Point:
        """Position at time t, holding the first/last waypoint outside the span."""
        times = self.times
        if t <= times[0]:
            return self.pts[0]
        if t >= times[-1]:
            return self.pts[-1]
        i = bisect_right(times, t) - 1
        if times[i] == t:
            return self.pts[i]
        t0, t1 = times[i], times[i + 1]
        u = (t - t0) / (t1 - t0)
        x0, y0 = self.pts[i]
        x1, y1 = self.pts[i + 1]
        return (x0 + u * (x1 - x0), y0 + u * (y1 - y0))

    def extended(self, seg: "TimedPath") -> "TimedPath":
        """Concatenate a segment whose first waypoint equals this path's end."""
        times = self.times + seg.times[1:]
        pts = self.pts + seg.pts[1:]
        return TimedPath(times, pts, reached_goal=seg.reached_goal, costogoal=0.0)

    def trimmed(self, t_c: float) -> "TimedPath":
        """Cut the path at time t_c; the new end is the interpolated position.

        The trimmed path never claims reached_goal (callers reset flags).
        """
        if t_c >= self.end_time:
            return TimedPath(self.times, self.pts, reached_goal=self.reached_goal)
        keep = bisect_right(self.times, t_c)
        times = self.times[:keep]
        pts = self.pts[:keep]
        if not times:
            times = [self.times[0]]
            pts = [self.pts[0]]
        if times[-1] < t_c - 1e-12:
            times.append(t_c)
            pts.append(self.sample(t_c))
        return TimedPath(times, pts, reached_goal=False)

    def max_speed(self) -> float:
        worst = 0.0
        for (x0, y0), (x1, y1), t0, t1 in ((self.pts[i], self.pts[i + 1],
                                            self.times[i], self.times[i + 1])
                                           for i in range(len(self) - 1)):
            dt = t1 - t0
            d = math.hypot(x1 - x0, y1 - y0)
            if dt <= 0:
                if d > 0:
                    return math.inf
                continue
            worst = max(worst, d / dt)
        return worst

    def to_list(self) -> list[list[float]]:
        """[[x, y, t], ...] rows for JSON solution files."""
        return [[x, y, t] for (x, y), t in zip(self.pts, self.times)]

    @staticmethod
    def from_list(rows, reached_goal: bool = False) -> "TimedPath":
        return TimedPath([r[2] for r in rows], [(r[0], r[1]) for r in rows],
                         reached_goal=reached_goal)

    @staticmethod
    def single(pos: Point, t: float, reached_goal: bool = False) -> "TimedPath":
        return TimedPath([t], [pos], reached_goal=reached_goal)
