"""Continuous 2D world with rectilinear obstacles, free-space subdivision,
and the navigation graph built from subdivision centroids."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

Point = tuple[float, float]


class PointBlocked(Exception):
    """Raised when a point to be injected into the graph lies in blocked space."""


@dataclass(frozen=True)
class Rect:
    """Axis-aligned rectangle, origin at bottom-left corner."""

    x: float
    y: float
    w: float
    h: float

    @property
    def x1(self) -> float:
        return self.x + self.w

    @property
    def y1(self) -> float:
        return self.y + self.h

    def area(self) -> float:
        return self.w * self.h

    def contains_open(self, px: float, py: float) -> bool:
        return self.x < px < self.x1 and self.y < py < self.y1

    def overlaps_open(self, other: "Rect") -> bool:
        return (self.x < other.x1 and other.x < self.x1
                and self.y < other.y1 and other.y < self.y1)


class WorldMap:
    """Bounded world with obstacles given as unions of axis-aligned rectangles.

    Each obstacle is a group of rectangles so arbitrary rectilinear shapes can
    be composed while keeping all geometry tests exact. Immutable after
    construction.
    """

    def __init__(self, width: float, height: float,
                 obstacles: list[list[Rect]], name: str = "world"):
        if width <= 0 or height <= 0:
            raise ValueError("world dimensions must be positive")
        self.width = float(width)
        self.height = float(height)
        self.name = name
        self.obstacles: tuple[tuple[Rect, ...], ...] = tuple(
            tuple(group) for group in obstacles)
        rects = [r for group in self.obstacles for r in group]
        for r in rects:
            if r.w <= 0 or r.h <= 0:
                raise ValueError(f"degenerate obstacle rect {r}")
            if r.x < -1e-9 or r.y < -1e-9 or r.x1 > width + 1e-9 or r.y1 > height + 1e-9:
                raise ValueError(f"obstacle rect {r} outside world bounds")
        self.rects: tuple[Rect, ...] = tuple(rects)
        # flattened coordinate arrays for vectorized geometry
        if rects:
            self._rx0 = np.array([r.x for r in rects])
            self._ry0 = np.array([r.y for r in rects])
            self._rx1 = np.array([r.x1 for r in rects])
            self._ry1 = np.array([r.y1 for r in rects])
        else:
            self._rx0 = self._ry0 = self._rx1 = self._ry1 = np.zeros(0)

    def in_bounds(self, p: Point) -> bool:
        return 0.0 <= p[0] <= self.width and 0.0 <= p[1] <= self.height

    def point_in_obstacle(self, p: Point) -> bool:
        """True if p lies strictly inside some obstacle rectangle."""
        if not self.rects:
            return False
        px, py = p
        hit = ((self._rx0 < px) & (px < self._rx1)
               & (self._ry0 < py) & (py < self._ry1))
        return bool(hit.any())

    # ---- JSON map files -------------------------------------------------

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "width": self.width,
            "height": self.height,
            "obstacles": [[[r.x, r.y, r.w, r.h] for r in group]
                          for group in self.obstacles],
        }

    @staticmethod
    def from_json(data: dict) -> "WorldMap":
        groups = [[Rect(*map(float, row)) for row in group]
                  for group in data["obstacles"]]
        return WorldMap(data["width"], data["height"], groups,
                        name=data.get("name", "world"))

    def save(self, path) -> str:
        """Write the map JSON; returns its sha256 hex digest."""
        blob = json.dumps(self.to_json(), sort_keys=True).encode()
        with open(path, "wb") as f:
            f.write(blob)
        return hashlib.sha256(blob).hexdigest()

    @staticmethod
    def load(path) -> "WorldMap":
        with open(path) as f:
            return WorldMap.from_json(json.load(f))

    def content_hash(self) -> str:
        blob = json.dumps(self.to_json(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


# ---- line-of-sight / segment geometry -----------------------------------

def segments_blocked(p: np.ndarray, q: np.ndarray, world: WorldMap) -> np.ndarray:
    """Vectorized slab test: for each row i, does the open segment
    (p[i], q[i]) intersect the interior of any obstacle rectangle?

    p, q: (S, 2) arrays. Returns a boolean (S,) array. Exact clipping, no
    sampling; a segment sliding along an obstacle boundary is not blocked.
    """
    S = p.shape[0]
    if world._rx0.size == 0 or S == 0:
        return np.zeros(S, dtype=bool)
    px = p[:, 0][:, None]
    py = p[:, 1][:, None]
    dx = (q[:, 0] - p[:, 0])[:, None]
    dy = (q[:, 1] - p[:, 1])[:, None]
    rx0, rx1 = world._rx0[None, :], world._rx1[None, :]
    ry0, ry1 = world._ry0[None, :], world._ry1[None, :]

    with np.errstate(divide="ignore", invalid="ignore"):
        tx0 = (rx0 - px) / dx
        tx1 = (rx1 - px) / dx
        ty0 = (ry0 - py) / dy
        ty1 = (ry1 - py) / dy
    txlo = np.minimum(tx0, tx1)
    txhi = np.maximum(tx0, tx1)
    tylo = np.minimum(ty0, ty1)
    tyhi = np.maximum(ty0, ty1)

    # zero-direction axes degenerate to "inside the open slab or never"
    x_flat = np.abs(dx) < 1e-15
    x_in = (rx0 < px) & (px < rx1)
    txlo = np.where(x_flat, np.where(x_in, -np.inf, np.inf), txlo)
    txhi = np.where(x_flat, np.where(x_in, np.inf, -np.inf), txhi)
    y_flat = np.abs(dy) < 1e-15
    y_in = (ry0 < py) & (py < ry1)
    tylo = np.where(y_flat, np.where(y_in, -np.inf, np.inf), tylo)
    tyhi = np.where(y_flat, np.where(y_in, np.inf, -np.inf), tyhi)

    lo = np.maximum(np.maximum(txlo, tylo), 0.0)
    hi = np.minimum(np.minimum(txhi, tyhi), 1.0)
    return (lo < hi).any(axis=1)


def segment_blocked(p: Point, q: Point, world: WorldMap) -> bool:
    """True iff the open segment (p, q) crosses the interior of an obstacle."""
    return bool(segments_blocked(np.array([p], dtype=float),
                                 np.array([q], dtype=float), world)[0])


# ---- subdivision ---------------------------------------------------------

@dataclass
class SubDivision:
    """Obstacle-free cells tiling the free space.

    cells are (cx, cy, hx, hy): center plus half-extents. Cells that still
    overlapped an obstacle at the minimum size were discarded; their area is
    tracked so kept + discarded tiles the world.
    """

    cells: list[tuple[float, float, float, float]]
    min_cell_size: float
    discarded_area: float
    world: WorldMap
    resolution: float
    _buckets: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        # bucket cells by their base-grid index for O(1) point lookup and
        # neighbor enumeration
        res = self.resolution
        for idx, (cx, cy, hx, hy) in enumerate(self.cells):
            key = (int(cx / res), int(cy / res))
            self._buckets.setdefault(key, []).append(idx)

    def __len__(self) -> int:
        return len(self.cells)

    def kept_area(self) -> float:
        return float(sum(4.0 * hx * hy for _, _, hx, hy in self.cells))

    def find_cell(self, p: Point) -> int | None:
        """Index of a kept cell containing p (closed membership), else None."""
        px, py = p
        res = self.resolution
        i, j = int(px / res), int(py / res)
        for di in (0, -1, 1):
            for dj in (0, -1, 1):
                for idx in self._buckets.get((i + di, j + dj), ()):
                    cx, cy, hx, hy = self.cells[idx]
                    if (cx - hx <= px <= cx + hx) and (cy - hy <= py <= cy + hy):
                        return idx
        return None

    def touching_cells(self, cell: int) -> list[int]:
        """Cells sharing a boundary segment or corner with the given cell."""
        cx, cy, hx, hy = self.cells[cell]
        res = self.resolution
        i, j = int(cx / res), int(cy / res)
        eps = 1e-9
        out = []
        for di in (-1, 0, 1):
            for dj in (-1, 0, 1):
                for idx in self._buckets.get((i + di, j + dj), ()):
                    if idx == cell:
                        continue
                    ox, oy, ohx, ohy = self.cells[idx]
                    if (cx - hx <= ox + ohx + eps and ox - ohx <= cx + hx + eps
                            and cy - hy <= oy + ohy + eps
                            and oy - ohy <= cy + hy + eps):
                        out.append(idx)
        return out

    def link_cells(self, p: Point, neighbor_links: bool = False
                   ) -> list[tuple[int, float]]:
        """Connector candidates for a continuous point: the containing cell's
        centroid first; with neighbor_links also the centroids of touching
        cells whose straight connector avoids all obstacles."""
        cell = self.find_cell(p)
        if cell is None:
            return []
        cx, cy, _, _ = self.cells[cell]
        links = [(cell, math.hypot(p[0] - cx, p[1] - cy))]
        if neighbor_links:
            nbrs = self.touching_cells(cell)
            if nbrs:
                cents = np.array([(self.cells[k][0], self.cells[k][1])
                                  for k in nbrs])
                pts = np.repeat(np.array([p], dtype=float), len(nbrs), axis=0)
                blocked = segments_blocked(pts, cents, self.world)
                for k, idx in enumerate(nbrs):
                    if not blocked[k]:
                        links.append((idx, math.hypot(p[0] - cents[k][0],
                                                      p[1] - cents[k][1])))
        return links


def _cell_overlaps(cx0, cy0, cx1, cy1, rects) -> list[Rect]:
    return [r for r in rects
            if cx0 < r.x1 and r.x < cx1 and cy0 < r.y1 and r.y < cy1]


def subdivide(world: WorldMap, resolution: float = 1.0,
              min_cell_size: float = 0.25) -> SubDivision:
    """Tile the world with resolution-sized cells, recursively splitting any
    obstacle-overlapping cell along its largest dimension. Clear fragments
    are kept; fragments still overlapping at the minimum size are discarded.
    """
    if not (resolution > min_cell_size > 0):
        raise ValueError("need resolution > min_cell_size > 0")
    nx = max(1, int(math.ceil(world.width / resolution - 1e-9)))
    ny = max(1, int(math.ceil(world.height / resolution - 1e-9)))

    # vectorized first pass over the regular grid
    xs0 = np.minimum(np.arange(nx) * resolution, world.width)
    xs1 = np.minimum(xs0 + resolution, world.width)
    ys0 = np.minimum(np.arange(ny) * resolution, world.height)
    ys1 = np.minimum(ys0 + resolution, world.height)

    cells: list[tuple[float, float, float, float]] = []
    discarded = 0.0

    if world._rx0.size:
        ox0 = (xs0[:, None] < world._rx1[None, :])
        ox1 = (world._rx0[None, :] < xs1[:, None])
        oy0 = (ys0[:, None] < world._ry1[None, :])
        oy1 = (world._ry0[None, :] < ys1[:, None])
    else:
        ox0 = ox1 = oy0 = oy1 = None

    def refine(x0, y0, x1, y1, rects):
        nonlocal discarded
        stack = [(float(x0), float(y0), float(x1), float(y1))]
        while stack:
            a0, b0, a1, b1 = stack.pop()
            w, h = a1 - a0, b1 - b0
            hit = _cell_overlaps(a0, b0, a1, b1, rects)
            if not hit:
                cells.append(((a0 + a1) / 2, (b0 + b1) / 2, w / 2, h / 2))
                continue
            if max(w, h) <= min_cell_size + 1e-12:
                discarded += w * h
                continue
            if w >= h:
                mid = (a0 + a1) / 2
                stack.append((a0, b0, mid, b1))
                stack.append((mid, b0, a1, b1))
            else:
                mid = (b0 + b1) / 2
                stack.append((a0, b0, a1, mid))
                stack.append((a0, mid, a1, b1))

    for i in range(nx):
        for j in range(ny):
            x0, x1 = float(xs0[i]), float(xs1[i])
            y0, y1 = float(ys0[j]), float(ys1[j])
            if x1 - x0 <= 1e-12 or y1 - y0 <= 1e-12:
                continue
            if ox0 is None:
                cells.append(((x0 + x1) / 2, (y0 + y1) / 2,
                              (x1 - x0) / 2, (y1 - y0) / 2))
                continue
            mask = ox0[i] & ox1[i] & oy0[j] & oy1[j]
            if not mask.any():
                cells.append(((x0 + x1) / 2, (y0 + y1) / 2,
                              (x1 - x0) / 2, (y1 - y0) / 2))
            else:
                rects = [world.rects[k] for k in np.nonzero(mask)[0]]
                refine(x0, y0, x1, y1, rects)

    return SubDivision(cells=cells, min_cell_size=min_cell_size,
                       discarded_area=discarded, world=world,
                       resolution=resolution)


# ---- navigation graph ----------------------------------------------------

class NavGraph:
    """Graph over subdivision centroids; cells touching along a boundary
    segment or at a corner are connected, weight = centroid distance.

    Continuous points (starts, goals, trimmed path ends) are injected as
    overlay vertices connected only to the centroid of their containing
    cell; overlays share the base structure and never mutate it.
    """

    def __init__(self, xs: np.ndarray, ys: np.ndarray,
                 adj: list[list[tuple[int, float]]], sub: SubDivision):
        self.xs = xs
        self.ys = ys
        self.adj = adj
        self.sub = sub
        self.n_base = len(adj)
        self.n_total = self.n_base
        self.parent: NavGraph | None = None
        self.extra_pos: dict[int, Point] = {}
        self.extra_adj: dict[int, list[tuple[int, float]]] = {}
        self.extra_links: dict[int, list[tuple[int, float]]] = {}
        self.injected: set[int] = set()

    # -- vertex access

    def position(self, v: int) -> Point:
        g: NavGraph | None = self
        while g is not None:
            if v in g.extra_pos:
                return g.extra_pos[v]
            g = g.parent
        return (float(self.xs[v]), float(self.ys[v]))

    def neighbors(self, v: int) -> list[tuple[int, float]]:
        out: list[tuple[int, float]] = []
        g: NavGraph | None = self
        while g is not None:
            if v in g.extra_adj:
                out.extend(g.extra_adj[v])
            if v in g.extra_links:
                out.extend(g.extra_links[v])
            g = g.parent
        if v < self.n_base:
            out.extend(self.adj[v])
        return out

    def find_vertex_at(self, p: Point) -> int | None:
        """Exact-position match among injected vertices (for dedupe)."""
        g: NavGraph | None = self
        while g is not None:
            for vid, pos in g.extra_pos.items():
                if pos[0] == p[0] and pos[1] == p[1]:
                    return vid
            g = g.parent
        return None

    def edge_count(self) -> int:
        """Undirected edge count of the base graph."""
        return sum(len(a) for a in self.adj) // 2

    # -- overlays

    def with_points(self, points: list[Point], neighbor_links: bool = False
                    ) -> tuple["NavGraph", list[int]]:
        """Overlay graph with the given points injected. Points matching an
        already-injected vertex position are deduped to that vertex.

        By default a point connects only to the centroid of its containing
        cell. With neighbor_links it also gains obstacle-checked connectors to
        the centroids of touching cells, which lets agents replanning from a
        trimmed mid-edge position detour around a parked agent that blocks
        the direct connector."""
        child = NavGraph.__new__(NavGraph)
        child.xs, child.ys, child.adj, child.sub = self.xs, self.ys, self.adj, self.sub
        child.n_base = self.n_base
        child.parent = self
        child.extra_pos = {}
        child.extra_adj = {}
        child.extra_links = {}
        child.injected = set()
        child.n_total = self.n_total
        ids = []
        for p in points:
            existing = child.find_vertex_at(p)
            if existing is not None:
                ids.append(existing)
                continue
            links = self.sub.link_cells(p, neighbor_links=neighbor_links)
            if not links:
                raise PointBlocked(f"point {p} lies in blocked space")
            vid = child.n_total
            child.n_total += 1
            child.extra_pos[vid] = (float(p[0]), float(p[1]))
            child.extra_adj[vid] = list(links)
            for cell, w in links:
                child.extra_links.setdefault(cell, []).append((vid, w))
            child.injected.add(vid)
            ids.append(vid)
        return child, ids

    def all_injected(self) -> dict[int, Point]:
        out: dict[int, Point] = {}
        g: NavGraph | None = self
        while g is not None:
            out.update(g.extra_pos)
            g = g.parent
        return out

    def to_csr(self):
        """CSR adjacency over all vertices (base + injected) for scipy."""
        from scipy.sparse import csr_matrix

        rows, cols, data = [], [], []
        for v in range(self.n_base):
            for u, w in self.adj[v]:
                rows.append(v)
                cols.append(u)
                data.append(w)
        for vid, pos in self.all_injected().items():
            for u, w in self.neighbors(vid):
                rows.append(vid)
                cols.append(u)
                data.append(w)
                rows.append(u)
                cols.append(vid)
                data.append(w)
        n = self.n_total
        return csr_matrix((data, (rows, cols)), shape=(n, n))


def build_graph(sub: SubDivision) -> NavGraph:
    """One vertex per kept cell at its centroid; edges join cells sharing a
    boundary segment or a corner point. On a uniform grid this is the usual
    8-neighbor connectivity."""
    n = len(sub.cells)
    if n == 0:
        raise ValueError("empty subdivision")
    xs = np.array([c[0] for c in sub.cells])
    ys = np.array([c[1] for c in sub.cells])
    adj: list[list[tuple[int, float]]] = [[] for _ in range(n)]
    eps = 1e-9
    cells = sub.cells
    for (bi, bj), members in sub._buckets.items():
        # candidates from this bucket and its 8 neighbors; i < j dedup
        cands: list[int] = []
        for di in (-1, 0, 1):
            for dj in (-1, 0, 1):
                cands.extend(sub._buckets.get((bi + di, bj + dj), ()))
        for a in members:
            ax0 = cells[a][0] - cells[a][2]
            ax1 = cells[a][0] + cells[a][2]
            ay0 = cells[a][1] - cells[a][3]
            ay1 = cells[a][1] + cells[a][3]
            for b in cands:
                if b <= a:
                    continue
                cx, cy, hx, hy = cells[b]
                if (ax0 <= cx + hx + eps and cx - hx <= ax1 + eps
                        and ay0 <= cy + hy + eps and cy - hy <= ay1 + eps):
                    w = math.hypot(cells[a][0] - cx, cells[a][1] - cy)
                    adj[a].append((b, w))
                    adj[b].append((a, w))
    return NavGraph(xs, ys, adj, sub)


def add_nodes(graph: NavGraph, points: list[Point],
              neighbor_links: bool = False) -> tuple[NavGraph, list[int]]:
    """Inject continuous points as overlay vertices (see NavGraph.with_points).

    Raises PointBlocked for points outside every kept cell.
    """
    return graph.with_points(points, neighbor_links=neighbor_links)
