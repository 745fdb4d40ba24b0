"""Seeded generators for the benchmark environment families (forest, office,
waves, rings, maze) and for team-connected problem instances."""

from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .comm import CommModel, LCR, LOS, tcomm
from .paths import Point
from .world import Rect, SubDivision, WorldMap, subdivide

FAMILIES = ("forest", "office", "waves", "rings", "maze")
RING_DIFFICULTY = {
    # difficulty -> (ring count range, ring separation, break count range)
    "easy": ((4, 5), 8.0, (6, 7)),
    "medium": ((5, 5), 7.0, (5, 6)),
    "hard": ((6, 6), 5.5, (4, 5)),
}


class SamplingExhausted(Exception):
    """Instance sampling hit the attempt bound without a valid configuration."""


@dataclass(frozen=True)
class EnvParams:
    family: str
    size: float = 114.0
    difficulty: str | None = None    # rings only: easy / medium / hard
    seed: int = 0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if self.size <= 0:
            raise ValueError("size must be positive")
        if self.difficulty is not None and self.difficulty not in RING_DIFFICULTY:
            raise ValueError(f"unknown difficulty {self.difficulty!r}")


@dataclass(frozen=True)
class OfficeParams:
    room_depth: float = 7.0
    room_len_lo: float = 9.0
    room_len_hi: float = 13.0
    door_width: float = 2.0
    wall: float = 1.0
    hall_lo: float = 7.0
    hall_hi: float = 9.0
    cross_halls: tuple[int, int] = (2, 3)


@dataclass(frozen=True)
class WavesParams:
    n_waves: int = 10
    thickness: float = 2.0
    gap_lo: float = 4.0
    gap_hi: float = 8.0
    gaps_per_wave: tuple[int, int] = (2, 4)


# ---- helpers ---------------------------------------------------------------

def _subtract_intervals(a: float, b: float, holes: list[tuple[float, float]]
                        ) -> list[tuple[float, float]]:
    """Pieces of [a, b] left after removing the given open intervals."""
    pieces = []
    cur = a
    for h0, h1 in sorted(holes):
        h0, h1 = max(h0, a), min(h1, b)
        if h1 <= cur:
            continue
        if h0 > cur:
            pieces.append((cur, h0))
        cur = max(cur, h1)
    if cur < b:
        pieces.append((cur, b))
    return [(lo, hi) for lo, hi in pieces if hi - lo > 1e-9]


def _rect_union_area(rects: list[Rect]) -> float:
    """Exact union area of a few axis-aligned rectangles (coordinate sweep)."""
    xs = sorted({r.x for r in rects} | {r.x1 for r in rects})
    ys = sorted({r.y for r in rects} | {r.y1 for r in rects})
    area = 0.0
    for i in range(len(xs) - 1):
        for j in range(len(ys) - 1):
            cx = (xs[i] + xs[i + 1]) / 2
            cy = (ys[j] + ys[j + 1]) / 2
            if any(r.x < cx < r.x1 and r.y < cy < r.y1 for r in rects):
                area += (xs[i + 1] - xs[i]) * (ys[j + 1] - ys[j])
    return area


# ---- families --------------------------------------------------------------

def _gen_forest(size: float, rng: np.random.Generator) -> list[list[Rect]]:
    """Rectilinear composites (1-4 overlapping rectangles, 2-8 m sides) placed
    with disjoint padded bounding boxes until ~10% of the area is covered."""
    target = 0.10 * size * size
    side_hi = min(8.0, size / 5.0)
    margin = 1.0
    pad = 1.0
    groups: list[list[Rect]] = []
    bboxes: list[tuple[float, float, float, float]] = []
    covered = 0.0
    attempts = 0
    while covered < target and attempts < 20000:
        attempts += 1
        k = int(rng.integers(1, 5))
        rects = [Rect(0.0, 0.0, float(rng.uniform(2.0, side_hi)),
                      float(rng.uniform(2.0, side_hi)))]
        for _ in range(k - 1):
            anchor = rects[int(rng.integers(len(rects)))]
            w = float(rng.uniform(2.0, side_hi))
            h = float(rng.uniform(2.0, side_hi))
            ox = float(rng.uniform(anchor.x - w + 0.5, anchor.x1 - 0.5))
            oy = float(rng.uniform(anchor.y - h + 0.5, anchor.y1 - 0.5))
            rects.append(Rect(ox, oy, w, h))
        minx = min(r.x for r in rects)
        miny = min(r.y for r in rects)
        rects = [Rect(r.x - minx, r.y - miny, r.w, r.h) for r in rects]
        bw = max(r.x1 for r in rects)
        bh = max(r.y1 for r in rects)
        if bw >= size - 2 * margin or bh >= size - 2 * margin:
            continue
        px = float(rng.uniform(margin, size - margin - bw))
        py = float(rng.uniform(margin, size - margin - bh))
        box = (px - pad, py - pad, px + bw + pad, py + bh + pad)
        if any(box[0] < b[2] and b[0] < box[2] and box[1] < b[3] and b[1] < box[3]
               for b in bboxes):
            continue
        group = [Rect(r.x + px, r.y + py, r.w, r.h) for r in rects]
        groups.append(group)
        bboxes.append(box)
        covered += _rect_union_area(group)
    return groups


def _pack_room_row(rng, x0: float, x1: float, fw_y: float, room_y: float,
                   row_y0: float, row_y1: float, p: OfficeParams,
                   edge_left: bool, edge_right: bool) -> list[list[Rect]]:
    """One row of rooms over [x0, x1]: facing wall with a door per room,
    divider walls, rooms of depth room_depth starting at room_y."""
    walls: list[list[Rect]] = []
    if x1 - x0 < p.room_len_lo + 2 * p.wall:
        return walls
    cur = x0
    if not edge_left:
        walls.append([Rect(cur, row_y0, p.wall, row_y1 - row_y0)])
        cur += p.wall
    spans = []
    while cur + p.room_len_lo <= x1 - (0.0 if edge_right else p.wall):
        length = float(rng.uniform(p.room_len_lo, p.room_len_hi))
        length = min(length, x1 - cur - (0.0 if edge_right else p.wall))
        if length < p.room_len_lo:
            break
        spans.append((cur, cur + length))
        cur += length
        if cur + p.wall + p.room_len_lo <= x1:
            walls.append([Rect(cur, row_y0, p.wall, row_y1 - row_y0)])
            cur += p.wall
        else:
            break
    if spans and not edge_right and cur < x1:
        # close the row with a final divider
        walls.append([Rect(min(cur, x1 - p.wall), row_y0, p.wall,
                           row_y1 - row_y0)])
    for a, b in spans:
        d0 = float(rng.uniform(a + 0.5, b - p.door_width - 0.5)) \
            if b - a > p.door_width + 1.0 else a
        for lo, hi in _subtract_intervals(a, b, [(d0, d0 + p.door_width)]):
            walls.append([Rect(lo, fw_y, hi - lo, p.wall)])
    return walls


def _gen_office(size: float, rng: np.random.Generator,
                p: OfficeParams) -> list[list[Rect]]:
    """Three long hallways with rooms lining them, connected by 2-3 cross
    hallways cut vertically through the room bands."""
    centers = size * np.array([0.25, 0.5, 0.75]) + rng.uniform(-3, 3, 3)
    widths = rng.uniform(p.hall_lo, p.hall_hi, 3)
    halls = [(float(c - w / 2), float(c + w / 2))
             for c, w in zip(centers, widths)]

    ncross = int(rng.integers(p.cross_halls[0], p.cross_halls[1] + 1))
    for _ in range(200):
        xcs = np.sort(rng.uniform(size * 0.12, size * 0.88, ncross))
        if ncross == 1 or np.min(np.diff(xcs)) > size * 0.2:
            break
    cws = rng.uniform(p.hall_lo, p.hall_hi, ncross)
    holes = [(float(xc - w / 2), float(xc + w / 2)) for xc, w in zip(xcs, cws)]

    walls: list[list[Rect]] = []
    d = p.room_depth

    def row(fw_y, room_y, row_y0, row_y1):
        for a, b in _subtract_intervals(0.0, size, holes):
            walls.extend(_pack_room_row(rng, a, b, fw_y, room_y, row_y0,
                                        row_y1, p,
                                        edge_left=(a <= 1e-9),
                                        edge_right=(b >= size - 1e-9)))

    # bottom edge band: rooms hug the map edge, open strip joins hallway 1
    if halls[0][0] >= d + p.wall + 1:
        row(fw_y=d, room_y=0.0, row_y0=0.0, row_y1=d + p.wall)
    # top edge band
    if size - halls[2][1] >= d + p.wall + 1:
        row(fw_y=size - d - p.wall, room_y=size - d,
            row_y0=size - d - p.wall, row_y1=size)
    # middle bands: a row against each adjacent hallway where it fits
    for (lo_h, hi_h) in ((halls[0], halls[1]), (halls[1], halls[2])):
        ylo, yhi = lo_h[1], hi_h[0]
        height = yhi - ylo
        if height < 2 * p.wall + d:
            continue
        # row opening down into the lower hallway
        row(fw_y=ylo, room_y=ylo + p.wall, row_y0=ylo, row_y1=ylo + p.wall + d)
        back_y = ylo + p.wall + d
        if yhi - back_y > p.wall:
            for a, b in _subtract_intervals(0.0, size, holes):
                walls.append([Rect(a, back_y, b - a, p.wall)])
        if height >= 2 * (2 * p.wall + d):
            # row opening up into the upper hallway
            row(fw_y=yhi - p.wall, room_y=yhi - p.wall - d,
                row_y0=yhi - p.wall - d, row_y1=yhi)
            back2 = yhi - p.wall - d - p.wall
            if back2 > back_y + p.wall:
                for a, b in _subtract_intervals(0.0, size, holes):
                    walls.append([Rect(a, back2, b - a, p.wall)])
    return walls


def _gen_waves(size: float, rng: np.random.Generator,
               p: WavesParams) -> list[list[Rect]]:
    """Full-width walls at regular spacing, each pierced by a few gaps."""
    groups: list[list[Rect]] = []
    spacing = size / p.n_waves
    half = p.thickness / 2
    for i in range(1, p.n_waves + 1):
        yc = (i - 0.5) * spacing
        y0 = max(0.0, yc - half)
        y1 = min(size, yc + half)
        k = int(rng.integers(p.gaps_per_wave[0], p.gaps_per_wave[1] + 1))
        for _ in range(200):
            widths = rng.uniform(p.gap_lo, p.gap_hi, k)
            starts = np.sort(rng.uniform(1.0, size - 1.0 - widths.max(), k))
            holes = [(float(s), float(s + w)) for s, w in zip(starts, widths)]
            if all(holes[j + 1][0] - holes[j][1] > 2.0 for j in range(k - 1)):
                break
        wave = [Rect(a, y0, b - a, y1 - y0)
                for a, b in _subtract_intervals(0.0, size, holes)]
        groups.append(wave)
    return groups


def _rings_layout(rng: np.random.Generator, difficulty: str, size: float):
    """Structured ring plan: [(half_size R, [(side, s0, s1) breaks])]."""
    (c_lo, c_hi), sep, (b_lo, b_hi) = RING_DIFFICULTY[difficulty]
    count = int(rng.integers(c_lo, c_hi + 1))
    rings = []
    for j in range(1, count + 1):
        r = (j + 0.5) * sep
        k = int(rng.integers(b_lo, b_hi + 1))
        breaks = []
        for _ in range(k):
            side = int(rng.integers(4))
            width = float(rng.uniform(6.0, 8.0))
            s0 = float(rng.uniform(0.0, max(2 * r - width, 0.1)))
            breaks.append((side, s0, s0 + width))
        rings.append((r, breaks))
    return rings


def _gen_rings(size: float, rng: np.random.Generator,
               difficulty: str) -> list[list[Rect]]:
    """Concentric square rings with gaps; starts go at the center, goals in a
    corner, so every ring must be crossed through one of its breaks."""
    cx = cy = size / 2
    groups: list[list[Rect]] = []
    for r, breaks in _rings_layout(rng, difficulty, size):
        ring: list[Rect] = []
        per_side: dict[int, list[tuple[float, float]]] = {0: [], 1: [], 2: [], 3: []}
        for side, s0, s1 in breaks:
            per_side[side].append((s0, s1))
        # sides: 0 bottom, 1 top, 2 left, 3 right; local s in [0, 2r]
        for side in range(4):
            for a, b in _subtract_intervals(0.0, 2 * r, per_side[side]):
                if side in (0, 1):
                    y = (cy - r) if side == 0 else (cy + r)
                    x0 = cx - r + a - 0.5
                    x1 = cx - r + b + 0.5
                    ring.append(Rect(max(0.0, x0), max(0.0, y - 0.5),
                                     min(size, x1) - max(0.0, x0), 1.0))
                else:
                    x = (cx - r) if side == 2 else (cx + r)
                    y0 = cy - r + a - 0.5
                    y1 = cy - r + b + 0.5
                    ring.append(Rect(max(0.0, x - 0.5), max(0.0, y0), 1.0,
                                     min(size, y1) - max(0.0, y0)))
        groups.append(ring)
    return groups


def _maze_spanning_edges(rng: np.random.Generator, cols: int, rows: int):
    """Randomized-Kruskal spanning tree over the cell grid; returns the carved
    edge list (cell pairs)."""
    edges = []
    for i in range(cols):
        for j in range(rows):
            if i + 1 < cols:
                edges.append(((i, j), (i + 1, j)))
            if j + 1 < rows:
                edges.append(((i, j), (i, j + 1)))
    order = rng.permutation(len(edges))
    rep = {(i, j): (i, j) for i in range(cols) for j in range(rows)}

    def find(c):
        while rep[c] != c:
            rep[c] = rep[rep[c]]
            c = rep[c]
        return c

    carved = []
    for idx in order:
        a, b = edges[int(idx)]
        ra, rb = find(a), find(b)
        if ra != rb:
            rep[ra] = rb
            carved.append((a, b))
    return carved


def _gen_maze(size: float, rng: np.random.Generator,
              cols: int = 14, rows: int = 14) -> list[list[Rect]]:
    """Kruskal maze on a cols x rows cell grid with 1 m walls. No outer
    perimeter walls, and the walls between horizontally adjacent cells in the
    top and bottom rows are dropped so those rows form open corridors where
    start/goal configurations are sampled."""
    p = size / cols
    carved = set()
    for a, b in _maze_spanning_edges(rng, cols, rows):
        carved.add((a, b))
        carved.add((b, a))
    walls: list[list[Rect]] = []
    for i in range(cols):
        for j in range(rows):
            # vertical wall between (i, j) and (i+1, j)
            if i + 1 < cols and ((i, j), (i + 1, j)) not in carved:
                if j not in (0, rows - 1):
                    x = (i + 1) * p
                    y0 = max(0.0, j * p - 0.5)
                    y1 = min(size, (j + 1) * p + 0.5)
                    walls.append([Rect(x - 0.5, y0, 1.0, y1 - y0)])
            # horizontal wall between (i, j) and (i, j+1)
            if j + 1 < rows and ((i, j), (i, j + 1)) not in carved:
                y = (j + 1) * p
                x0 = max(0.0, i * p - 0.5)
                x1 = min(size, (i + 1) * p + 0.5)
                walls.append([Rect(x0, y - 0.5, x1 - x0, 1.0)])
    return walls


def gen_env(params: EnvParams, office: OfficeParams | None = None,
            waves: WavesParams | None = None) -> WorldMap:
    """Deterministic world of the requested family for (params, seed)."""
    rng = np.random.default_rng(params.seed)
    size = params.size
    fam = params.family
    if fam == "forest":
        groups = _gen_forest(size, rng)
    elif fam == "office":
        groups = _gen_office(size, rng, office or OfficeParams())
    elif fam == "waves":
        groups = _gen_waves(size, rng, waves or WavesParams())
    elif fam == "rings":
        difficulty = params.difficulty or "easy"
        groups = _gen_rings(size, rng, difficulty)
    else:
        groups = _gen_maze(size, rng)
    tag = f"{fam}-{params.difficulty}-{params.seed}" if params.difficulty \
        else f"{fam}-{params.seed}"
    return WorldMap(size, size, groups, name=tag)


# ---- instances -------------------------------------------------------------

@dataclass
class Instance:
    world: WorldMap
    n: int
    starts: list[Point]
    goals: list[Point]
    model: CommModel
    v_c: float = 1.0
    d_c: float = 0.5
    seed: int = 0


def _regions(world: WorldMap, rng: np.random.Generator,
             layout: str = "strip") -> tuple[Rect, Rect]:
    """Start and goal sampling regions; rings worlds start at the center and
    aim for a corner, everything else uses opposite-side strips."""
    size = world.width
    if world.name.startswith("rings"):
        half = 6.5
        start = Rect(size / 2 - half, size / 2 - half, 2 * half, 2 * half)
        corner = int(rng.integers(4))
        cw = 15.0
        gx = 0.0 if corner in (0, 2) else size - cw
        gy = 0.0 if corner in (0, 1) else size - cw
        return start, Rect(gx, gy, cw, cw)
    if layout == "long_thin":
        depth = 8.0
    elif layout == "rect":
        w, d = min(40.0, size), min(30.0, size / 3)
        return (Rect((size - w) / 2, 0.0, w, d),
                Rect((size - w) / 2, size - d, w, d))
    else:
        depth = 20.0
    depth = min(depth, size / 3)
    return Rect(0.0, 0.0, size, depth), Rect(0.0, size - depth, size, depth)


def _sample_config(rng: np.random.Generator, region: Rect, n: int,
                   sub: SubDivision, d_c: float, r_c: float) -> list[Point] | None:
    """One proposal: points in free cells, pairwise >= d_c apart, each new
    point near the previously placed one so the chain stays within
    communication reach (uniform rejection alone essentially never yields a
    team-connected configuration beyond a handful of agents)."""
    pts: list[Point] = []
    for k in range(n):
        for _ in range(60):
            if k == 0:
                p = (float(rng.uniform(region.x, region.x1)),
                     float(rng.uniform(region.y, region.y1)))
            else:
                ax, ay = pts[-1]
                r = 0.9 * r_c
                lox, hix = max(region.x, ax - r), min(region.x1, ax + r)
                loy, hiy = max(region.y, ay - r), min(region.y1, ay + r)
                if hix <= lox or hiy <= loy:
                    continue
                p = (float(rng.uniform(lox, hix)), float(rng.uniform(loy, hiy)))
            if sub.find_cell(p) is None:
                continue
            if any(math.hypot(p[0] - q[0], p[1] - q[1]) < d_c for q in pts):
                continue
            pts.append(p)
            break
        else:
            return None
    return pts


def gen_instance(world: WorldMap, n: int, seed: int, d_c: float = 0.5,
                 model: CommModel | None = None, r_c: float = 15.0,
                 v_c: float = 1.0, layout: str = "strip",
                 max_attempts: int = 10000, min_sep: float | None = None,
                 sub: SubDivision | None = None) -> Instance:
    """Random starts and goals in the family's regions, both configurations
    team-connected under BOTH the 15 m range model and line of sight.

    min_sep is the sampling clearance between points (defaults to one cell or
    2*d_c, whichever is larger; always >= d_c so the instance invariant
    holds). Deterministic under seed; raises SamplingExhausted after
    max_attempts."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if min_sep is None:
        min_sep = max(2.0 * d_c, 1.0)
    min_sep = max(min_sep, d_c)
    rng = np.random.default_rng(seed)
    if sub is None:
        sub = subdivide(world)
    lcr = CommModel.limited_range(15.0)
    los = CommModel.line_of_sight(world)
    start_region, goal_region = _regions(world, rng, layout)

    def valid(cfg):
        return cfg is not None and tcomm(cfg, lcr) and tcomm(cfg, los)

    starts = goals = None
    for _ in range(max_attempts):
        if starts is None:
            cfg = _sample_config(rng, start_region, n, sub, min_sep, r_c)
            if valid(cfg):
                starts = cfg
            continue
        cfg = _sample_config(rng, goal_region, n, sub, min_sep, r_c)
        if valid(cfg):
            goals = cfg
            break
    if starts is None or goals is None:
        raise SamplingExhausted(
            f"no valid configuration for n={n} in {world.name} "
            f"after {max_attempts} attempts")
    if model is None:
        model = CommModel.limited_range(r_c)
    return Instance(world=world, n=n, starts=starts, goals=goals, model=model,
                    v_c=v_c, d_c=d_c, seed=seed)


# ---- instance files --------------------------------------------------------

def comm_to_json(model: CommModel) -> dict:
    return {"kind": model.kind, "r_c": model.r_c}


def comm_from_json(data: dict, world: WorldMap) -> CommModel:
    if data["kind"] == LOS:
        return CommModel.line_of_sight(world, r_c=data.get("r_c", 15.0))
    return CommModel.limited_range(data.get("r_c", 15.0))


def save_instance(inst: Instance, path: str, map_path: str | None = None) -> None:
    """Write the instance JSON; the map goes to a sibling file referenced by
    relative path and content hash."""
    base = os.path.dirname(os.path.abspath(path))
    if map_path is None:
        map_path = os.path.join(base, f"map_{inst.world.name}.json")
    digest = inst.world.save(map_path)
    data = {
        "map": {"path": os.path.relpath(map_path, base), "sha256": digest},
        "n": inst.n,
        "starts": [list(p) for p in inst.starts],
        "goals": [list(p) for p in inst.goals],
        "comm": comm_to_json(inst.model),
        "v_c": inst.v_c,
        "d_c": inst.d_c,
        "seed": inst.seed,
    }
    with open(path, "w") as f:
        json.dump(data, f, sort_keys=True)


def load_instance(path: str) -> Instance:
    with open(path) as f:
        data = json.load(f)
    base = os.path.dirname(os.path.abspath(path))
    map_path = os.path.join(base, data["map"]["path"])
    with open(map_path, "rb") as f:
        blob = f.read()
    digest = hashlib.sha256(blob).hexdigest()
    if digest != data["map"]["sha256"]:
        raise ValueError(f"map file {map_path} does not match recorded hash")
    world = WorldMap.from_json(json.loads(blob))
    model = comm_from_json(data["comm"], world)
    return Instance(world=world, n=data["n"],
                    starts=[tuple(p) for p in data["starts"]],
                    goals=[tuple(p) for p in data["goals"]],
                    model=model, v_c=data.get("v_c", 1.0),
                    d_c=data.get("d_c", 0.5), seed=data.get("seed", 0))
