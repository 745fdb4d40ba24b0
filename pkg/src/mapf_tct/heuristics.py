"""Precomputed shortest-path-to-goal distance fields over the navigation graph."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .paths import Point
from .world import NavGraph


@dataclass
class HeuristicField:
    """Exact graph distance from every vertex to one agent's goal vertex.

    dist is indexed by vertex id over the graph the field was computed on;
    unreachable vertices hold +inf.
    """

    goal_vertex: int
    dist: np.ndarray


def shortest_path_field(graph: NavGraph, goal: int) -> HeuristicField:
    """Single-source shortest distances from the goal to all graph vertices."""
    return fields_for_goals(graph, [goal])[0]


def fields_for_goals(graph: NavGraph, goals: list[int]) -> list[HeuristicField]:
    """All agents' fields in one pass (scipy Dijkstra over the CSR adjacency)."""
    from scipy.sparse.csgraph import dijkstra

    csr = graph.to_csr()
    dmat = dijkstra(csr, directed=True, indices=goals)
    if dmat.ndim == 1:
        dmat = dmat[None, :]
    return [HeuristicField(goal_vertex=g, dist=dmat[k])
            for k, g in enumerate(goals)]


def get_heuristic(v: int, field: HeuristicField, graph: NavGraph | None = None) -> float:
    """Distance-to-goal estimate for vertex v.

    Vertices injected after the field was computed fall back to their
    connectors: the minimum over (connector length + centroid field value),
    which is the exact graph distance from the injected vertex.
    """
    if v < field.dist.shape[0]:
        return float(field.dist[v])
    if graph is None:
        raise KeyError(f"vertex {v} outside field and no graph given")
    best = math.inf
    for cell, w in graph.neighbors(v):
        if cell < field.dist.shape[0]:
            best = min(best, float(field.dist[cell]) + w)
    return best


def point_heuristic(p: Point, field: HeuristicField, graph: NavGraph,
                    neighbor_links: bool = True) -> float:
    """Field value for an arbitrary free-space point, matching what the point
    would get if injected into the planning graph."""
    vid = graph.find_vertex_at(p)
    if vid is not None and vid < field.dist.shape[0]:
        return float(field.dist[vid])
    links = graph.sub.link_cells(p, neighbor_links=neighbor_links)
    if not links:
        return math.inf
    return min(w + float(field.dist[cell]) for cell, w in links)
