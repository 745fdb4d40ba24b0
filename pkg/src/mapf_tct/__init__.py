"""Multi-agent pathfinding under a team-connected communication constraint.

Planner suite: the two-level adaptive-expansion / dynamic-leading planner,
joint-state, platooning, and priority-stepping baselines, seeded environment
and instance generators, an independent solution validator, and a benchmark
CLI."""

from .comm import CommModel, acomm_during_move, acomm_static, \
    collision_during_move, tcomm
from .envgen import EnvParams, Instance, gen_env, gen_instance, \
    load_instance, save_instance
from .heuristics import HeuristicField, get_heuristic, shortest_path_field
from .paths import TimedPath
from .planner import PlannerConfig, Solution, modify_if_overlap, \
    random_order, solve
from .baselines import solve_comp, solve_pibt_comm, solve_plf
from .sapf import is_action_valid, is_comm_at_goal, plan_single
from .tct import closest_node_to_goal, expand_tree, get_paths, \
    get_pos_at_time, init_tree, select_node
from .validate import ValidationReport, validate
from .world import NavGraph, PointBlocked, Rect, SubDivision, WorldMap, \
    add_nodes, build_graph, segment_blocked, subdivide

__version__ = "0.1.0"
