"""Shared solver plumbing: configuration, request/result types, helpers."""

from __future__ import annotations

import math
import random
import time
from dataclasses import dataclass, field

from ..kinematics import KinematicProfile
from ..model import PathStep, TimedPath, WarehouseGraph
from ..reservations import Reservation, ReservationTable, compile_path, path_to_reservations
from ..search import RRAContext, h_estimate

INF = math.inf

WINDOW_DEFAULTS = {
    "whca-v": 20.0,
    "whca-n": 30.0,
    "far-r": 30.0,
    "far-e": 30.0,
    "bcp": 30.0,
    "odid": 30.0,
    "cbs": 20.0,
}


@dataclass
class SolverConfig:
    """Tunables shared by all planners; defaults follow the experiment setup."""

    wait_step: float = 2.0            # length of one wait action, seconds
    timeout: float = 1.0              # wall-clock limit per invocation, seconds
    expansion_budget: int | None = None  # deterministic per-search cap; disables wall clock
    window: float | None = None       # conflict window, None = per-solver default
    biased_cost: float = 1.0          # BCP per-conflict heuristic bump
    penalty_weight: float = 1.0       # non-volatile WHCA* shared-node penalty
    cbs_strategy: str = "best-first"  # best-first | breadth-first | depth-first
    cbs_node_budget: int = 60         # constraint-tree expansions per invocation
    od_max_states: int = 100          # OD expanded-state cap
    od_wait_step: float | None = None  # OD wait quantum, defaults to wait_step
    whca_iterations: int = 8          # volatile WHCA* outer iteration limit
    bcp_iterations: int = 40          # BCP pass limit in budget mode
    far_reroute_limit: int = 3        # rerouting evasion recursion cap
    deadlock_dwell: float = 30.0      # seconds at a node before the resolver acts
    seed: int = 0

    def window_for(self, solver: str) -> float:
        return self.window if self.window is not None else WINDOW_DEFAULTS[solver]


@dataclass
class RobotSnapshot:
    """One robot as the planners see it at invocation time.

    Robots that cannot stop instantly plan from their next reachable
    standstill: `node`/`time`/`heading` describe that commit point, and
    `committed` holds the reservations of the motion still in flight.
    """

    id: str
    profile: KinematicProfile
    node: str
    time: float
    heading: float | None
    goal: str | None
    carrying: str | None = None
    needs_path: bool = True
    committed: list[Reservation] = field(default_factory=list)


@dataclass
class PlanRequest:
    now: float
    graph: WarehouseGraph
    table: ReservationTable
    robots: list[RobotSnapshot]             # every robot with an active move subtask
    idle_nodes: frozenset = frozenset()     # positions of robots without move subtasks
    stored_pod_nodes: frozenset = frozenset()  # nodes occupied by stored pods
    rng: random.Random = field(default_factory=lambda: random.Random(0))


@dataclass
class PlanResult:
    paths: dict[str, TimedPath | None] = field(default_factory=dict)
    expansions: int = 0
    timed_out: bool = False
    collision_horizon: float = INF    # earliest known overlap in a partial result
    notes: dict = field(default_factory=dict)


class Solver:
    """Base class: owns the graph, config and RRA context cache."""

    name = "base"

    def __init__(self, graph: WarehouseGraph, config: SolverConfig):
        self.graph = graph
        self.config = config
        self._rra_cache: dict[tuple, RRAContext] = {}
        min_edge = graph.min_edge_length()
        self._min_edge = min_edge if min_edge > 0 else INF
        self._max_vmax = 0.0

    # -- shared helpers ----------------------------------------------------

    def delta_for(self, robots) -> float | None:
        """Positive arc-cost lower bound: min(wait step, shortest edge / top speed)."""
        vmax = max((r.profile.v_max for r in robots), default=0.0)
        self._max_vmax = max(self._max_vmax, vmax)
        if self._max_vmax <= 0 or math.isinf(self._min_edge):
            return None
        return min(self.config.wait_step, self._min_edge / self._max_vmax)

    def blocked_for(self, robot: RobotSnapshot, request: PlanRequest) -> frozenset:
        blocked = set(request.idle_nodes)
        blocked.discard(robot.node)
        if robot.carrying is not None:
            blocked |= set(request.stored_pod_nodes)
        return frozenset(blocked)

    def rra_for(self, robot: RobotSnapshot, blocked: frozenset) -> RRAContext:
        key = (robot.goal, robot.profile, blocked)
        ctx = self._rra_cache.get(key)
        if ctx is None:
            ctx = RRAContext(self.graph, robot.profile, robot.goal, blocked)
            self._rra_cache[key] = ctx
        return ctx

    def sort_key(self, robot: RobotSnapshot, priorities=None):
        """Planning order: priority, pod carriers first, then nearest goal."""
        prio = priorities.get(robot.id, 0) if priorities else 0
        dist = h_estimate(self.graph, robot.profile, robot.node, robot.goal) \
            if robot.goal else INF
        return (-prio, robot.carrying is None, dist, robot.id)

    def deadline(self):
        if self.config.expansion_budget is not None:
            return None
        return time.perf_counter() + self.config.timeout

    def out_of_time(self, deadline) -> bool:
        return deadline is not None and time.perf_counter() > deadline

    def plan(self, request: PlanRequest) -> PlanResult:
        raise NotImplementedError


def path_from_nodes(robot_id: str, nodes: list[str], graph: WarehouseGraph,
                    start_time: float) -> TimedPath:
    """Timed path over a node sequence, stopping only where the heading changes."""
    if len(nodes) == 1:
        return TimedPath(robot_id, start_time, [PathStep(nodes[0], True)])
    stops = [True] * len(nodes)
    headings = []
    for a, b in zip(nodes, nodes[1:]):
        if graph.is_elevator_pair(a, b):
            headings.append(None)
        else:
            headings.append(graph.arc(a, b).angle)
    for i in range(1, len(nodes) - 1):
        inbound, outbound = headings[i - 1], headings[i]
        stops[i] = inbound is None or outbound is None or abs(inbound - outbound) > 1e-9
    return TimedPath(robot_id, start_time,
                     [PathStep(n, s) for n, s in zip(nodes, stops)])


def reservations_for(path: TimedPath, graph, robot: RobotSnapshot):
    return path_to_reservations(path, graph, robot.profile, robot.heading)


def arrival_of(path: TimedPath, graph, robot: RobotSnapshot) -> float:
    return compile_path(path, graph, robot.profile, robot.heading).t_end
