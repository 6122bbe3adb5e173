"""Conflict-based search over node/interval constraints.

The constraint tree starts from independently planned paths; each expansion
takes the earliest overlap between two robots' reservations, merges the two
intervals (minimum beginning to maximum ending time, capped at the window
length) and branches into two children, each forbidding that interval at that
node for one of the robots and replanning only that robot (costs are updated
by delta).  Expansion order is configurable; on running out of budget the node
with the latest first collision is returned.
"""

from __future__ import annotations

import heapq
import itertools
import math
from collections import deque
from dataclasses import dataclass

from ..search import a_star_spacetime
from .base import PlanRequest, PlanResult, Solver, arrival_of, reservations_for

INF = math.inf


@dataclass
class _CTNode:
    constraint: tuple | None            # (robot_id, node, t0, t1)
    parent: "_CTNode | None"
    paths: dict
    reservations: dict
    cost: float
    conflict: tuple | None = None       # (rid_a, rid_b, waypoint, merged interval)
    horizon: float = INF

    def constraints_for(self, robot_id: str):
        out = []
        node = self
        while node is not None:
            if node.constraint is not None and node.constraint[0] == robot_id:
                out.append(node.constraint[1:])
            node = node.parent
        return out


class Cbs(Solver):
    name = "cbs"

    def plan(self, request: PlanRequest) -> PlanResult:
        cfg = self.config
        window = cfg.window_for(self.name)
        deadline = self.deadline()
        result = PlanResult()
        table = request.table
        table.clear()
        robots = {r.id: r for r in request.robots if r.goal is not None}
        for robot in request.robots:
            table.add_all(robot.committed)
        delta = self.delta_for(request.robots)

        def replan(robot, constraints):
            blocked = self.blocked_for(robot, request)
            rra = self.rra_for(robot, blocked)
            search = a_star_spacetime(
                self.graph, robot.profile, robot.id, robot.node, robot.time,
                robot.heading, robot.goal, table, window=window,
                wait_step=cfg.wait_step, blocked=blocked, rra=rra,
                constraints=constraints, delta=delta,
                max_expansions=cfg.expansion_budget, deadline=deadline)
            result.expansions += search.expansions
            result.timed_out |= search.timed_out
            return search

        root_paths, root_res = {}, {}
        root_cost = 0.0
        for rid in sorted(robots):
            robot = robots[rid]
            search = replan(robot, [])
            if search.path is None:
                root_paths[rid] = None
                continue
            root_paths[rid] = search.path
            root_res[rid] = reservations_for(search.path, self.graph, robot)
            root_cost += search.cost - robot.time
        root = _CTNode(None, None, root_paths, root_res, root_cost)
        self._detect(root, request.now)

        best = root
        counter = itertools.count()
        open_heap: list = [(root.cost, next(counter), root)]
        open_fifo = deque([root])
        expansions = 0

        while True:
            if cfg.cbs_strategy == "best-first":
                if not open_heap:
                    break
                _, _, node = heapq.heappop(open_heap)
            else:
                if not open_fifo:
                    break
                node = open_fifo.popleft() if cfg.cbs_strategy == "breadth-first" \
                    else open_fifo.pop()
            if node.conflict is None:
                result.paths = node.paths
                result.collision_horizon = INF
                result.notes["ct_nodes"] = expansions
                return result
            if node.horizon > best.horizon or best.conflict is None:
                best = node
            expansions += 1
            if expansions > cfg.cbs_node_budget or self.out_of_time(deadline):
                result.timed_out = True
                break
            rid_a, rid_b, wp, merged = node.conflict
            t0, t1 = merged
            t1 = min(t1, t0 + window)
            for rid in (rid_a, rid_b):
                constraint = (rid, wp, t0, t1)
                child = _CTNode(constraint, node, dict(node.paths),
                                dict(node.reservations), node.cost)
                robot = robots[rid]
                search = replan(robot, child.constraints_for(rid))
                if search.path is None:
                    continue
                child.paths[rid] = search.path
                child.reservations[rid] = reservations_for(search.path, self.graph, robot)
                child.cost = node.cost - self._path_cost(node, rid, robot) \
                    + (search.cost - robot.time)
                self._detect(child, request.now)
                if cfg.cbs_strategy == "best-first":
                    heapq.heappush(open_heap, (child.cost, next(counter), child))
                else:
                    open_fifo.append(child)

        if best.conflict is not None:
            result.collision_horizon = best.horizon
        result.paths = best.paths
        result.notes["ct_nodes"] = expansions
        return result

    def _path_cost(self, node: _CTNode, rid: str, robot) -> float:
        path = node.paths.get(rid)
        if path is None:
            return 0.0
        return arrival_of(path, self.graph, robot) - robot.time

    def _detect(self, node: _CTNode, now: float):
        """Earliest overlap between two robots' reservations, if any."""
        earliest = None
        items = sorted(node.reservations.items())
        for i, (rid_a, res_a) in enumerate(items):
            for rid_b, res_b in items[i + 1:]:
                by_node: dict[str, list] = {}
                for r in res_b:
                    by_node.setdefault(r.waypoint, []).append(r)
                for ra in res_a:
                    for rb in by_node.get(ra.waypoint, ()):
                        if ra.start < rb.end and rb.start < ra.end:
                            key = (max(ra.start, rb.start), ra.waypoint)
                            merged = (min(ra.start, rb.start), max(ra.end, rb.end))
                            if earliest is None or key < earliest[0]:
                                earliest = (key, (rid_a, rid_b, ra.waypoint, merged))
        if earliest is None:
            node.conflict = None
            node.horizon = INF
        else:
            node.conflict = earliest[1]
            node.horizon = max(earliest[0][0], now)
