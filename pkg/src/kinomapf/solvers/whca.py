"""Windowed cooperative A* in its volatile and non-volatile variants.

The volatile variant replans every robot with a move subtask on each call,
escalating priorities (and exponentially growing wait prefixes) for robots
that could not be placed.  The non-volatile variant keeps a persistent
reservation table, plans only robots without a path, and biases each robot
away from nodes lying on the others' unconstrained shortest paths.
"""

from __future__ import annotations

import math

from ..model import PathStep, TimedPath
from ..reservations import Reservation
from ..search import a_star_spacetime
from .base import PlanRequest, PlanResult, Solver, arrival_of, reservations_for

INF = math.inf


def _with_wait_prefix(path: TimedPath, prefix: float, start_time: float) -> TimedPath:
    first = path.steps[0]
    steps = [PathStep(first.waypoint, True, first.wait + prefix)] + path.steps[1:]
    return TimedPath(path.robot, start_time, steps)


class WhcaVolatile(Solver):
    name = "whca-v"

    def plan(self, request: PlanRequest) -> PlanResult:
        cfg = self.config
        window = cfg.window_for(self.name)
        deadline = self.deadline()
        result = PlanResult()
        robots = sorted(request.robots, key=lambda r: r.id)
        priorities = {r.id: 0 for r in robots}
        delta = self.delta_for(robots)
        table = request.table
        paths: dict[str, TimedPath | None] = {r.id: None for r in robots}

        iteration = 0
        while iteration < cfg.whca_iterations:
            iteration += 1
            table.clear()
            for robot in robots:
                table.add_all(robot.committed)
            paths = {r.id: None for r in robots}
            all_placed = True
            for robot in sorted(robots, key=lambda r: self.sort_key(r, priorities)):
                if robot.goal is None:
                    continue
                blocked = self.blocked_for(robot, request)
                rra = self.rra_for(robot, blocked)
                prio = priorities[robot.id]
                prefix_steps = int(2 ** (prio - 1)) if prio >= 1 else 0
                prefix = prefix_steps * cfg.wait_step
                start_time = robot.time + prefix
                if prefix > 0.0 and not table.is_free(robot.node, robot.time,
                                                      start_time, ignoring=robot.id):
                    priorities[robot.id] += 1
                    all_placed = False
                    continue
                search = a_star_spacetime(
                    self.graph, robot.profile, robot.id, robot.node, start_time,
                    robot.heading, robot.goal, table, window=window,
                    wait_step=cfg.wait_step, blocked=blocked, rra=rra, delta=delta,
                    max_expansions=cfg.expansion_budget, deadline=deadline)
                result.expansions += search.expansions
                result.timed_out |= search.timed_out
                if search.path is None:
                    priorities[robot.id] += 1
                    all_placed = False
                    continue
                path = _with_wait_prefix(search.path, prefix, robot.time)
                table.add_all(reservations_for(path, self.graph, robot))
                paths[robot.id] = path
            if all_placed or self.out_of_time(deadline):
                break
        result.paths = paths
        result.notes["iterations"] = iteration
        result.notes["priorities"] = dict(sorted(priorities.items()))
        return result


class WhcaNonVolatile(Solver):
    name = "whca-n"

    def plan(self, request: PlanRequest) -> PlanResult:
        cfg = self.config
        window = cfg.window_for(self.name)
        deadline = self.deadline()
        result = PlanResult()
        table = request.table
        requesters = sorted([r for r in request.robots if r.needs_path],
                            key=lambda r: r.id)
        delta = self.delta_for(request.robots)
        table.reorganize(request.now, [r.id for r in requesters])

        # nominal shortest-path node sets of the other requesters (Eq. 16 bias)
        nominal: dict[str, list[str] | None] = {}
        for robot in requesters:
            if robot.goal is None:
                nominal[robot.id] = None
                continue
            rra = self.rra_for(robot, self.blocked_for(robot, request))
            nominal[robot.id] = rra.nominal_path(robot.node)

        for robot in sorted(requesters, key=lambda r: self.sort_key(r)):
            if robot.goal is None:
                continue
            penalty: dict[str, float] = {}
            for other in requesters:
                if other.id == robot.id or not nominal.get(other.id):
                    continue
                for node in nominal[other.id]:
                    penalty[node] = penalty.get(node, 0.0) + cfg.penalty_weight
            blocked = self.blocked_for(robot, request)
            rra = self.rra_for(robot, blocked)
            table.remove_final(robot.id)
            search = a_star_spacetime(
                self.graph, robot.profile, robot.id, robot.node, robot.time,
                robot.heading, robot.goal, table, window=window,
                wait_step=cfg.wait_step, blocked=blocked, rra=rra, penalty=penalty,
                delta=delta, max_expansions=cfg.expansion_budget, deadline=deadline)
            result.expansions += search.expansions
            result.timed_out |= search.timed_out
            if search.path is None:
                # stay put: the robot keeps (re-acquires) its standing claim
                table.add_final(robot.id, robot.node, robot.time)
                result.paths[robot.id] = None
                continue
            reservations = reservations_for(search.path, self.graph, robot)
            table.add_all(reservations)
            arrival = arrival_of(search.path, self.graph, robot)
            table.try_add_final(robot.id, search.path.last_node(), arrival)
            result.paths[robot.id] = search.path
        return result
