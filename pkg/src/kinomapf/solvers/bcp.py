"""Biased cost pathfinding.

Every robot is planned independently in the two-dimensional search space with
a per-robot heuristic; whenever a robot's timed reservations collide with an
already accepted path, its heuristic is bumped at the colliding node and the
whole pass repeats.  On running out of budget the pass with the latest first
collision is returned, together with that collision horizon.
"""

from __future__ import annotations

import math

from ..model import PathStep, TimedPath
from ..search import a_star_spatial
from .base import PlanRequest, PlanResult, Solver, path_from_nodes, reservations_for

INF = math.inf


class Bcp(Solver):
    name = "bcp"

    def plan(self, request: PlanRequest) -> PlanResult:
        cfg = self.config
        deadline = self.deadline()
        result = PlanResult()
        table = request.table
        robots = sorted(request.robots, key=lambda r: self.sort_key(r))
        delta = self.delta_for(robots)
        penalties: dict[str, dict[str, float]] = {r.id: {} for r in robots}

        best_paths: dict[str, TimedPath | None] = {}
        best_horizon = -INF
        iterations = 0
        while iterations < cfg.bcp_iterations:
            iterations += 1
            table.clear()
            for robot in robots:
                table.add_all(robot.committed)
            paths: dict[str, TimedPath | None] = {}
            horizon = INF
            conflicted = False
            for robot in robots:
                if robot.goal is None:
                    continue
                blocked = self.blocked_for(robot, request)
                spatial = a_star_spatial(
                    self.graph, robot.profile, robot.node, robot.goal,
                    blocked=blocked, start_orientation=robot.heading,
                    penalty=penalties[robot.id], delta=delta,
                    max_expansions=cfg.expansion_budget)
                result.expansions += spatial.expansions
                if not spatial.nodes:
                    paths[robot.id] = TimedPath(robot.id, robot.time,
                                                [PathStep(robot.node, True, cfg.wait_step)])
                    continue
                path = path_from_nodes(robot.id, spatial.nodes, self.graph, robot.time)
                paths[robot.id] = path
                reservations = reservations_for(path, self.graph, robot)
                conflict = table.first_conflict(reservations, ignoring=robot.id)
                if conflict is None:
                    table.add_all(reservations)
                else:
                    node, merged, _ = conflict
                    bias = penalties[robot.id]
                    bias[node] = bias.get(node, 0.0) + cfg.biased_cost
                    horizon = min(horizon, max(merged[0], request.now))
                    conflicted = True
            if not conflicted:
                result.paths = paths
                result.collision_horizon = INF
                result.notes["iterations"] = iterations
                return result
            if horizon > best_horizon:
                best_horizon = horizon
                best_paths = paths
            if self.out_of_time(deadline):
                break
        result.paths = best_paths
        result.collision_horizon = best_horizon
        result.timed_out = True
        result.notes["iterations"] = iterations
        return result
