"""Flow-annotated replanning: hop-wise execution with two evasion strategies.

Each robot follows its unconstrained shortest path one hop at a time (a hop is
rotate + one straight run + stop).  A hop that cannot be reserved is shortened;
a fully blocked robot first waits, and once the waits-for relation closes into
a cycle (or the wait exceeds the wait step) an evasion strategy kicks in:
rerouting around the blocker, or a random non-deadlocking side step.
"""

from __future__ import annotations

import math

from ..model import PathStep, TimedPath
from ..search import RRAContext
from .base import PlanRequest, PlanResult, Solver, arrival_of, reservations_for

INF = math.inf


class Far(Solver):
    def __init__(self, graph, config, strategy: str):
        super().__init__(graph, config)
        if strategy not in ("reroute", "step"):
            raise ValueError(f"unknown FAR evasion strategy {strategy!r}")
        self.strategy = strategy
        self.name = "far-r" if strategy == "reroute" else "far-e"
        self.waits_for: dict[str, str] = {}
        self.waiting_since: dict[str, float] = {}

    # -- waits-for relation -------------------------------------------------

    def _has_cycle(self, start: str) -> bool:
        seen = set()
        node = start
        while node in self.waits_for:
            node = self.waits_for[node]
            if node == start:
                return True
            if node in seen:
                return False
            seen.add(node)
        return False

    def _clear_wait(self, robot_id: str):
        self.waits_for.pop(robot_id, None)
        self.waiting_since.pop(robot_id, None)

    # -- hop extraction -----------------------------------------------------

    def _first_run(self, nominal: list[str]) -> list[str]:
        """Maximal collinear prefix of the nominal path (or one elevator ride)."""
        if len(nominal) < 2:
            return nominal
        if self.graph.is_elevator_pair(nominal[0], nominal[1]):
            return nominal[:2]
        heading = self.graph.arc(nominal[0], nominal[1]).angle
        run = [nominal[0], nominal[1]]
        for nxt in nominal[2:]:
            if self.graph.is_elevator_pair(run[-1], nxt):
                break
            arc = self.graph.arc(run[-1], nxt)
            if arc is None or abs(arc.angle - heading) > 1e-9:
                break
            run.append(nxt)
        return run

    def _try_hop(self, robot, run: list[str], table, trailing_wait: float = 0.0):
        """Longest reservable prefix of the run; returns (path, reservations) or
        (None, blocking reservation).

        A hop is only accepted when the robot may also rest at its end node
        indefinitely (the final reservation the caller will place must fit).
        """
        from ..reservations import Reservation
        blocking = None
        for j in range(len(run) - 1, 0, -1):
            steps = [PathStep(n, i == 0 or i == j, 0.0) for i, n in enumerate(run[:j + 1])]
            if trailing_wait > 0.0:
                steps[-1] = PathStep(steps[-1].waypoint, True, trailing_wait)
            path = TimedPath(robot.id, robot.time, steps)
            reservations = reservations_for(path, self.graph, robot)
            arrival = arrival_of(path, self.graph, robot)
            candidates = reservations + [Reservation(run[j], arrival, INF, robot.id,
                                                     final=True)]
            conflict = table.first_conflict(candidates, ignoring=robot.id)
            if conflict is None:
                return path, reservations
            if j == 1:
                blocking = conflict[2]
        return None, blocking

    # -- evasion strategies ---------------------------------------------------

    def _evade_reroute(self, robot, request, blocked, blocker_node, table):
        extra = set()
        if blocker_node is not None:
            extra.add(blocker_node)
        for _ in range(self.config.far_reroute_limit):
            ctx = RRAContext(self.graph, robot.profile, robot.goal,
                             blocked | frozenset(extra))
            nominal = ctx.nominal_path(robot.node)
            if not nominal or len(nominal) < 2:
                return None, None
            path, info = self._try_hop(robot, self._first_run(nominal), table)
            if path is not None:
                return path, reservations_for(path, self.graph, robot)
            if info is None or info.waypoint in extra:
                return None, None
            extra.add(info.waypoint)
        return None, None

    def _evade_step(self, robot, request, blocked, table, rng):
        wait = rng.uniform(0.0, self.config.wait_step)
        candidates = []
        for arc in sorted(self.graph.arcs(robot.node), key=lambda a: a.to):
            if arc.to in blocked:
                continue
            path, _ = self._try_hop(robot, [robot.node, arc.to], table,
                                    trailing_wait=wait)
            if path is not None:
                candidates.append(path)
        if not candidates:
            return None, None
        path = rng.choice(candidates)
        return path, reservations_for(path, self.graph, robot)

    # -- main loop ------------------------------------------------------------

    def plan(self, request: PlanRequest) -> PlanResult:
        cfg = self.config
        result = PlanResult()
        table = request.table
        robots = sorted(request.robots, key=lambda r: r.id)
        requesters = [r for r in robots if r.needs_path]

        # rebuild: in-flight motion plus a final block for every standing robot
        table.clear()
        for robot in robots:
            table.add_all(robot.committed)
            table.add_final(robot.id, robot.node, robot.time)

        for robot in sorted(requesters, key=lambda r: self.sort_key(r)):
            if robot.goal is None:
                continue
            table.remove_final(robot.id)
            blocked = self.blocked_for(robot, request)
            rra = self.rra_for(robot, blocked)
            nominal = rra.nominal_path(robot.node)
            path = reservations = None
            blocker = None
            if nominal and len(nominal) >= 2:
                path, info = self._try_hop(robot, self._first_run(nominal), table)
                if path is not None:
                    reservations = info
                else:
                    blocker = info.owner if info is not None else None
            if path is None:
                if blocker is not None:
                    self.waits_for[robot.id] = blocker
                waited = self.waiting_since.get(robot.id)
                if waited is None:
                    # first failure: wait one step in place
                    self.waiting_since[robot.id] = request.now
                    path = TimedPath(robot.id, robot.time,
                                     [PathStep(robot.node, True, cfg.wait_step)])
                    reservations = []
                elif self._has_cycle(robot.id) or request.now - waited > cfg.wait_step:
                    if self.strategy == "reroute":
                        blocker_node = None
                        if blocker is not None:
                            held = table.final_of(blocker)
                            blocker_node = held.waypoint if held else None
                        path, reservations = self._evade_reroute(
                            robot, request, blocked, blocker_node, table)
                    else:
                        path, reservations = self._evade_step(
                            robot, request, blocked, table, request.rng)
                    if path is None:
                        path = TimedPath(robot.id, robot.time,
                                         [PathStep(robot.node, True, cfg.wait_step)])
                        reservations = []
            if path is not None and path.last_node() != robot.node:
                self._clear_wait(robot.id)
            if reservations:
                table.add_all(reservations)
            end = path.last_node() if path is not None else robot.node
            if path is None or end == robot.node:
                arrival = robot.time    # standing the whole while
            else:
                arrival = arrival_of(path, self.graph, robot)
            table.try_add_final(robot.id, end, arrival)
            result.paths[robot.id] = path
        return result
