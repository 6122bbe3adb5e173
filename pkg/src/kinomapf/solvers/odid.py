"""Operator decomposition with independence detection.

OD expands one robot at a time: the robot with the lowest timestamp picks its
next action (wait, straight-run continuation, turn-and-drive, or elevator
ride), and every candidate action is vetted against the other robots'
reservations including an open-ended stand at their current nodes.  Costs are
sums over robots; heuristics come from the reverse-search cost-to-go values
plus the initial rotation.  ID plans singleton groups first and merges groups
whose solutions collide, replanning the merged group with OD.
"""

from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass

from ..kinematics import drive_time, rotation_time, shorter_arc, time_at_position
from ..model import PathStep, TimedPath
from .base import PlanRequest, PlanResult, Solver

INF = math.inf


@dataclass(frozen=True)
class _AgentState:
    node: str
    heading: float | None
    ts: float                      # stop-arrival timestamp
    dep: float                     # drive start of the current run
    run: tuple[str, ...]           # nodes of the current run, anchor first
    dists: tuple[float, ...]       # cumulative distances along the run

    @property
    def moving(self) -> bool:
        return len(self.run) > 1


@dataclass
class _ODNode:
    agents: tuple[_AgentState, ...]
    windows: tuple[tuple, ...]     # per agent: tuple of (node, t0, t1) claims
    parent: "_ODNode | None"
    moved: int = -1
    action: str = "root"           # root | wait | run | hop | elev
    wait: float = 0.0
    f: float = 0.0

    def max_ts(self) -> float:
        return max(a.ts for a in self.agents)


class OdId(Solver):
    name = "odid"

    def plan(self, request: PlanRequest) -> PlanResult:
        result = PlanResult()
        movers = sorted([r for r in request.robots if r.goal is not None],
                        key=lambda r: r.id)
        base: dict[str, list[tuple[float, float, str]]] = {}
        for robot in request.robots:
            for res in robot.committed:
                base.setdefault(res.waypoint, []).append((res.start, res.end, robot.id))

        groups: list[tuple] = [(r.id,) for r in movers]
        by_id = {r.id: r for r in movers}
        solutions: dict[tuple, dict] = {}
        complete: dict[tuple, bool] = {}

        root_fs: dict[str, float] = {}
        for _ in range(max(len(movers), 1)):
            for group in groups:
                if group not in solutions:
                    paths, claims, done, exp, root_f = self._od_search(
                        [by_id[rid] for rid in group], base, request)
                    solutions[group] = {"paths": paths, "claims": claims}
                    complete[group] = done
                    root_fs["+".join(group)] = root_f
                    result.expansions += exp
            conflict = self._cross_group_conflict(groups, solutions)
            if conflict is None:
                break
            ga, gb = conflict
            merged = tuple(sorted(ga + gb))
            groups = [g for g in groups if g not in (ga, gb)] + [merged]
            if len(groups) == 1 and merged in solutions:
                break

        horizon = INF
        for group in groups:
            sol = solutions[group]
            result.paths.update(sol["paths"])
            if not complete[group]:
                result.timed_out = True
        residual = self._cross_group_conflict(groups, solutions)
        if residual is not None:
            ga, gb = residual
            horizon = self._conflict_time(solutions[ga]["claims"], solutions[gb]["claims"])
        result.collision_horizon = horizon
        result.notes["groups"] = [list(g) for g in groups]
        result.notes["root_f"] = root_fs
        return result

    # -- independence detection helpers -------------------------------------

    def _cross_group_conflict(self, groups, solutions):
        for i, ga in enumerate(groups):
            for gb in groups[i + 1:]:
                t = self._conflict_time(solutions[ga]["claims"], solutions[gb]["claims"])
                if t < INF:
                    return ga, gb
        return None

    @staticmethod
    def _conflict_time(claims_a, claims_b) -> float:
        earliest = INF
        by_node: dict[str, list] = {}
        for (node, a, b) in claims_b:
            by_node.setdefault(node, []).append((a, b))
        for (node, a, b) in claims_a:
            for (c, d) in by_node.get(node, ()):
                if a < d and c < b:
                    earliest = min(earliest, max(a, c))
        return earliest

    # -- the OD search -------------------------------------------------------

    def _od_search(self, group, base, request: PlanRequest):
        cfg = self.config
        wait_step = cfg.od_wait_step if cfg.od_wait_step is not None else cfg.wait_step
        rng = request.rng
        blocked = {r.id: self.blocked_for(r, request) for r in group}
        rra = {r.id: self.rra_for(r, blocked[r.id]) for r in group}
        goals = {r.id: r.goal for r in group}
        deadline = self.deadline()

        def completion(robot, st: _AgentState) -> float:
            if st.node == goals[robot.id] and not st.moving:
                return st.ts
            if st.moving:
                remain = st.dep + drive_time(
                    st.dists[-1] + self.graph.distance(st.node, goals[robot.id]),
                    robot.profile)
                return max(st.ts, remain)
            dirs = rra[robot.id].cost_to_go_dirs(st.node)
            best = INF
            for heading, cost in dirs.items():
                turn = 0.0 if (st.heading is None or heading is None) \
                    else shorter_arc(st.heading, heading)
                best = min(best, rotation_time(turn, robot.profile.omega_max) + cost)
            return st.ts + best

        def node_f(node: _ODNode) -> float:
            return sum(completion(r, st) for r, st in zip(group, node.agents))

        start_agents = tuple(_AgentState(r.node, r.heading, r.time, r.time,
                                         (r.node,), (0.0,)) for r in group)
        root = _ODNode(start_agents, tuple(() for _ in group), None)
        root.f = node_f(root)
        counter = itertools.count()
        heap = [(root.f, next(counter), root)]
        all_nodes = [root]
        expanded = 0
        goal_node = None
        global_max_ts = root.max_ts()

        def conflicts(idx: int, node: _ODNode, wp: str, a: float, b: float) -> bool:
            me = group[idx].id
            for (s, e, owner) in base.get(wp, ()):
                if owner != me and a < e and s < b:
                    return True
            for j, agent in enumerate(node.agents):
                if j == idx:
                    continue
                for (n, s, e) in node.windows[j]:
                    if n == wp and a < e and s < b:
                        return True
                # open-ended stand at the other robot's current node
                if agent.node == wp and b > agent.ts:
                    return True
            return False

        while heap:
            _, _, node = heapq.heappop(heap)
            if all(st.node == goals[r.id] and not st.moving
                   for r, st in zip(group, node.agents)):
                goal_node = node
                break
            expanded += 1
            if expanded > cfg.od_max_states or self.out_of_time(deadline):
                break
            ts_values = [a.ts for a in node.agents]
            low = min(ts_values)
            tied = [i for i, t in enumerate(ts_values) if t == low]
            if node.parent is None and len(tied) > 1:
                idx = rng.choice(tied)
            else:
                idx = tied[0]
            robot = group[idx]
            st = node.agents[idx]

            def emit(new_state: _AgentState, new_windows, action, wait=0.0):
                nonlocal global_max_ts
                agents = list(node.agents)
                agents[idx] = new_state
                windows = list(node.windows)
                windows[idx] = windows[idx] + tuple(new_windows)
                child = _ODNode(tuple(agents), tuple(windows), node, idx, action, wait)
                child.f = node_f(child)
                heapq.heappush(heap, (child.f, next(counter), child))
                all_nodes.append(child)
                global_max_ts = max(global_max_ts, child.max_ts())

            # wait one quantum
            if not conflicts(idx, node, st.node, st.ts, st.ts + wait_step):
                emit(_AgentState(st.node, st.heading, st.ts + wait_step,
                                 st.ts + wait_step, (st.node,), (0.0,)),
                     [(st.node, st.ts, st.ts + wait_step)], "wait", wait_step)

            for arc in self.graph.arcs(st.node):
                if arc.to in blocked[robot.id]:
                    continue
                if st.moving and st.heading is not None \
                        and abs(arc.angle - st.heading) <= 1e-9:
                    run = st.run + (arc.to,)
                    dists = st.dists + (st.dists[-1] + arc.length,)
                    cross = [st.dep + time_at_position(d, dists[-1], robot.profile)
                             for d in dists]
                    wins = [(run[0], st.dep, cross[1])]
                    wins += [(run[k], cross[k - 1], cross[k + 1])
                             for k in range(1, len(run) - 1)]
                    wins.append((run[-1], cross[-2], cross[-1]))
                    if any(conflicts(idx, node, n, a, b) for n, a, b in wins):
                        continue
                    emit(_AgentState(arc.to, arc.angle, cross[-1], st.dep, run, dists),
                         wins, "run")
                else:
                    turn = 0.0 if st.heading is None else shorter_arc(st.heading, arc.angle)
                    dep = st.ts + rotation_time(turn, robot.profile.omega_max)
                    g = dep + drive_time(arc.length, robot.profile)
                    wins = [(st.node, st.ts, g), (arc.to, dep, g)]
                    if any(conflicts(idx, node, n, a, b) for n, a, b in wins):
                        continue
                    emit(_AgentState(arc.to, arc.angle, g, dep,
                                     (st.node, arc.to), (0.0, arc.length)), wins, "hop")

            elevator = self.graph.elevator_at(st.node)
            if elevator is not None:
                t1 = st.ts + elevator.transit_time
                wins = [(p, st.ts, t1) for p in elevator.ports]
                if not any(conflicts(idx, node, n, a, b) for n, a, b in wins):
                    for port in elevator.ports:
                        if port == st.node or port in blocked[robot.id]:
                            continue
                        emit(_AgentState(port, st.heading, t1, t1, (port,), (0.0,)),
                             wins, "elev")

        chosen = goal_node
        done = goal_node is not None
        if chosen is None:
            half = global_max_ts / 2.0 if global_max_ts > 0 else 0.0
            pool = [n for n in all_nodes if n.max_ts() >= half] or all_nodes
            chosen = min(pool, key=lambda n: n.f)
        paths = self._paths_from(chosen, group)
        claims = []
        for i, robot in enumerate(group):
            claims.extend(chosen.windows[i])
            st = chosen.agents[i]
            claims.append((st.node, st.ts, INF))   # final stand
        return paths, claims, done, expanded, root.f

    def _paths_from(self, node: _ODNode, group) -> dict[str, TimedPath]:
        chain = []
        cur = node
        while cur is not None:
            chain.append(cur)
            cur = cur.parent
        chain.reverse()
        steps: dict[int, list] = {i: [[chain[0].agents[i].node, True, 0.0]]
                                  for i in range(len(group))}
        for nd in chain[1:]:
            i = nd.moved
            seq = steps[i]
            if nd.action == "wait":
                seq[-1][1] = True
                seq[-1][2] += nd.wait
            elif nd.action == "run":
                seq.append([nd.agents[i].node, False, 0.0])
            else:
                seq[-1][1] = True
                seq.append([nd.agents[i].node, nd.action == "elev", 0.0])
        out = {}
        for i, robot in enumerate(group):
            seq = steps[i]
            seq[-1][1] = True
            out[robot.id] = TimedPath(robot.id, robot.time,
                                      [PathStep(n, bool(s), w) for n, s, w in seq])
        return out
