"""Search machinery shared by all planners.

Three searches operate on the waypoint graph under the kinematic cost model:

* RRAContext - resumable reverse search from a goal, giving optimal
  single-agent cost-to-go values (and nominal paths) on demand.
* a_star_spatial - forward search without time or reservations, with an
  optional per-node bias added to the heuristic.
* a_star_spacetime - windowed space-time search against a reservation table,
  with wait actions quantized to the configured step.

Straight runs over collinear arcs are treated as one continuous drive: a
same-direction successor is costed from the run's anchor (the last stop or
rotation), never re-accelerated per arc.  Search states therefore carry the
anchor departure time and the distance covered since it; the state's g value
is always the arrival time if the robot were to stop at the state's node.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

from .kinematics import (KinematicProfile, drive_time, rotation_time, shorter_arc,
                         time_at_position)
from .model import PathStep, TimedPath, WarehouseGraph

INF = math.inf
ANGLE_EPS = 1e-9


def _akey(angle: float | None):
    return None if angle is None else round(angle, 9)


def h_estimate(graph: WarehouseGraph, profile: KinematicProfile,
               node: str, goal: str) -> float:
    """Driving time for the euclidean distance; admissible and consistent.

    A cross-tier pair additionally needs at least one elevator ride.
    """
    h = drive_time(graph.distance(node, goal), profile)
    if not graph.same_tier(node, goal):
        transits = [e.transit_time for e in graph.elevators.values()]
        h += min(transits) if transits else INF
    return h


class DeltaViolation(AssertionError):
    """An expanded arc cost fell below the positive lower bound delta."""


class _DeltaCheck:
    """Counts expanded arcs and asserts the arc-cost lower bound when armed."""

    def __init__(self, delta: float | None):
        self.delta = delta
        self.violations = 0
        self.checked = 0

    def check(self, cost: float):
        if self.delta is None:
            return
        self.checked += 1
        if cost < self.delta - 1e-9:
            self.violations += 1
            raise DeltaViolation(f"arc cost {cost!r} below delta {self.delta!r}")


# ---------------------------------------------------------------------------
# Resumable reverse search
# ---------------------------------------------------------------------------

class RRAContext:
    """Optimal cost-to-go from every waypoint to a fixed goal, computed lazily.

    The search runs over the transpose graph and is resumed whenever a query
    asks for a node that has not closed yet, so answers are independent of
    query order.  Rotations at the queried node and at the goal itself are not
    charged; turns at interior nodes are.
    """

    def __init__(self, graph: WarehouseGraph, profile: KinematicProfile, goal: str,
                 blocked=frozenset()):
        self.graph = graph
        self.profile = profile
        self.goal = goal
        self.blocked = frozenset(blocked)
        self.expansions = 0
        self._best: dict[tuple, float] = {}
        self._parent: dict[tuple, tuple | None] = {}
        self._node_cost: dict[str, float] = {}
        self._node_state: dict[str, tuple] = {}
        self._dir_cost: dict[str, dict[float | None, float]] = {}
        self._heap: list = []
        self._seq = 0
        self._drained = False
        root = (goal, None, 0.0)
        self._push(0.0, root, None, 0.0)

    def _push(self, g: float, key: tuple, parent: tuple | None, rest: float):
        old = self._best.get(key)
        if old is not None and old <= g + 1e-12:
            return
        self._best[key] = g
        self._parent[key] = parent
        self._seq += 1
        heapq.heappush(self._heap, (g, self._seq, key, rest))

    def _step(self) -> bool:
        """Pop and expand one state; False when the frontier is exhausted."""
        while self._heap:
            g, _, key, rest = heapq.heappop(self._heap)
            if g > self._best.get(key, INF) + 1e-12:
                continue
            node, angle, run = key
            if node not in self._node_cost:
                self._node_cost[node] = g
                self._node_state[node] = key
            dirs = self._dir_cost.setdefault(node, {})
            akey = _akey(angle)
            if akey not in dirs:
                dirs[akey] = g
            self.expansions += 1
            self._expand(key, g, rest)
            return True
        self._drained = True
        return False

    def _expand(self, key: tuple, g: float, rest: float):
        node, angle, run = key
        profile = self.profile
        for arc in self.graph.reverse_arcs(node):
            pred = arc.to
            if pred in self.blocked:
                continue
            if angle is not None and abs(arc.angle - angle) <= ANGLE_EPS:
                # prepend a collinear arc: the straight run grows
                new_run = run + arc.length
                new_g = drive_time(new_run, profile) + rest
                self._push(new_g, (pred, arc.angle, new_run), key, rest)
            else:
                # the forward robot stops at `node`, turns, then runs toward goal
                turn = 0.0 if angle is None else shorter_arc(arc.angle, angle)
                new_rest = rest + rotation_time(turn, profile.omega_max) + \
                    drive_time(run, profile)
                new_g = drive_time(arc.length, profile) + new_rest
                self._push(new_g, (pred, arc.angle, arc.length), key, new_rest)
        elevator = self.graph.elevator_at(node)
        if elevator is not None:
            stop_cost = drive_time(run, profile) + rest
            for port in elevator.ports:
                if port == node or port in self.blocked:
                    continue
                new_rest = stop_cost + elevator.transit_time
                self._push(new_rest, (port, None, 0.0), key, new_rest)

    def cost_to_go(self, node: str) -> float:
        """Optimal time from standstill at `node` to standstill at the goal."""
        while node not in self._node_cost and not self._drained:
            self._step()
        return self._node_cost.get(node, INF)

    def cost_to_go_dirs(self, node: str) -> dict[float | None, float]:
        """Per-first-leg-heading cost-to-go; drains the search."""
        while not self._drained:
            self._step()
        return dict(self._dir_cost.get(node, {}))

    def nominal_path(self, node: str) -> list[str] | None:
        """Node sequence of one optimal path from `node`, or None if unreachable."""
        if self.cost_to_go(node) == INF:
            return None
        key = self._node_state[node]
        nodes = [node]
        while True:
            key = self._parent[key]
            if key is None:
                break
            nodes.append(key[0])
        return nodes


# ---------------------------------------------------------------------------
# Forward searches
# ---------------------------------------------------------------------------

@dataclass
class _State:
    node: str
    angle: float | None      # heading on arrival (None = unconstrained)
    g: float                 # arrival time, stopping at node
    anchor_dep: float        # drive start of the current straight run
    anchor_dist: float       # distance covered since the anchor (0 = at rest)
    parent: int | None
    entry: str               # 'start' | 'wait' | 'hop' | 'run' | 'elev'
    wait: float = 0.0


@dataclass
class SpatialResult:
    nodes: list[str]
    cost: float
    expansions: int


def a_star_spatial(graph: WarehouseGraph, profile: KinematicProfile,
                   start: str, goal: str, blocked=frozenset(),
                   start_orientation: float | None = None,
                   penalty: dict[str, float] | None = None,
                   delta: float | None = None,
                   max_expansions: int | None = None) -> SpatialResult:
    """Time-optimal waypoint sequence ignoring other robots and time.

    `penalty` adds per-node virtual cost to the heuristic only, steering the
    search around penalized nodes without changing true costs.
    """
    penalty = penalty or {}
    check = _DeltaCheck(delta)
    states: list[_State] = []
    heap: list = []
    best: dict[tuple, float] = {}
    expansions = 0

    def fval(st: _State) -> float:
        if st.anchor_dist > 0.0:
            base = st.anchor_dep + drive_time(st.anchor_dist + graph.distance(st.node, goal),
                                              profile)
        else:
            base = st.g + h_estimate(graph, profile, st.node, goal)
        return base + penalty.get(st.node, 0.0)

    def push(st: _State):
        key = (st.node, _akey(st.angle), round(st.anchor_dist, 9))
        if best.get(key, INF) <= st.g + 1e-12:
            return
        best[key] = st.g
        states.append(st)
        heapq.heappush(heap, (fval(st), -st.g, st.node, len(states) - 1))

    push(_State(start, start_orientation, 0.0, 0.0, 0.0, None, "start"))
    goal_state = None
    while heap:
        _, _, _, idx = heapq.heappop(heap)
        st = states[idx]
        if best.get((st.node, _akey(st.angle), round(st.anchor_dist, 9)), INF) < st.g - 1e-12:
            continue
        if st.node == goal:
            goal_state = st
            break
        expansions += 1
        if max_expansions is not None and expansions > max_expansions:
            break
        for arc in graph.arcs(st.node):
            if arc.to in blocked:
                continue
            if st.anchor_dist > 0.0 and st.angle is not None \
                    and abs(arc.angle - st.angle) <= ANGLE_EPS:
                dist = st.anchor_dist + arc.length
                g = st.anchor_dep + drive_time(dist, profile)
                check.check(g - st.g)
                push(_State(arc.to, arc.angle, g, st.anchor_dep, dist, idx, "run"))
            else:
                turn = 0.0 if st.angle is None else shorter_arc(st.angle, arc.angle)
                dep = st.g + rotation_time(turn, profile.omega_max)
                g = dep + drive_time(arc.length, profile)
                check.check(g - st.g)
                push(_State(arc.to, arc.angle, g, dep, arc.length, idx, "hop"))
        elevator = graph.elevator_at(st.node)
        if elevator is not None:
            for port in elevator.ports:
                if port == st.node or port in blocked:
                    continue
                g = st.g + elevator.transit_time
                check.check(g - st.g)
                push(_State(port, st.angle, g, g, 0.0, idx, "elev"))

    if goal_state is None:
        return SpatialResult([], INF, expansions)
    nodes = []
    st = goal_state
    while st is not None:
        nodes.append(st.node)
        st = states[st.parent] if st.parent is not None else None
    nodes.reverse()
    return SpatialResult(nodes, goal_state.g, expansions)


@dataclass
class SpaceTimeResult:
    path: TimedPath | None
    reached_goal: bool = False
    truncated: bool = False
    expansions: int = 0
    timed_out: bool = False
    cost: float = INF          # arrival time (goal) or f estimate (boundary)
    delta_checked: int = 0


def a_star_spacetime(graph: WarehouseGraph, profile: KinematicProfile, robot_id: str,
                     start: str, start_time: float, start_orientation: float | None,
                     goal: str, table, window: float = INF, wait_step: float = 2.0,
                     blocked=frozenset(), rra: RRAContext | None = None,
                     penalty: dict[str, float] | None = None,
                     constraints=(), delta: float | None = None,
                     max_expansions: int | None = None,
                     deadline: float | None = None) -> SpaceTimeResult:
    """Windowed space-time search against the reservation table.

    Conflicts are checked for every node window that starts inside the time
    window; a state whose arrival falls past the window becomes a boundary
    candidate evaluated with the cost-to-go estimate (the tail beyond the
    window is not planned here).  An empty result means no conflict-free
    prefix exists.
    """
    import time as _time

    penalty = penalty or {}
    window_end = start_time + window
    check = _DeltaCheck(delta)
    cons_by_node: dict[str, list[tuple[float, float]]] = {}
    for cn, c0, c1 in constraints:
        cons_by_node.setdefault(cn, []).append((c0, c1))

    def conflicts(node: str, a: float, b: float) -> bool:
        if a >= window_end or b <= a:
            return False
        if not table.is_free(node, a, b, ignoring=robot_id):
            return True
        for c0, c1 in cons_by_node.get(node, ()):
            if a < c1 and c0 < b:
                return True
        return False

    # a robot mid-run can save at most its full ramp time over a standstill start
    ramp_slack = profile.v_max * (profile.inv_accel + profile.inv_decel)

    def h_at(st: _State) -> float:
        if st.anchor_dist > 0.0:
            reach = st.anchor_dep + drive_time(st.anchor_dist + graph.distance(st.node, goal),
                                               profile)
            rem = max(reach - st.g, 0.0)
            if rra is not None:
                rem = max(rem, rra.cost_to_go(st.node) - ramp_slack)
            return rem + penalty.get(st.node, 0.0)
        h = h_estimate(graph, profile, st.node, goal)
        if rra is not None:
            h = max(h, rra.cost_to_go(st.node))
        return h + penalty.get(st.node, 0.0)

    def boundary_value(st: _State) -> float:
        # estimated completion when the tail beyond the window is planned later
        h = h_estimate(graph, profile, st.node, goal)
        if rra is not None:
            h = max(h, rra.cost_to_go(st.node))
        return st.g + h + penalty.get(st.node, 0.0)

    states: list[_State] = []
    heap: list = []
    seen: set = set()
    expansions = 0
    timed_out = False

    def push(st: _State):
        key = (st.node, _akey(st.angle), round(st.g, 7), round(st.anchor_dist, 7))
        if key in seen:
            return
        seen.add(key)
        states.append(st)
        # ties on f prefer un-penalized nodes, then deeper states, then standing
        # still over churning, then node id
        heapq.heappush(heap, (st.g + h_at(st), penalty.get(st.node, 0.0), -st.g,
                              st.anchor_dist > 0.0, st.node, len(states) - 1))

    def run_nodes(st: _State) -> tuple[list[str], list[float]]:
        # nodes of the current straight run, anchor first, with cumulative dists
        chain = [st]
        cur = st
        while cur.anchor_dist > 0.0:
            cur = states[cur.parent]
            chain.append(cur)
        chain.reverse()
        return [s.node for s in chain], [s.anchor_dist for s in chain], chain[0]

    def settle_time(st: _State) -> float:
        # first arrival at the node the state currently occupies
        cur = st
        while cur.parent is not None and states[cur.parent].node == cur.node:
            cur = states[cur.parent]
        return cur.g

    push(_State(start, start_orientation, start_time, start_time, 0.0, None, "start"))
    terminal = None
    reached_goal = False
    best_boundary = None
    best_key = (INF, INF, INF)
    while heap:
        f = heap[0][0]
        if best_boundary is not None and f > best_key[0] + 1e-9:
            break
        idx = heapq.heappop(heap)[-1]
        st = states[idx]
        if st.node == goal:
            terminal, reached_goal = st, True
            break
        if st.g >= window_end - 1e-12:
            # window boundary: candidate resting state, not expanded further;
            # ties prefer un-penalized nodes reached early
            key = (boundary_value(st), penalty.get(st.node, 0.0), settle_time(st))
            if key < best_key:
                best_key, best_boundary = key, st
            continue
        expansions += 1
        if max_expansions is not None and expansions > max_expansions:
            timed_out = True
            break
        if deadline is not None and expansions % 64 == 0 and _time.perf_counter() > deadline:
            timed_out = True
            break

        # wait in place for one quantum
        if not conflicts(st.node, st.g, st.g + wait_step):
            check.check(wait_step)
            push(_State(st.node, st.angle, st.g + wait_step, st.g + wait_step, 0.0,
                        idx, "wait", wait=wait_step))

        for arc in graph.arcs(st.node):
            if arc.to in blocked:
                continue
            if st.anchor_dist > 0.0 and st.angle is not None \
                    and abs(arc.angle - st.angle) <= ANGLE_EPS:
                nodes, dists, anchor = run_nodes(st)
                nodes = nodes + [arc.to]
                dists = dists + [st.anchor_dist + arc.length]
                total = dists[-1]
                dep = st.anchor_dep
                cross = [dep + time_at_position(d, total, profile) for d in dists]
                windows = [(nodes[0], anchor.g, cross[1])]
                windows += [(nodes[k], cross[k - 1], cross[k + 1])
                            for k in range(1, len(nodes) - 1)]
                windows.append((nodes[-1], cross[-2], cross[-1]))
                if any(conflicts(n, a, b) for n, a, b in windows):
                    continue
                g = cross[-1]
                check.check(g - st.g)
                push(_State(arc.to, arc.angle, g, dep, total, idx, "run"))
            else:
                turn = 0.0 if st.angle is None else shorter_arc(st.angle, arc.angle)
                dep = st.g + rotation_time(turn, profile.omega_max)
                g = dep + drive_time(arc.length, profile)
                if conflicts(st.node, st.g, g) or conflicts(arc.to, dep, g):
                    continue
                check.check(g - st.g)
                push(_State(arc.to, arc.angle, g, dep, arc.length, idx, "hop"))

        elevator = graph.elevator_at(st.node)
        if elevator is not None:
            t1 = st.g + elevator.transit_time
            if not any(conflicts(p, st.g, t1) for p in elevator.ports):
                for port in elevator.ports:
                    if port == st.node or port in blocked:
                        continue
                    check.check(elevator.transit_time)
                    push(_State(port, st.angle, t1, t1, 0.0, idx, "elev"))

    if terminal is None:
        terminal = best_boundary
    result = SpaceTimeResult(None, expansions=expansions, timed_out=timed_out,
                             delta_checked=check.checked)
    if terminal is None:
        return result
    cost = terminal.g if reached_goal else boundary_value(terminal)
    if math.isinf(cost):
        # boundary state with no way to ever reach the goal: report failure
        return result
    result.path = _reconstruct_path(states, terminal, robot_id, start_time)
    result.reached_goal = reached_goal
    result.truncated = not reached_goal
    result.cost = cost
    return result


def _reconstruct_path(states: list[_State], terminal: _State, robot_id: str,
                      start_time: float) -> TimedPath:
    chain = []
    st = terminal
    while st is not None:
        chain.append(st)
        st = states[st.parent] if st.parent is not None else None
    chain.reverse()
    steps: list[list] = [[chain[0].node, True, 0.0]]
    for st in chain[1:]:
        if st.entry == "wait":
            steps[-1][1] = True
            steps[-1][2] += st.wait
        elif st.entry == "run":
            steps.append([st.node, False, 0.0])
        else:  # 'hop' or 'elev': the previous node is a standstill point
            steps[-1][1] = True
            steps.append([st.node, st.entry == "elev", 0.0])
    steps[-1][1] = True
    return TimedPath(robot_id, start_time,
                     [PathStep(n, bool(s), w) for n, s, w in steps])
