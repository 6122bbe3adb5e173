"""Static problem model: waypoint graph, entities, tasks and feasibility checks.

The warehouse is a multi-tier directed waypoint graph.  Robots carry pods
between storage locations and stations; tasks decompose into subtasks with
explicit completion conditions.  Instances are stored in a line-oriented text
format (see parse_instance / write_instance).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

from .kinematics import KinematicProfile, normalize_angle

EPS = 1e-9


class WaypointKind(str, Enum):
    PLAIN = "plain"
    STORAGE = "storage"
    STATION_GATE = "station-gate"
    QUEUE = "queue"
    ELEVATOR_PORT = "elevator-port"


class StationKind(str, Enum):
    REPLENISH = "repl"
    PICK = "pick"


class TaskKind(str, Enum):
    INSERT = "insert"
    EXTRACT = "extract"
    PARK = "park"
    REST = "rest"


class SubtaskKind(str, Enum):
    MOVE = "move"
    PICKUP = "pickup"
    SETDOWN = "setdown"
    PUT = "put"
    GET = "get"


@dataclass(frozen=True)
class Tier:
    id: str
    length: float   # extent in x, meters
    width: float    # extent in y, meters

    def __post_init__(self):
        if self.length <= 0 or self.width <= 0:
            raise ValueError(f"tier {self.id}: length/width must be > 0")


@dataclass(frozen=True)
class Waypoint:
    id: str
    tier: str
    x: float
    y: float
    kind: WaypointKind = WaypointKind.PLAIN


@dataclass(frozen=True)
class Elevator:
    """Connects ports on different tiers; one robot at a time, constant transit."""

    id: str
    ports: tuple[str, ...]
    transit_time: float

    def __post_init__(self):
        if self.transit_time <= 0:
            raise ValueError(f"elevator {self.id}: transit time must be > 0")


@dataclass(frozen=True)
class Arc:
    """Precomputed outgoing edge: target, length and heading."""

    to: str
    length: float
    angle: float


class WarehouseGraph:
    """Directed waypoint graph with a transpose view and elevator pseudo-arcs."""

    def __init__(self):
        self.tiers: dict[str, Tier] = {}
        self.waypoints: dict[str, Waypoint] = {}
        self.edges: set[tuple[str, str]] = set()
        self.elevators: dict[str, Elevator] = {}
        self._adj: dict[str, list[Arc]] = {}
        self._radj: dict[str, list[Arc]] = {}
        self._port_to_elevator: dict[str, str] = {}

    def add_tier(self, tier: Tier):
        self.tiers[tier.id] = tier

    def add_waypoint(self, wp: Waypoint):
        if wp.tier not in self.tiers:
            raise ValueError(f"waypoint {wp.id}: unknown tier {wp.tier}")
        self.waypoints[wp.id] = wp
        self._adj.setdefault(wp.id, [])
        self._radj.setdefault(wp.id, [])

    def add_edge(self, a: str, b: str):
        if a not in self.waypoints or b not in self.waypoints:
            raise ValueError(f"edge ({a},{b}): unknown waypoint")
        if (a, b) in self.edges:
            return
        wa, wb = self.waypoints[a], self.waypoints[b]
        if wa.tier != wb.tier:
            raise ValueError(f"edge ({a},{b}): endpoints on different tiers")
        self.edges.add((a, b))
        length = math.hypot(wb.x - wa.x, wb.y - wa.y)
        angle = normalize_angle(math.atan2(wb.y - wa.y, wb.x - wa.x))
        self._adj[a].append(Arc(b, length, angle))
        self._radj[b].append(Arc(a, length, angle))

    def add_elevator(self, elevator: Elevator):
        tiers = {self.waypoints[p].tier for p in elevator.ports}
        if len(tiers) < 2:
            raise ValueError(f"elevator {elevator.id}: ports must span >= 2 tiers")
        self.elevators[elevator.id] = elevator
        for p in elevator.ports:
            self._port_to_elevator[p] = elevator.id

    def arcs(self, wp: str) -> list[Arc]:
        return self._adj[wp]

    def reverse_arcs(self, wp: str) -> list[Arc]:
        return self._radj[wp]

    def neighbors(self, wp: str) -> list[str]:
        return [a.to for a in self._adj[wp]]

    def has_edge(self, a: str, b: str) -> bool:
        return (a, b) in self.edges

    def arc(self, a: str, b: str) -> Arc | None:
        for arc in self._adj[a]:
            if arc.to == b:
                return arc
        return None

    def elevator_at(self, wp: str) -> Elevator | None:
        eid = self._port_to_elevator.get(wp)
        return self.elevators[eid] if eid else None

    def is_elevator_pair(self, a: str, b: str) -> bool:
        ea = self._port_to_elevator.get(a)
        return ea is not None and ea == self._port_to_elevator.get(b) and a != b

    def distance(self, a: str, b: str) -> float:
        wa, wb = self.waypoints[a], self.waypoints[b]
        return math.hypot(wb.x - wa.x, wb.y - wa.y)

    def same_tier(self, a: str, b: str) -> bool:
        return self.waypoints[a].tier == self.waypoints[b].tier

    def min_edge_length(self) -> float:
        lengths = [arc.length for arcs in self._adj.values() for arc in arcs]
        return min(lengths) if lengths else 0.0

    def storage_waypoints(self) -> list[str]:
        return [w.id for w in self.waypoints.values() if w.kind == WaypointKind.STORAGE]


@dataclass
class Robot:
    id: str
    profile: KinematicProfile
    home: str
    # dynamic state, mutated by the simulation loop only
    node: str = ""
    tier: str = ""
    x: float = 0.0
    y: float = 0.0
    orientation: float = 0.0   # radians in [0, 2*pi)
    speed: float = 0.0
    carrying: str | None = None  # pod id

    def __post_init__(self):
        if not self.node:
            self.node = self.home


@dataclass
class Pod:
    id: str
    radius: float
    owner: str   # robot id (carried) or storage waypoint id (stored)


@dataclass
class Station:
    id: str
    kind: StationKind
    gate: str
    queue: tuple[str, ...]            # ordered entrance -> ... -> slot before gate
    handle_time: float = 10.0         # seconds per unit, set from experiment config

    @property
    def approach(self) -> str:
        """Waypoint path planning targets; queue entrance, or the gate if no queue."""
        return self.queue[0] if self.queue else self.gate


@dataclass(frozen=True)
class Task:
    kind: TaskKind
    pod: str | None = None        # insert/extract/park target pod
    station: str | None = None    # insert/extract station
    destination: str | None = None  # park storage location / rest waypoint


@dataclass(frozen=True)
class Subtask:
    kind: SubtaskKind
    destination: str | None = None  # move target waypoint


@dataclass(frozen=True)
class PathStep:
    waypoint: str
    stop: bool
    wait: float = 0.0


@dataclass
class TimedPath:
    """Sequence of (waypoint, stop, wait) triples describing one robot's plan."""

    robot: str
    start_time: float
    steps: list[PathStep] = field(default_factory=list)

    def nodes(self) -> list[str]:
        return [s.waypoint for s in self.steps]

    def last_node(self) -> str:
        return self.steps[-1].waypoint


def decompose_task(task: Task, carrying: str | None,
                   pod_location: str | None = None,
                   station_approach: str | None = None) -> list[Subtask]:
    """Expand a task into its ordered subtask list.

    The leading (move, pickup) pair of insert/extract tasks is dropped when the
    robot already carries the target pod.
    """
    if task.kind in (TaskKind.INSERT, TaskKind.EXTRACT):
        handle = SubtaskKind.PUT if task.kind == TaskKind.INSERT else SubtaskKind.GET
        steps = [Subtask(SubtaskKind.MOVE, pod_location),
                 Subtask(SubtaskKind.PICKUP),
                 Subtask(SubtaskKind.MOVE, station_approach),
                 Subtask(handle)]
        if carrying is not None and carrying == task.pod:
            steps = steps[2:]
        return steps
    if task.kind == TaskKind.PARK:
        return [Subtask(SubtaskKind.MOVE, task.destination), Subtask(SubtaskKind.SETDOWN)]
    if task.kind == TaskKind.REST:
        return [Subtask(SubtaskKind.MOVE, task.destination)]
    raise ValueError(f"unknown task kind {task.kind!r}")


@dataclass
class SubtaskState:
    """Snapshot the completion check reads; the simulator fills it per event."""

    robot_node: str
    robot_speed: float
    pod_owner: str | None = None          # owner of the relevant pod
    colocated_for: float = 0.0            # seconds robot+pod+waypoint have coincided
    serviced_for: float = 0.0             # seconds robot+pod have stood at the station
    lift_time: float = 3.0                # pod lift/set duration
    station_handle_time: float = 10.0     # per-unit handling time at the station
    units: int = 1                        # units handled in this service


def subtask_completed(subtask: Subtask, state: SubtaskState, robot: Robot) -> bool:
    """Check the switch condition for the active subtask at the current instant."""
    if subtask.kind == SubtaskKind.MOVE:
        return state.robot_node == subtask.destination and state.robot_speed == 0.0
    if subtask.kind == SubtaskKind.PICKUP:
        return (state.pod_owner is not None and state.pod_owner != robot.id
                and state.colocated_for >= state.lift_time - EPS)
    if subtask.kind == SubtaskKind.SETDOWN:
        return state.pod_owner == robot.id and state.colocated_for >= state.lift_time - EPS
    if subtask.kind in (SubtaskKind.PUT, SubtaskKind.GET):
        return (state.pod_owner == robot.id
                and state.serviced_for >= state.units * state.station_handle_time - EPS)
    raise ValueError(f"unknown subtask kind {subtask.kind!r}")


@dataclass
class GraphReport:
    """Findings from validate_graph; empty lists mean a clean instance."""

    short_edges: list[tuple[str, str, float, float]] = field(default_factory=list)
    cross_tier_edges: list[tuple[str, str]] = field(default_factory=list)
    unreachable_gates: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not (self.short_edges or self.cross_tier_edges or self.unreachable_gates)


def required_edge_length(profiles, pod_radii) -> float:
    """Lower bound on edge length: largest sum of two distinct entity radii."""
    radii = sorted([p.radius for p in profiles] + list(pod_radii), reverse=True)
    if len(radii) < 2:
        return 0.0
    return radii[0] + radii[1]


def validate_graph(graph: WarehouseGraph, profiles, pod_radii,
                   gates: list[str] | None = None) -> GraphReport:
    """Report edges shorter than the radii bound, cross-tier edges and cut-off gates."""
    report = GraphReport()
    bound = required_edge_length(profiles, pod_radii)
    for (a, b) in sorted(graph.edges):
        wa, wb = graph.waypoints[a], graph.waypoints[b]
        if wa.tier != wb.tier:
            report.cross_tier_edges.append((a, b))
            continue
        length = graph.distance(a, b)
        if length < bound - EPS:
            report.short_edges.append((a, b, length, bound))
    for gate in sorted(gates or []):
        if not _reaches_any(graph, gate, forward=False) or not _reaches_any(graph, gate, forward=True):
            report.unreachable_gates.append(gate)
    return report


def _reaches_any(graph: WarehouseGraph, start: str, forward: bool) -> bool:
    # BFS until any waypoint other than start is found; prefer storage targets
    # as the meaningful endpoints when the instance has them.
    storage = set(graph.storage_waypoints())
    seen = {start}
    stack = [start]
    found_other = False
    while stack:
        node = stack.pop()
        arcs = graph.arcs(node) if forward else graph.reverse_arcs(node)
        targets = [a.to for a in arcs]
        elevator = graph.elevator_at(node)
        if elevator:
            targets.extend(p for p in elevator.ports if p != node)
        for nxt in targets:
            if nxt in seen:
                continue
            seen.add(nxt)
            stack.append(nxt)
            found_other = True
            if not storage or nxt in storage:
                return True
    return found_other and not storage or len(graph.waypoints) <= 1


def first_path_violation(path: TimedPath, graph: WarehouseGraph) -> int | None:
    """Index of the first step violating connectivity/straightness, or None."""
    steps = path.steps
    if not steps:
        raise ValueError("path is empty")
    for i, step in enumerate(steps):
        if step.wait > 0.0 and not step.stop:
            return i
    for i in range(len(steps) - 1):
        a, b = steps[i].waypoint, steps[i + 1].waypoint
        if graph.is_elevator_pair(a, b):
            # elevator transits must board and leave from standstill
            if not (steps[i].stop and steps[i + 1].stop):
                return i + 1
            continue
        if not graph.has_edge(a, b):
            return i + 1
    # straightness within every stop-to-stop subpath
    run_start = 0
    for i in range(1, len(steps)):
        if steps[i].stop or i == len(steps) - 1:
            offender = _run_bend(path, graph, run_start, i)
            if offender is not None:
                return offender
            run_start = i
    return None


def _run_bend(path: TimedPath, graph: WarehouseGraph, start: int, end: int) -> int | None:
    # Index of the first node at which the run changes heading, else None.
    first_angle = None
    for j in range(start, end):
        a, b = path.steps[j].waypoint, path.steps[j + 1].waypoint
        if graph.is_elevator_pair(a, b):
            first_angle = None  # heading is free after an elevator transit
            continue
        arc = graph.arc(a, b)
        if arc is None:
            return j + 1
        if first_angle is None:
            first_angle = arc.angle
        elif abs(arc.angle - first_angle) > 1e-9:
            return j
    return None


def validate_path(path: TimedPath, graph: WarehouseGraph) -> bool:
    """True iff every stop-to-stop subpath is edge-connected and straight."""
    return first_path_violation(path, graph) is None


@dataclass
class Instance:
    """One loadable problem: graph plus initial entity placement."""

    name: str
    graph: WarehouseGraph
    robots: list[Robot]
    pods: list[Pod]
    stations: list[Station]

    def station_by_id(self, sid: str) -> Station:
        for st in self.stations:
            if st.id == sid:
                return st
        raise KeyError(sid)


def parse_instance(text: str, name: str = "instance") -> Instance:
    """Parse the line-oriented instance format.

    Records: tier, waypoint, edge, station, elevator, robot, pod; one per line,
    whitespace-separated, '#' starts a comment, SI units throughout.
    """
    graph = WarehouseGraph()
    robots: list[Robot] = []
    pods: list[Pod] = []
    stations: list[Station] = []
    deferred_edges: list[tuple[str, str]] = []
    deferred_elevators: list[tuple[str, float, list[str]]] = []

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        kind, args = tokens[0], tokens[1:]
        try:
            if kind == "tier":
                graph.add_tier(Tier(args[0], float(args[1]), float(args[2])))
            elif kind == "waypoint":
                graph.add_waypoint(Waypoint(args[0], args[1], float(args[2]),
                                            float(args[3]), WaypointKind(args[4])))
            elif kind == "edge":
                deferred_edges.append((args[0], args[1]))
            elif kind == "station":
                stations.append(Station(args[0], StationKind(args[1]), args[2],
                                        tuple(args[3:])))
            elif kind == "elevator":
                deferred_elevators.append((args[0], float(args[1]), args[2:]))
            elif kind == "robot":
                profile = KinematicProfile(accel=float(args[3]), decel=float(args[4]),
                                           v_max=float(args[5]), omega_max=float(args[6]),
                                           radius=float(args[2]))
                robots.append(Robot(args[0], profile, home=args[1]))
            elif kind == "pod":
                pods.append(Pod(args[0], radius=float(args[2]), owner=args[1]))
            else:
                raise ValueError(f"unknown record {kind!r}")
        except (IndexError, ValueError) as exc:
            raise ValueError(f"instance line {lineno}: {exc}") from exc

    for a, b in deferred_edges:
        graph.add_edge(a, b)
    for eid, seconds, ports in deferred_elevators:
        graph.add_elevator(Elevator(eid, tuple(ports), seconds))
    for robot in robots:
        wp = graph.waypoints[robot.home]
        robot.tier, robot.x, robot.y = wp.tier, wp.x, wp.y
    return Instance(name, graph, robots, pods, stations)


def write_instance(instance: Instance) -> str:
    """Serialize an instance back into the line-oriented format."""
    lines = [f"# instance {instance.name}"]
    graph = instance.graph
    for tier in graph.tiers.values():
        lines.append(f"tier {tier.id} {tier.length:g} {tier.width:g}")
    for wp in graph.waypoints.values():
        lines.append(f"waypoint {wp.id} {wp.tier} {wp.x:g} {wp.y:g} {wp.kind.value}")
    for a, b in sorted(graph.edges):
        lines.append(f"edge {a} {b}")
    for st in instance.stations:
        queue = " ".join(st.queue)
        lines.append(f"station {st.id} {st.kind.value} {st.gate} {queue}".rstrip())
    for el in graph.elevators.values():
        ports = " ".join(el.ports)
        lines.append(f"elevator {el.id} {el.transit_time:g} {ports}")
    for r in instance.robots:
        p = r.profile
        lines.append(f"robot {r.id} {r.home} {p.radius:g} {p.accel:g} {p.decel:g} "
                     f"{p.v_max:g} {p.omega_max:g}")
    for pod in instance.pods:
        lines.append(f"pod {pod.id} {pod.owner} {pod.radius:g}")
    return "\n".join(lines) + "\n"
