"""Sparse continuous-time occupancy store, one sorted interval list per waypoint.

Intervals are half-open [t_s, t_e) so abutting reservations never conflict.
Stored intervals at a node are kept disjoint, which makes every lookup a
binary search plus a short neighbor scan.  Final reservations are open-ended
blocks ([t_s, inf)) marking where a robot comes to rest.
"""

from __future__ import annotations

import math
from bisect import bisect_left, insort
from dataclasses import dataclass, field

from .kinematics import (KinematicProfile, drive_time, rotation_time, shorter_arc,
                         time_at_position)
from .model import TimedPath, WarehouseGraph, first_path_violation

INF = math.inf


@dataclass(frozen=True)
class Reservation:
    waypoint: str
    start: float
    end: float
    owner: str
    final: bool = False

    def __post_init__(self):
        if self.final:
            if self.end != INF:
                raise ValueError("final reservation must be open-ended")
        elif not self.start < self.end:
            raise ValueError(f"empty reservation interval [{self.start}, {self.end})")


class ReservationConflict(Exception):
    """Raised when an add would overlap a stored interval of another robot."""

    def __init__(self, attempted: Reservation, blocking: Reservation):
        self.attempted = attempted
        self.blocking = blocking
        super().__init__(f"{attempted.waypoint} [{attempted.start:.6g}, {attempted.end:.6g}) "
                         f"for {attempted.owner} blocked by {blocking.owner} "
                         f"[{blocking.start:.6g}, {blocking.end:.6g})")


class ReservationTable:
    """Per-waypoint interval store; schedules are created lazily on first use."""

    def __init__(self):
        self._nodes: dict[str, list[Reservation]] = {}
        self._finals: dict[str, Reservation] = {}   # owner -> stored final

    def __len__(self) -> int:
        return sum(len(v) for v in self._nodes.values())

    def clear(self):
        self._nodes.clear()
        self._finals.clear()

    def intervals_at(self, waypoint: str) -> list[Reservation]:
        return list(self._nodes.get(waypoint, ()))

    def overlaps(self, waypoint: str, t1: float, t2: float,
                 ignoring: str | None = None) -> list[Reservation]:
        """Stored intervals intersecting [t1, t2), skipping those owned by `ignoring`."""
        schedule = self._nodes.get(waypoint)
        if not schedule:
            return []
        idx = bisect_left(schedule, (t1,), key=lambda r: (r.start,))
        if idx > 0:
            idx -= 1
        hits = []
        for res in schedule[idx:]:
            if res.start >= t2:
                break
            if res.end > t1 and res.owner != ignoring:
                hits.append(res)
        return hits

    def is_free(self, waypoint: str, t1: float, t2: float,
                ignoring: str | None = None) -> bool:
        if not t1 < t2:
            raise ValueError(f"bad query interval [{t1}, {t2})")
        return not self.overlaps(waypoint, t1, t2, ignoring)

    def add(self, reservation: Reservation):
        """Insert an interval; overlap with another owner's interval raises."""
        schedule = self._nodes.setdefault(reservation.waypoint, [])
        hits = self.overlaps(reservation.waypoint, reservation.start, reservation.end)
        for hit in hits:
            if hit.owner != reservation.owner:
                raise ReservationConflict(reservation, hit)
        if hits:
            # self-overlap: coalesce with our own intervals instead of duplicating
            for hit in hits:
                schedule.remove(hit)
                if hit.final:
                    self._finals.pop(hit.owner, None)
            start = min([reservation.start] + [h.start for h in hits])
            end = max([reservation.end] + [h.end for h in hits])
            reservation = Reservation(reservation.waypoint, start, end, reservation.owner,
                                      final=(end == INF))
        insort(schedule, reservation, key=lambda r: (r.start,))
        if reservation.final:
            self._finals[reservation.owner] = reservation

    def add_all(self, reservations):
        for res in reservations:
            self.add(res)

    def remove(self, reservation: Reservation):
        schedule = self._nodes.get(reservation.waypoint, [])
        try:
            schedule.remove(reservation)
        except ValueError:
            return
        if reservation.final and self._finals.get(reservation.owner) == reservation:
            del self._finals[reservation.owner]

    def add_final(self, owner: str, waypoint: str, start: float):
        """Open-ended block at the node where the owner's last action occurs."""
        self.add(Reservation(waypoint, start, INF, owner, final=True))

    def try_add_final(self, owner: str, waypoint: str, start: float) -> bool:
        """Attempt a final reservation; False when another robot holds the slot."""
        try:
            self.add_final(owner, waypoint, start)
        except ReservationConflict:
            return False
        return True

    def final_of(self, owner: str) -> Reservation | None:
        return self._finals.get(owner)

    def remove_final(self, owner: str):
        res = self._finals.pop(owner, None)
        if res is not None:
            self._nodes[res.waypoint].remove(res)

    def remove_owner(self, owner: str, from_time: float = -INF, keep_final: bool = False):
        """Drop the owner's intervals that extend past `from_time`."""
        for waypoint, schedule in self._nodes.items():
            kept = []
            for res in schedule:
                if res.owner != owner or res.end <= from_time or (keep_final and res.final):
                    kept.append(res)
                elif res.start < from_time:
                    kept.append(Reservation(waypoint, res.start, from_time, owner))
            schedule[:] = kept
        final = self._finals.get(owner)
        if final is not None and not keep_final and final.end > from_time:
            self._finals.pop(owner, None)

    def reorganize(self, now: float, robots_needing_paths=(), keep_finals: bool = True):
        """Drop past intervals, and future reservations of robots that will replan.

        Finals are kept by default: a robot standing somewhere keeps its claim
        until the moment it is actually given a new path.
        """
        needing = set(robots_needing_paths)
        for waypoint, schedule in self._nodes.items():
            kept = []
            for res in schedule:
                if res.end <= now:
                    continue
                if res.owner in needing and not (keep_finals and res.final):
                    if res.start < now:
                        kept.append(Reservation(waypoint, res.start, now, res.owner))
                    continue
                kept.append(res)
            schedule[:] = kept
        for owner in list(self._finals):
            if owner in needing and not keep_finals:
                self._finals.pop(owner, None)

    def first_conflict(self, candidates, ignoring: str | None = None):
        """Earliest overlap of candidate reservations with the stored ones.

        Returns (waypoint, merged interval, blocking reservation) where the
        merged interval spans from the minimum beginning to the maximum ending
        time of the two overlapping reservations, or None.
        """
        best = None
        for cand in candidates:
            skip = ignoring if ignoring is not None else cand.owner
            for hit in self.overlaps(cand.waypoint, cand.start, cand.end, ignoring=skip):
                overlap_start = max(cand.start, hit.start)
                key = (overlap_start, cand.waypoint)
                if best is None or key < best[0]:
                    merged = (min(cand.start, hit.start), max(cand.end, hit.end))
                    best = (key, (cand.waypoint, merged, hit))
        return best[1] if best else None

    def dump(self) -> str:
        """Sorted debug listing: '<waypoint> <t_s> <t_e|inf> <owner> <final?>' lines."""
        lines = []
        for waypoint in sorted(self._nodes):
            for res in self._nodes[waypoint]:
                end = "inf" if res.end == INF else f"{res.end:.6g}"
                flag = " final" if res.final else ""
                lines.append(f"{waypoint} {res.start:.6g} {end} {res.owner}{flag}")
        return "\n".join(lines)


@dataclass
class WaitSegment:
    node: str
    t0: float
    t1: float


@dataclass
class RotateSegment:
    node: str
    t0: float
    t1: float
    heading: float   # orientation after turning


@dataclass
class HopSegment:
    """One continuous straight run over collinear arcs."""

    nodes: list[str]
    cum_dists: list[float]     # cumulative arc length at each node, starts at 0
    t_dep: float               # drive start
    t_end: float               # arrival (speed 0) at the last node
    heading: float

    def crossing_times(self, profile: KinematicProfile) -> list[float]:
        total = self.cum_dists[-1]
        return [self.t_dep + time_at_position(d, total, profile) for d in self.cum_dists]


@dataclass
class ElevatorSegment:
    ports: tuple[str, ...]
    src: str
    dst: str
    t0: float
    t1: float


@dataclass
class CompiledPath:
    """Execution program for a TimedPath: timed wait/rotate/hop/elevator segments."""

    path: TimedPath
    segments: list = field(default_factory=list)
    t_end: float = 0.0
    end_heading: float | None = None

    def hop_segments(self):
        return [s for s in self.segments if isinstance(s, HopSegment)]


def compile_path(path: TimedPath, graph: WarehouseGraph, profile: KinematicProfile,
                 start_orientation: float | None = None) -> CompiledPath:
    """Time every action of a path: waits, rotations, straight runs, elevator rides."""
    offending = first_path_violation(path, graph)
    if offending is not None:
        raise ValueError(f"invalid path for {path.robot}: step {offending}")
    compiled = CompiledPath(path)
    steps = path.steps
    t = path.start_time
    heading = start_orientation
    if steps[0].wait > 0.0:
        compiled.segments.append(WaitSegment(steps[0].waypoint, t, t + steps[0].wait))
        t += steps[0].wait
    i = 0
    while i < len(steps) - 1:
        a, b = steps[i].waypoint, steps[i + 1].waypoint
        if graph.is_elevator_pair(a, b):
            elevator = graph.elevator_at(a)
            seg = ElevatorSegment(elevator.ports, a, b, t, t + elevator.transit_time)
            compiled.segments.append(seg)
            t = seg.t1
            i += 1
        else:
            # collect the stop-to-stop run starting at i
            nodes = [a]
            cum = [0.0]
            j = i
            while j < len(steps) - 1:
                arc = graph.arc(steps[j].waypoint, steps[j + 1].waypoint)
                nodes.append(steps[j + 1].waypoint)
                cum.append(cum[-1] + arc.length)
                j += 1
                if steps[j].stop:
                    break
            run_heading = graph.arc(nodes[0], nodes[1]).angle
            if heading is not None:
                turn = shorter_arc(heading, run_heading)
                if turn > 0.0:
                    rot_t = rotation_time(turn, profile.omega_max)
                    compiled.segments.append(RotateSegment(nodes[0], t, t + rot_t, run_heading))
                    t += rot_t
            heading = run_heading
            t_end = t + drive_time(cum[-1], profile)
            compiled.segments.append(HopSegment(nodes, cum, t, t_end, run_heading))
            t = t_end
            i = j
        if steps[i].stop and steps[i].wait > 0.0:
            compiled.segments.append(WaitSegment(steps[i].waypoint, t, t + steps[i].wait))
            t += steps[i].wait
    compiled.t_end = t
    compiled.end_heading = heading
    return compiled


def path_to_reservations(path: TimedPath, graph: WarehouseGraph,
                         profile: KinematicProfile,
                         start_orientation: float | None = None,
                         compiled: CompiledPath | None = None) -> list[Reservation]:
    """Node intervals claimed by a path.

    While traversing an arc both endpoints are blocked for the whole crossing
    window; waits, rotations and stops extend the interval at the standing
    node.  Consecutive intervals at a node are merged.
    """
    if compiled is None:
        compiled = compile_path(path, graph, profile, start_orientation)
    open_node = path.steps[0].waypoint
    open_start = path.start_time
    out: list[Reservation] = []

    def close(at: float):
        nonlocal open_node, open_start
        if at > open_start:
            out.append(Reservation(open_node, open_start, at, path.robot))
        open_node, open_start = None, at

    for seg in compiled.segments:
        if isinstance(seg, (WaitSegment, RotateSegment)):
            continue  # standing still extends the open interval
        if isinstance(seg, ElevatorSegment):
            close(seg.t1)
            for port in seg.ports:
                if port not in (seg.src, seg.dst):
                    out.append(Reservation(port, seg.t0, seg.t1, path.robot))
            # the destination port block continues as the new open interval
            open_node, open_start = seg.dst, seg.t0
            continue
        crossings = seg.crossing_times(profile)
        close(crossings[1])                       # run start node released after arc 1
        for k in range(1, len(seg.nodes) - 1):
            out.append(Reservation(seg.nodes[k], crossings[k - 1], crossings[k + 1],
                                   path.robot))
        open_node = seg.nodes[-1]
        open_start = crossings[-2]
    close(compiled.t_end)
    return _merge_per_node(out)


def _merge_per_node(reservations: list[Reservation]) -> list[Reservation]:
    by_node: dict[str, list[Reservation]] = {}
    for res in reservations:
        by_node.setdefault(res.waypoint, []).append(res)
    merged: list[Reservation] = []
    for node in by_node:
        spans = sorted(by_node[node], key=lambda r: r.start)
        cur = spans[0]
        for res in spans[1:]:
            if res.start <= cur.end + 1e-12:
                cur = Reservation(node, cur.start, max(cur.end, res.end), cur.owner)
            else:
                merged.append(cur)
                cur = res
        merged.append(cur)
    merged.sort(key=lambda r: (r.start, r.waypoint))
    return merged
