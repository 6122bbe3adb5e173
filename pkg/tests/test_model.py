import math

import pytest

from kinomapf.kinematics import KinematicProfile
from kinomapf.model import (PathStep, Pod, Robot, Station, StationKind, Subtask,
                            SubtaskKind, SubtaskState, Task, TaskKind, Tier, TimedPath,
                            Waypoint, WaypointKind, decompose_task, first_path_violation,
                            parse_instance, required_edge_length, subtask_completed,
                            validate_graph, validate_path, write_instance)

from helpers import UNIT, line_graph, swap_graph


def kinds(subtasks):
    return [s.kind for s in subtasks]


def test_decompose_extract_empty_handed():
    task = Task(TaskKind.EXTRACT, pod="p1", station="m1")
    subtasks = decompose_task(task, carrying=None, pod_location="w2", station_approach="q1")
    assert kinds(subtasks) == [SubtaskKind.MOVE, SubtaskKind.PICKUP,
                               SubtaskKind.MOVE, SubtaskKind.GET]
    assert subtasks[0].destination == "w2"
    assert subtasks[2].destination == "q1"


def test_decompose_extract_already_carrying_target():
    task = Task(TaskKind.EXTRACT, pod="p1", station="m1")
    subtasks = decompose_task(task, carrying="p1", pod_location="w2", station_approach="q1")
    assert kinds(subtasks) == [SubtaskKind.MOVE, SubtaskKind.GET]
    # carrying a different pod does not allow the skip
    subtasks = decompose_task(task, carrying="p9", pod_location="w2", station_approach="q1")
    assert kinds(subtasks) == [SubtaskKind.MOVE, SubtaskKind.PICKUP,
                               SubtaskKind.MOVE, SubtaskKind.GET]


def test_decompose_other_kinds():
    assert kinds(decompose_task(Task(TaskKind.INSERT, pod="p", station="m"), None,
                                "w1", "q1")) == [SubtaskKind.MOVE, SubtaskKind.PICKUP,
                                                 SubtaskKind.MOVE, SubtaskKind.PUT]
    assert kinds(decompose_task(Task(TaskKind.PARK, pod="p", destination="w7"),
                                "p")) == [SubtaskKind.MOVE, SubtaskKind.SETDOWN]
    assert kinds(decompose_task(Task(TaskKind.REST, destination="w1"), None)) == [SubtaskKind.MOVE]


def test_subtask_completed_move_and_pickup():
    robot = Robot("r1", UNIT, home="w1")
    move = Subtask(SubtaskKind.MOVE, "w3")
    assert subtask_completed(move, SubtaskState("w3", 0.0), robot)
    assert not subtask_completed(move, SubtaskState("w3", 0.4), robot)
    assert not subtask_completed(move, SubtaskState("w2", 0.0), robot)

    pickup = Subtask(SubtaskKind.PICKUP)
    held = SubtaskState("w3", 0.0, pod_owner="w3", colocated_for=3.0, lift_time=3.0)
    assert subtask_completed(pickup, held, robot)
    half = SubtaskState("w3", 0.0, pod_owner="w3", colocated_for=1.5, lift_time=3.0)
    assert not subtask_completed(pickup, half, robot)


def test_subtask_completed_put():
    robot = Robot("r1", UNIT, home="w1")
    put = Subtask(SubtaskKind.PUT)
    ready = SubtaskState("g1", 0.0, pod_owner="r1", serviced_for=10.0,
                         station_handle_time=10.0, units=1)
    assert subtask_completed(put, ready, robot)
    early = SubtaskState("g1", 0.0, pod_owner="r1", serviced_for=9.0,
                         station_handle_time=10.0, units=1)
    assert not subtask_completed(put, early, robot)


def test_required_edge_length_uses_two_largest_radii():
    robots = [KinematicProfile(1, 1, 1, 1, radius=0.35)]
    assert required_edge_length(robots, [0.45, 0.45]) == pytest.approx(0.9)
    assert required_edge_length(robots, []) == 0.0


def test_validate_graph_short_edge():
    g = line_graph(3, pitch=0.8)
    profiles = [KinematicProfile(1, 1, 1, 1, radius=0.35)]
    report = validate_graph(g, profiles, [0.45, 0.45])
    assert not report.ok
    assert ("w1", "w2", pytest.approx(0.8), pytest.approx(0.9)) in [
        (a, b, pytest.approx(l), pytest.approx(bound)) for a, b, l, bound in report.short_edges]

    ok = validate_graph(line_graph(3, pitch=1.0), profiles, [0.45, 0.45])
    assert ok.ok


def test_validate_graph_empty():
    from kinomapf.model import WarehouseGraph
    report = validate_graph(WarehouseGraph(), [], [])
    assert report.ok


def test_validate_path_straight_and_corner():
    g = swap_graph()
    straight = TimedPath("r1", 0.0, [PathStep("w1", True), PathStep("w2", False),
                                     PathStep("w3", True)])
    assert validate_path(straight, g)

    corner = TimedPath("r1", 0.0, [PathStep("w2", True), PathStep("w3", False),
                                   PathStep("w5", True)])
    assert not validate_path(corner, g)
    assert first_path_violation(corner, g) == 1

    corner_ok = TimedPath("r1", 0.0, [PathStep("w2", True), PathStep("w3", True),
                                      PathStep("w5", True)])
    assert validate_path(corner_ok, g)

    single = TimedPath("r1", 0.0, [PathStep("w4", True, wait=5.0)])
    assert validate_path(single, g)

    disconnected = TimedPath("r1", 0.0, [PathStep("w1", True), PathStep("w4", True)])
    assert first_path_violation(disconnected, g) == 1

    bad_wait = TimedPath("r1", 0.0, [PathStep("w1", True), PathStep("w2", False, wait=2.0),
                                     PathStep("w3", True)])
    assert not validate_path(bad_wait, g)


INSTANCE_TEXT = """
# tiny two-station world
tier t0 10 6
waypoint a t0 0 0 plain
waypoint b t0 1 0 storage
waypoint c t0 2 0 plain
waypoint g1 t0 3 0 station-gate
waypoint q1 t0 4 0 queue
edge a b
edge b a
edge b c
edge c g1
edge q1 g1
station m1 pick g1 q1
robot r1 a 0.35 0.5 0.5 1.5 2.5133
pod p1 b 0.45
"""


def test_instance_roundtrip():
    inst = parse_instance(INSTANCE_TEXT, name="tiny")
    assert set(inst.graph.waypoints) == {"a", "b", "c", "g1", "q1"}
    assert inst.graph.waypoints["b"].kind == WaypointKind.STORAGE
    assert inst.robots[0].profile.v_max == 1.5
    assert inst.pods[0].owner == "b"
    assert inst.stations[0].kind == StationKind.PICK
    assert inst.stations[0].approach == "q1"

    text = write_instance(inst)
    again = parse_instance(text, name="tiny")
    assert again.graph.edges == inst.graph.edges
    assert len(again.robots) == 1 and len(again.pods) == 1


def test_instance_rejects_cross_tier_edge():
    bad = """
tier t0 5 5
tier t1 5 5
waypoint a t0 0 0 plain
waypoint b t1 1 0 plain
edge a b
"""
    with pytest.raises(ValueError):
        parse_instance(bad)


def test_elevator_requires_two_tiers():
    text = """
tier t0 5 5
tier t1 5 5
waypoint a t0 0 0 elevator-port
waypoint b t1 0 0 elevator-port
elevator e1 10 a b
"""
    inst = parse_instance(text)
    assert inst.graph.elevators["e1"].transit_time == 10.0
    assert inst.graph.is_elevator_pair("a", "b")
