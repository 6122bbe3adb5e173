import math
import random

import pytest

from kinomapf.model import PathStep, TimedPath
from kinomapf.reservations import (INF, Reservation, ReservationConflict,
                                   ReservationTable, compile_path, path_to_reservations)

from helpers import INSTANT, PAPER, UNIT, line_graph, swap_graph


def res(wp, a, b, owner="r1", final=False):
    return Reservation(wp, a, b if not final else INF, owner, final=final)


def test_is_free_basics():
    table = ReservationTable()
    assert table.is_free("w1", 0.0, 10.0)
    table.add(res("w1", 0.0, 2.0))
    assert not table.is_free("w1", 1.0, 3.0)
    assert table.is_free("w1", 2.0, 3.0)          # half-open boundary
    assert table.is_free("w1", 1.0, 3.0, ignoring="r1")
    with pytest.raises(ValueError):
        table.is_free("w1", 3.0, 3.0)


def test_add_conflict_names_blocker():
    table = ReservationTable()
    table.add(res("w1", 0.0, 2.0, owner="r1"))
    with pytest.raises(ReservationConflict) as err:
        table.add(res("w1", 1.0, 3.0, owner="r2"))
    assert err.value.blocking.owner == "r1"
    assert err.value.blocking.start == 0.0


def test_final_reservations():
    table = ReservationTable()
    table.add_final("r1", "w4", 3.0)
    assert not table.is_free("w4", 100.0, 101.0)
    assert table.final_of("r1").waypoint == "w4"
    table.remove_final("r1")
    assert table.is_free("w4", 100.0, 101.0)
    assert table.final_of("r1") is None


def test_try_add_final():
    table = ReservationTable()
    table.add(res("w4", 5.0, 7.0, owner="r2"))
    assert not table.try_add_final("r1", "w4", 3.0)
    assert table.try_add_final("r1", "w4", 7.0)


def test_reorganize():
    table = ReservationTable()
    table.add(res("w1", 0.0, 2.0, owner="r1"))
    table.add(res("w2", 10.0, 20.0, owner="r1"))
    table.add(res("w2", 3.0, 4.0, owner="r2"))
    table.add_final("r2", "w3", 4.0)
    table.reorganize(5.0, ["r1"])
    assert table.intervals_at("w1") == []          # past interval dropped
    assert table.intervals_at("w2") == []          # r1 future dropped, r2 past dropped
    assert table.final_of("r2") is not None        # finals survive

    table.reorganize(5.0, ["r2"], keep_finals=False)
    assert table.final_of("r2") is None


def test_first_conflict_merged_interval():
    table = ReservationTable()
    table.add(res("w", 2.0, 4.0, owner="r2"))
    hit = table.first_conflict([res("w", 1.0, 3.0, owner="r1")])
    assert hit is not None
    wp, merged, blocking = hit
    assert wp == "w"
    assert merged == (1.0, 4.0)
    assert blocking.owner == "r2"

    assert table.first_conflict([res("q", 0.0, 1.0, owner="r1")]) is None


def test_first_conflict_earliest_wins():
    table = ReservationTable()
    table.add(res("a", 7.0, 9.0, owner="r2"))
    table.add(res("b", 2.0, 3.0, owner="r3"))
    cands = [res("a", 6.0, 8.0, owner="r1"), res("b", 2.5, 5.0, owner="r1")]
    wp, merged, blocking = table.first_conflict(cands)
    assert (wp, blocking.owner) == ("b", "r3")
    assert merged == (2.0, 5.0)


class NaiveTable:
    """Reference implementation: flat list scan."""

    def __init__(self):
        self.items = []

    def add(self, r):
        for other in self.items:
            if other.waypoint == r.waypoint and other.owner != r.owner \
                    and r.start < other.end and other.start < r.end:
                raise ReservationConflict(r, other)
        merged = [x for x in self.items
                  if x.waypoint == r.waypoint and x.owner == r.owner
                  and r.start <= x.end and x.start <= r.end]
        for x in merged:
            self.items.remove(x)
        if merged:
            start = min([r.start] + [x.start for x in merged])
            end = max([r.end] + [x.end for x in merged])
            r = Reservation(r.waypoint, start, end, r.owner, final=(end == INF))
        self.items.append(r)

    def remove_owner(self, owner, from_time=-INF, keep_final=False):
        kept = []
        for x in self.items:
            if x.owner != owner or x.end <= from_time or (keep_final and x.final):
                kept.append(x)
            elif x.start < from_time:
                kept.append(Reservation(x.waypoint, x.start, from_time, owner))
        self.items = kept

    def is_free(self, wp, t1, t2, ignoring=None):
        return not any(x.waypoint == wp and x.owner != ignoring
                       and t1 < x.end and x.start < t2 for x in self.items)


def test_randomized_against_naive_scan():
    rng = random.Random(123)
    table, naive = ReservationTable(), NaiveTable()
    nodes = [f"n{i}" for i in range(12)]
    owners = [f"r{i}" for i in range(5)]
    for _ in range(10_000):
        op = rng.random()
        wp = rng.choice(nodes)
        owner = rng.choice(owners)
        t1 = round(rng.uniform(0, 50), 3)
        t2 = round(t1 + rng.uniform(0.01, 8), 3)
        if op < 0.5:
            ok_fast = ok_naive = True
            try:
                table.add(Reservation(wp, t1, t2, owner))
            except ReservationConflict:
                ok_fast = False
            try:
                naive.add(Reservation(wp, t1, t2, owner))
            except ReservationConflict:
                ok_naive = False
            assert ok_fast == ok_naive
        elif op < 0.6:
            table.remove_owner(owner, t1)
            naive.remove_owner(owner, t1)
        else:
            ignoring = rng.choice(owners + [None])
            assert table.is_free(wp, t1, t2, ignoring) == naive.is_free(wp, t1, t2, ignoring)


def path(robot, start, triples):
    return TimedPath(robot, start, [PathStep(w, s, wt) for w, s, wt in triples])


def test_pure_wait_reservation():
    g = line_graph(3)
    p = path("r1", 0.0, [("w1", True, 5.0)])
    out = path_to_reservations(p, g, UNIT)
    assert out == [Reservation("w1", 0.0, 5.0, "r1")]


def test_unit_corridor_drive_through_blocks_both_ends():
    # constant-speed profile, unit arcs: arc i is crossed during [i, i+1)
    g = line_graph(4)
    p = path("r1", 0.0, [("w1", True, 0.0), ("w2", False, 0.0), ("w3", False, 0.0),
                         ("w4", True, 0.0)])
    out = {r.waypoint: (r.start, r.end) for r in path_to_reservations(p, g, INSTANT)}
    assert out["w1"] == (0.0, 1.0)
    assert out["w2"] == (0.0, 2.0)
    assert out["w3"] == (1.0, 3.0)
    assert out["w4"] == (2.0, 3.0)


def test_stop_blocks_middle_node_longer_than_drive_through():
    g = line_graph(3)
    through = path("r1", 0.0, [("w1", True, 0.0), ("w2", False, 0.0), ("w3", True, 0.0)])
    stopping = path("r1", 0.0, [("w1", True, 0.0), ("w2", True, 0.0), ("w3", True, 0.0)])
    t_mid = next(r.end - r.start for r in path_to_reservations(through, g, PAPER)
                 if r.waypoint == "w2")
    s_mid = next(r.end - r.start for r in path_to_reservations(stopping, g, PAPER)
                 if r.waypoint == "w2")
    assert s_mid > t_mid + 0.5


def test_speedup_slowdown_blocks_ends_longer():
    # acceleration makes the first arc slower than a middle arc of a long run
    g = line_graph(6)
    p = path("r1", 0.0, [("w1", True, 0.0)] + [(f"w{i}", False, 0.0) for i in (2, 3, 4, 5)]
             + [("w6", True, 0.0)])
    spans = {r.waypoint: r.end - r.start for r in path_to_reservations(p, g, PAPER)}
    assert spans["w1"] > spans["w3"]
    assert spans["w6"] > spans["w3"]


def test_reservations_merge_between_hops():
    g = swap_graph()
    # stop at w3 with a wait, then carry on: w3 gets one merged interval
    p = path("r1", 0.0, [("w2", True, 0.0), ("w3", True, 2.0), ("w4", True, 0.0)])
    out = [r for r in path_to_reservations(p, g, INSTANT) if r.waypoint == "w3"]
    assert len(out) == 1
    assert out[0].start == 0.0 and out[0].end == pytest.approx(4.0)


def test_revisit_produces_disjoint_intervals():
    g = swap_graph()
    p = path("r1", 0.0, [("w3", True, 0.0), ("w5", True, 2.0), ("w3", True, 0.0)])
    out = [r for r in path_to_reservations(p, g, INSTANT) if r.waypoint == "w3"]
    assert len(out) == 2
    assert out[0].end <= out[1].start


def test_compiled_arrival_matches_hop_time():
    g = line_graph(5)
    p = path("r1", 1.0, [("w1", True, 0.0), ("w2", False, 0.0), ("w3", False, 0.0),
                         ("w4", False, 0.0), ("w5", True, 0.0)])
    compiled = compile_path(p, g, PAPER)
    from kinomapf.kinematics import hop_time
    assert compiled.t_end == pytest.approx(1.0 + hop_time([1, 1, 1, 1], 0.0, PAPER))


def test_rotation_extends_block_at_turn():
    g = swap_graph()
    p = path("r1", 0.0, [("w5", True, 0.0), ("w3", True, 0.0), ("w2", True, 0.0)])
    # heading south after w5->w3, then a 90 degree turn at w3 before w3->w2
    out = {r.waypoint: (r.start, r.end) for r in path_to_reservations(p, g, UNIT, None)}
    # run w5->w3 takes drive(1)=2; rotation pi/2 at omega=2pi takes 0.25
    assert out["w3"][0] == pytest.approx(0.0)
    assert out["w2"][1] == pytest.approx(2.0 + 0.25 + 2.0)


def test_dump_format():
    table = ReservationTable()
    table.add(res("b", 1.0, 2.0, owner="r2"))
    table.add(res("a", 0.0, 2.5, owner="r1"))
    table.add_final("r3", "a", 4.0)
    assert table.dump().splitlines() == [
        "a 0 2.5 r1",
        "a 4 inf r3 final",
        "b 1 2 r2",
    ]


def test_convoy_spacing_two_robots_same_corridor():
    # second robot one arc behind: planner-emitted reservations never overlap
    g = line_graph(5)
    lead = path("lead", 0.0, [("w2", True, 0.0), ("w3", False, 0.0), ("w4", False, 0.0),
                              ("w5", True, 0.0)])
    trail = path("trail", 0.0, [("w1", True, 1.0), ("w2", False, 0.0), ("w3", False, 0.0),
                                ("w4", True, 0.0)])
    table = ReservationTable()
    table.add_all(path_to_reservations(lead, g, INSTANT))
    for r in path_to_reservations(trail, g, INSTANT):
        table.add(r)  # raises on overlap
