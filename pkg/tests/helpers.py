"""Small graph builders shared across tests."""

from __future__ import annotations

import math

from kinomapf.kinematics import KinematicProfile
from kinomapf.model import Tier, WarehouseGraph, Waypoint, WaypointKind

UNIT = KinematicProfile(accel=1.0, decel=1.0, v_max=1.0, omega_max=2 * math.pi)
INSTANT = KinematicProfile(accel=math.inf, decel=math.inf, v_max=1.0, omega_max=math.inf)
PAPER = KinematicProfile(accel=0.5, decel=0.5, v_max=1.5, omega_max=2 * math.pi / 2.5)


def line_graph(n: int, bidirectional: bool = True, pitch: float = 1.0) -> WarehouseGraph:
    """w1..wn along the x axis."""
    g = WarehouseGraph()
    g.add_tier(Tier("t0", max(n * pitch, 1.0), 4.0))
    for i in range(1, n + 1):
        g.add_waypoint(Waypoint(f"w{i}", "t0", (i - 1) * pitch, 0.0))
    for i in range(1, n):
        g.add_edge(f"w{i}", f"w{i + 1}")
        if bidirectional:
            g.add_edge(f"w{i + 1}", f"w{i}")
    return g


def swap_graph() -> WarehouseGraph:
    """The four-node line w1-w2-w3-w4 with a spur w5 attached to w3.

    w1..w4 sit on the x axis, w5 one unit above w3; all edges bidirectional,
    unit length.
    """
    g = line_graph(4)
    g.add_waypoint(Waypoint("w5", "t0", 2.0, 1.0))
    g.add_edge("w3", "w5")
    g.add_edge("w5", "w3")
    return g


def grid_graph(nx: int, ny: int, pitch: float = 1.0,
               blocked: set[tuple[int, int]] | None = None) -> WarehouseGraph:
    """4-connected bidirectional grid; node ids 'x_y'."""
    blocked = blocked or set()
    g = WarehouseGraph()
    g.add_tier(Tier("t0", max(nx * pitch, 1.0), max(ny * pitch, 1.0)))
    for x in range(nx):
        for y in range(ny):
            if (x, y) in blocked:
                continue
            kind = WaypointKind.PLAIN
            g.add_waypoint(Waypoint(f"{x}_{y}", "t0", x * pitch, y * pitch, kind))
    for x in range(nx):
        for y in range(ny):
            if (x, y) in blocked:
                continue
            for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                u, v = (x, y), (x + dx, y + dy)
                if 0 <= v[0] < nx and 0 <= v[1] < ny and v not in blocked:
                    g.add_edge(f"{u[0]}_{u[1]}", f"{v[0]}_{v[1]}")
    return g
