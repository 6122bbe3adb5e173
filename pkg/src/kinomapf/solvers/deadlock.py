"""Dwell-based deadlock resolution shared by all planners.

A robot that has not left its node for longer than the configured threshold is
sent to a random neighboring node that is neither statically blocked nor
reserved.  When only a single neighbor is available (so the robot will have to
come back through the same two nodes), a random wait is added to desynchronize
the robots involved.
"""

from __future__ import annotations

import math

from ..kinematics import drive_time, rotation_time


def resolve_deadlock(graph, table, stuck_robots, idle_nodes, config, rng, now):
    """Pick interim goals for robots stuck beyond the dwell threshold.

    `stuck_robots` is a list of (snapshot, dwell_seconds).  Returns a list of
    (robot_id, interim_goal, wait_seconds) actions, deterministic under the rng
    seed.
    """
    actions = []
    for robot, dwell in sorted(stuck_robots, key=lambda item: item[0].id):
        if dwell < config.deadlock_dwell:
            continue
        free = []
        for arc in sorted(graph.arcs(robot.node), key=lambda a: a.to):
            if arc.to in idle_nodes:
                continue
            horizon = rotation_time(math.pi, robot.profile.omega_max) \
                + drive_time(arc.length, robot.profile) + config.wait_step
            if table.is_free(arc.to, now, now + horizon, ignoring=robot.id):
                free.append(arc.to)
        if not free:
            continue
        goal = rng.choice(free)
        wait = rng.uniform(0.0, config.wait_step) if len(free) == 1 else 0.0
        actions.append((robot.id, goal, wait))
    return actions
