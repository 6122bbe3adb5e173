"""Planner suite: seven MAPFWR solvers plus the shared deadlock resolver."""

from __future__ import annotations

from .base import PlanRequest, PlanResult, RobotSnapshot, Solver, SolverConfig
from .bcp import Bcp
from .cbs import Cbs
from .deadlock import resolve_deadlock
from .far import Far
from .odid import OdId
from .whca import WhcaNonVolatile, WhcaVolatile

SOLVER_NAMES = ("whca-v", "whca-n", "far-r", "far-e", "bcp", "odid", "cbs")


def make_solver(name: str, graph, config: SolverConfig) -> Solver:
    if name == "whca-v":
        return WhcaVolatile(graph, config)
    if name == "whca-n":
        return WhcaNonVolatile(graph, config)
    if name == "far-r":
        return Far(graph, config, "reroute")
    if name == "far-e":
        return Far(graph, config, "step")
    if name == "bcp":
        return Bcp(graph, config)
    if name == "odid":
        return OdId(graph, config)
    if name == "cbs":
        return Cbs(graph, config)
    raise ValueError(f"unknown solver {name!r}; expected one of {', '.join(SOLVER_NAMES)}")


__all__ = ["PlanRequest", "PlanResult", "RobotSnapshot", "Solver", "SolverConfig",
           "SOLVER_NAMES", "make_solver", "resolve_deadlock",
           "WhcaVolatile", "WhcaNonVolatile", "Far", "Bcp", "OdId", "Cbs"]
