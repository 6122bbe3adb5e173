"""Continuous-time multi-agent path finding for warehouse robots.

Planning works on a directed waypoint graph with per-robot kinematic
profiles.  A sparse reservation table of continuous time intervals carries the
coordination state shared by all planners; an event-driven simulator executes
the plans and collects throughput metrics.
"""

__version__ = "0.1.0"
