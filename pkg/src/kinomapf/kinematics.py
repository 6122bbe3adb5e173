"""Closed-form motion timing for robots with constant acceleration and deceleration.

A robot drive consists of an optional in-place rotation followed by a straight
run with up to three phases: accelerate, cruise at top speed, decelerate to a
stop.  All functions here are pure and operate in SI units (meters, seconds,
radians).  Profiles with infinite acceleration/deceleration or infinite angular
velocity are allowed and degrade to constant-speed / instant-turn motion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class KinematicProfile:
    """Per-robot motion limits."""

    accel: float        # m/s^2
    decel: float        # m/s^2
    v_max: float        # m/s
    omega_max: float    # rad/s
    radius: float = 0.35  # m, collision circle

    def __post_init__(self):
        for name in ("accel", "decel", "v_max", "omega_max", "radius"):
            value = getattr(self, name)
            if not value > 0.0:
                raise ValueError(f"profile field {name} must be > 0, got {value!r}")

    @property
    def inv_accel(self) -> float:
        return 0.0 if math.isinf(self.accel) else 1.0 / self.accel

    @property
    def inv_decel(self) -> float:
        return 0.0 if math.isinf(self.decel) else 1.0 / self.decel


@dataclass(frozen=True)
class DriveProfile:
    """Phase decomposition of one straight run from standstill to standstill."""

    distance: float
    accel_time: float
    accel_dist: float
    cruise_time: float
    cruise_dist: float
    decel_time: float
    decel_dist: float
    peak_speed: float

    @property
    def total_time(self) -> float:
        return self.accel_time + self.cruise_time + self.decel_time


def normalize_angle(angle: float) -> float:
    """Wrap an angle into [0, 2*pi)."""
    a = math.fmod(angle, TWO_PI)
    if a < 0.0:
        a += TWO_PI
    return a


def shorter_arc(from_angle: float, to_angle: float) -> float:
    """Magnitude of the shorter rotation between two headings, in [0, pi]."""
    d = abs(normalize_angle(to_angle) - normalize_angle(from_angle))
    return min(d, TWO_PI - d)


def rotation_time(angle: float, omega_max: float) -> float:
    """Time to rotate in place by `angle` radians at angular speed `omega_max`."""
    if angle < 0.0:
        raise ValueError(f"rotation angle must be >= 0, got {angle!r}")
    if angle == 0.0:
        return 0.0
    return angle / omega_max


def min_full_accel_distance(profile: KinematicProfile) -> float:
    """Shortest distance on which the robot can reach its top speed and stop again."""
    v = profile.v_max
    return 0.5 * v * v * (profile.inv_accel + profile.inv_decel)


def peak_speed(distance: float, profile: KinematicProfile) -> float:
    """Highest speed reached on a straight run of the given length."""
    if distance < 0.0:
        raise ValueError(f"distance must be >= 0, got {distance!r}")
    if distance >= min_full_accel_distance(profile):
        return profile.v_max
    inv_sum = profile.inv_accel + profile.inv_decel
    if inv_sum == 0.0:
        return profile.v_max
    return math.sqrt(2.0 * distance / inv_sum)


def drive_profile(distance: float, profile: KinematicProfile) -> DriveProfile:
    """Phase breakdown of a standstill-to-standstill run over `distance` meters."""
    if distance < 0.0:
        raise ValueError(f"distance must be >= 0, got {distance!r}")
    v_p = peak_speed(distance, profile)
    inv_a, inv_b = profile.inv_accel, profile.inv_decel
    accel_time = v_p * inv_a
    decel_time = v_p * inv_b
    accel_dist = 0.5 * v_p * v_p * inv_a
    decel_dist = 0.5 * v_p * v_p * inv_b
    cruise_dist = max(0.0, distance - accel_dist - decel_dist)
    cruise_time = cruise_dist / v_p if distance > 0.0 else 0.0
    return DriveProfile(distance, accel_time, accel_dist, cruise_time, cruise_dist,
                        decel_time, decel_dist, v_p)


def drive_time(distance: float, profile: KinematicProfile) -> float:
    """Time for a straight run of `distance` meters, starting and ending at rest."""
    if distance < 0.0:
        raise ValueError(f"distance must be >= 0, got {distance!r}")
    if distance == 0.0:
        return 0.0
    inv_a, inv_b = profile.inv_accel, profile.inv_decel
    v = profile.v_max
    d_tilde = 0.5 * v * v * (inv_a + inv_b)
    if distance >= d_tilde:
        return v * (inv_a + inv_b) + (distance - d_tilde) / v
    v_p = math.sqrt(2.0 * distance / (inv_a + inv_b))
    return v_p * (inv_a + inv_b)


def position_at(t: float, distance: float, profile: KinematicProfile) -> float:
    """Arc length covered `t` seconds into a run of `distance` meters.

    `t` must lie within the drive window [0, drive_time(distance)].
    """
    total = drive_time(distance, profile)
    if t < -1e-12 or t > total + 1e-12:
        raise ValueError(f"time {t!r} outside drive window [0, {total!r}]")
    t = min(max(t, 0.0), total)
    if distance == 0.0:
        return 0.0
    dp = drive_profile(distance, profile)
    if t <= dp.accel_time:
        if dp.accel_time == 0.0:
            return 0.0
        return 0.5 * t * t / profile.inv_accel
    if t <= dp.accel_time + dp.cruise_time:
        return dp.accel_dist + dp.peak_speed * (t - dp.accel_time)
    remaining = total - t
    if profile.inv_decel == 0.0:
        return distance
    return distance - 0.5 * remaining * remaining / profile.inv_decel


def time_at_position(s: float, distance: float, profile: KinematicProfile) -> float:
    """Inverse of position_at: time at which arc length `s` is reached."""
    if s < -1e-12 or s > distance + 1e-12:
        raise ValueError(f"position {s!r} outside run [0, {distance!r}]")
    s = min(max(s, 0.0), distance)
    if distance == 0.0 or s == 0.0:
        return 0.0
    dp = drive_profile(distance, profile)
    if s <= dp.accel_dist:
        return math.sqrt(2.0 * s * profile.inv_accel)
    if s <= dp.accel_dist + dp.cruise_dist:
        return dp.accel_time + (s - dp.accel_dist) / dp.peak_speed
    return dp.total_time - math.sqrt(2.0 * (distance - s) * profile.inv_decel)


def hop_time(segment_lengths, initial_rotation: float, profile: KinematicProfile) -> float:
    """Time for one hop: rotate in place, then drive all collinear segments as one run.

    The whole straight stretch is covered by a single accelerate/cruise/decelerate
    sweep; intermediate waypoints are passed without stopping.
    """
    segments = list(segment_lengths)
    if not segments:
        raise ValueError("hop needs at least one segment")
    return rotation_time(initial_rotation, profile.omega_max) + drive_time(sum(segments), profile)
