"""Kinematics of the fan deployment mechanism.

Deployment runs in two stages along the guide groove: the fans first
slide radially out of the body, then turn 90 degrees so their thrust
axis goes from lying in the top face to standing perpendicular to it.
Fans 2 and 3 are turned by the grooves; fan 1 is turned by the tail servo
and rotates the opposite way.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DomainError
from .model import VehicleParams

TAIL_SERVO_SWING = 90.0  # servo units between retracted and extended


class Handedness(str, Enum):
    CW = "cw"
    CCW = "ccw"


class MorphPhase(str, Enum):
    RETRACTED = "retracted"
    EXTENDED = "extended"


@dataclass(frozen=True)
class FanPose:
    radial_offset: float
    tilt: float
    handedness: Handedness


@dataclass(frozen=True)
class MorphState:
    s: float
    fan_poses: tuple[FanPose, FanPose, FanPose]


def handedness(fan_id: int) -> Handedness:
    if fan_id not in (1, 2, 3):
        raise DomainError(f"fan id {fan_id!r} not in 1..3")
    return Handedness.CW if fan_id == 1 else Handedness.CCW


def pose_curve(s, params: VehicleParams) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised (radial offset, tilt magnitude) for deployment fractions ``s``."""
    s = np.asarray(s, dtype=float)
    if np.any(~((s >= 0.0) & (s <= 1.0))):
        raise DomainError("deployment fraction outside [0, 1]")
    split = params.morph_split
    f = np.minimum(s / split, 1.0)
    # lerp written so both endpoints are reproduced exactly
    offset = params.retracted_offset * (1.0 - f) + params.extended_offset * f
    g = np.maximum(s - split, 0.0) / (1.0 - split)
    tilt = (math.pi / 2) * g
    return offset, tilt


def fan_pose(s: float, fan_id: int, params: VehicleParams) -> FanPose:
    hand = handedness(fan_id)
    offset, tilt = pose_curve(s, params)
    return FanPose(float(offset), float(tilt), hand)


def morph_state(s: float, params: VehicleParams) -> MorphState:
    return MorphState(float(s), tuple(fan_pose(s, i, params) for i in (1, 2, 3)))


def inscribed_margin(params: VehicleParams) -> float:
    """Clearance between the outermost retracted fan point and the body wall.

    Negative means a retracted fan (or its thrust point) sticks out.
    """
    outer = max(params.retracted_offset + params.fan_housing_radius, params.fan_radial_arm)
    return params.body_radius - outer


def tail_servo_morph_command(phase: MorphPhase | str, params: VehicleParams | None = None) -> float:
    """Tail servo setpoint used to turn fan 1 during deployment."""
    base = params.tail_servo_base if params is not None else 0.0
    if MorphPhase(phase) is MorphPhase.EXTENDED:
        return base + TAIL_SERVO_SWING
    return base


def morph_mass_check(params: VehicleParams) -> float:
    """Share of total mass taken by the expansion joint."""
    if not params.mass_total > 0:
        raise DomainError("mass_total must be positive")
    return params.morph_joint_mass / params.mass_total


def advance_deployment(s: float, target: float, dt: float, params: VehicleParams) -> float:
    """Slew the deployment fraction toward ``target`` at the servo rate."""
    step = params.morph_rate * dt
    if target > s:
        return min(s + step, target)
    return max(s - step, target)
