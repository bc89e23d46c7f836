"""Motion command to actuator allocation.

The fixed pattern table covers every (mode, operation) pair the vehicle
supports; aerial flight additionally uses an equal-throttle tri-rotor
mixer whose tail fan tilt cancels the rotor reaction torques.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.optimize import brentq

from .errors import AllocationError, DomainError, SaturationError, TrimInfeasibleError
from .model import ActuatorCommand, VehicleParams, throttle_for_thrust


class Mode(str, Enum):
    LAND = "Land"
    SURFACE = "Surface"
    AERIAL = "Aerial"


class Op(str, Enum):
    FORWARD = "Forward"
    BACKWARD = "Backward"
    CLOCKWISE = "Clockwise"
    COUNTER_CLOCKWISE = "CounterClockwise"
    MORPH = "Morph"
    TAKE_OFF = "TakeOff"


# (P1, P2, P3, S1, T1); 1 means "driven", fan entries scale with magnitude.
# Land/Backward and Land/CounterClockwise share a pattern but stay distinct rows.
ACTUATION_TABLE: dict[tuple[Mode, Op], tuple[int, int, int, int, int]] = {
    (Mode.LAND, Op.FORWARD): (0, 1, 1, 0, 0),
    (Mode.LAND, Op.BACKWARD): (1, 0, 0, 0, 0),
    (Mode.LAND, Op.COUNTER_CLOCKWISE): (1, 0, 0, 0, 0),
    (Mode.SURFACE, Op.FORWARD): (1, 0, 1, 0, 0),
    (Mode.SURFACE, Op.CLOCKWISE): (0, 0, 1, 0, 0),
    (Mode.SURFACE, Op.COUNTER_CLOCKWISE): (1, 0, 0, 0, 0),
    (Mode.AERIAL, Op.MORPH): (0, 0, 0, 1, 0),
    (Mode.AERIAL, Op.TAKE_OFF): (1, 1, 1, 0, 1),
}


@dataclass(frozen=True)
class MotionCommand:
    mode: Mode
    op: Op
    magnitude: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        object.__setattr__(self, "op", Op(self.op))
        if not 0.0 <= self.magnitude <= 1.0:
            raise DomainError(f"magnitude {self.magnitude!r} outside [0, 1]")


def allocate(cmd: MotionCommand) -> ActuatorCommand:
    """Actuator command for one row of the actuation table.

    Driven fans get ``cmd.magnitude`` as throttle. A driven transition
    servo targets full deployment. A driven tail servo is handed to the
    yaw trim (see :func:`tail_trim_angle`).
    """
    try:
        p1, p2, p3, s1, t1 = ACTUATION_TABLE[(cmd.mode, cmd.op)]
    except KeyError:
        raise AllocationError(cmd.mode, cmd.op) from None
    m = cmd.magnitude
    return ActuatorCommand(
        throttle=(p1 * m, p2 * m, p3 * m),
        transition_servo=1.0 if s1 else None,
        tail_trim=bool(t1),
    )


def _equal_thrust_gain(delta: float) -> float:
    # Yaw moment per unit of total vertical thrust produced by the tail tilt
    # when all three fans carry the same thrust F = T / (2 + cos(delta)).
    return math.sin(delta) / (2.0 + math.cos(delta))


def _tilt_bracket(params: VehicleParams) -> float:
    # The gain above peaks at 2*pi/3; past that the trim is not unique.
    return min(params.tail_servo_limit, 2.0 * math.pi / 3.0)


def tail_trim_angle(params: VehicleParams, total_thrust: float = 1.0, yaw_moment: float = 0.0) -> float:
    """Tail tilt that makes equal-thrust flight produce ``yaw_moment``.

    With no yaw demand the angle does not depend on thrust.
    """
    k, arm = params.drag_to_thrust_ratio, params.tail_arm
    if total_thrust == 0.0:
        if yaw_moment != 0.0:
            raise TrimInfeasibleError("yaw moment requested with zero thrust")
        return 0.0
    target = (k * total_thrust + yaw_moment) / (total_thrust * arm)
    if target == 0.0:
        return 0.0
    lim = _tilt_bracket(params)
    if abs(target) > _equal_thrust_gain(lim):
        raise TrimInfeasibleError(
            f"yaw balance needs |gain| {abs(target):.4g} > {_equal_thrust_gain(lim):.4g} "
            f"reachable within ±{lim:.4g} rad"
        )
    return brentq(lambda d: _equal_thrust_gain(d) - target, -lim, lim, xtol=1e-15, rtol=4 * np.finfo(float).eps)


def aerial_mixer(total_thrust: float, yaw_moment: float, params: VehicleParams) -> ActuatorCommand:
    """Equal-throttle tri-rotor mix with tail tilt for yaw.

    ``total_thrust`` is the body-vertical force. All rotors spin the same
    way, so their reaction torques add; the tilted tail fan supplies the
    balancing (plus demanded) yaw moment.
    """
    if total_thrust < 0.0:
        raise DomainError("total thrust must be non-negative")
    if total_thrust > 3.0 * params.fan_max_thrust:
        raise SaturationError(f"{total_thrust:.4g} N exceeds 3 x {params.fan_max_thrust:.4g} N")
    delta = tail_trim_angle(params, total_thrust, yaw_moment)
    per_fan = total_thrust / (2.0 + math.cos(delta))
    if per_fan > params.fan_max_thrust:
        raise SaturationError(f"per-fan thrust {per_fan:.4g} N exceeds {params.fan_max_thrust:.4g} N")
    u = throttle_for_thrust(per_fan, params)
    return ActuatorCommand(
        throttle=(u, u, u),
        tail_servo=delta,
        tail_trim=True,
        servo_limit=params.tail_servo_limit,
    )


def _vertical_moment_matrix(delta: float, params: VehicleParams) -> np.ndarray:
    # Rows: body-z force, roll moment, pitch moment per newton of each fan.
    k = params.drag_to_thrust_ratio
    arms = (params.tail_arm, params.fan_radial_arm, params.fan_radial_arm)
    a = np.zeros((3, 3))
    for i, (az, r) in enumerate(zip(params.fan_azimuths, arms)):
        px, py = r * math.cos(az), r * math.sin(az)
        nz = math.cos(delta) if i == 0 else 1.0
        a[0, i] = nz
        a[1, i] = py * nz
        a[2, i] = -px * nz
        if i == 0:
            # reaction torque along the tilted axis leaks into pitch/roll
            nx = -math.sin(delta) * math.sin(az)
            ny = math.sin(delta) * math.cos(az)
            a[1, i] += -k * nx
            a[2, i] += -k * ny
    return a


def _fan_yaw(thrusts: np.ndarray, delta: float, params: VehicleParams) -> float:
    k, arm = params.drag_to_thrust_ratio, params.tail_arm
    return arm * thrusts[0] * math.sin(delta) - k * (thrusts[1] + thrusts[2] + thrusts[0] * math.cos(delta))


def _smallest_root(fn, lim: float, n: int = 361) -> float:
    # Root of fn in (-lim, lim) closest to zero; the fan-1 column of the
    # linear system degenerates as the tail fan approaches horizontal.
    lim = min(lim, math.acos(1e-3))
    grid = np.linspace(0.0, lim, n)
    best = None
    for sign in (1.0, -1.0):
        prev_d, prev_v = 0.0, fn(0.0)
        if prev_v == 0.0:
            return 0.0
        for d in grid[1:] * sign:
            v = fn(d)
            if prev_v * v <= 0.0:
                a, b = sorted((prev_d, d))
                root = brentq(fn, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps)
                if best is None or abs(root) < abs(best):
                    best = root
                break
            prev_d, prev_v = d, v
    if best is None:
        raise TrimInfeasibleError("no tail tilt within the servo limits balances yaw")
    return best


def tri_rotor_mixer(
    total_thrust: float,
    roll_moment: float,
    pitch_moment: float,
    yaw_moment: float,
    params: VehicleParams,
) -> ActuatorCommand:
    """Full (thrust, roll, pitch, yaw) mix by differential thrust.

    Extrapolated beyond the published allocation: the pattern table only
    fixes which fans run, not how roll and pitch are shared.
    """
    target = np.array([total_thrust, roll_moment, pitch_moment])

    def solve(delta):
        return np.linalg.solve(_vertical_moment_matrix(delta, params), target)

    def residual(delta):
        return _fan_yaw(solve(delta), delta, params) - yaw_moment

    if total_thrust == 0.0 and yaw_moment == 0.0 and roll_moment == 0.0 and pitch_moment == 0.0:
        delta = 0.0
    else:
        delta = _smallest_root(residual, _tilt_bracket(params))
    thrusts = solve(delta)
    if np.any(thrusts < -1e-12):
        raise SaturationError(f"mix needs negative fan thrust {thrusts}")
    if np.any(thrusts > params.fan_max_thrust):
        raise SaturationError(f"mix needs {thrusts.max():.4g} N > {params.fan_max_thrust:.4g} N")
    u = tuple(throttle_for_thrust(max(f, 0.0), params) for f in thrusts)
    return ActuatorCommand(throttle=u, tail_servo=delta, tail_trim=True, servo_limit=params.tail_servo_limit)


def max_balanced_thrust(params: VehicleParams, tol: float = 1e-9) -> float:
    """Largest total thrust :func:`tri_rotor_mixer` can hold with zero moments."""
    lo, hi = 0.0, 3.0 * params.fan_max_thrust
    while hi - lo > tol * hi:
        mid = 0.5 * (lo + hi)
        try:
            tri_rotor_mixer(mid, 0.0, 0.0, 0.0, params)
        except (SaturationError, TrimInfeasibleError):
            hi = mid
        else:
            lo = mid
    return lo


def allocation_table() -> list[tuple[str, str, tuple[int, int, int, int, int]]]:
    """Rows of the actuation table as (mode, operation, pattern)."""
    return [(m.value, o.value, pat) for (m, o), pat in ACTUATION_TABLE.items()]
