"""Per-mode equations of motion and the fixed-step integrators.

Each mode integrates its own reduced state vector:

* land: ``[x, y, heading, roll_angle, roll_rate, yaw_rate]``; the body lies
  on its curved side and rolls without slip along its heading.
* surface: ``[x, y, heading, vx, vy, yaw_rate]``; the body floats flat with
  the fan face up, fans blowing in the face plane.
* aerial: ``[position(3), quaternion(4), velocity(3), body_rate(3)]``.

:func:`integrate_step` accepts and returns :class:`RigidState`; the
simulator uses :func:`step_reduced` directly to avoid the round trip.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, NamedTuple

import numpy as np

from .allocation import Mode
from .errors import DomainError, IntegrationDiverged, ModeConfigurationError
from .model import ActuatorCommand, Axis, RigidState, VehicleParams, inertia_about, inertia_tensor
from .morph import MorphState

MAX_DT = 0.01


class Method(str, Enum):
    SEMI_IMPLICIT_EULER = "semi_implicit_euler"
    RK4 = "rk4"


class Wrench(NamedTuple):
    force: np.ndarray   # N, body frame
    torque: np.ndarray  # N*m, body frame


class LandYaw(NamedTuple):
    yaw_accel: float      # rad/s^2
    forward_force: float  # N left over after the stiction deadband


@dataclass(frozen=True)
class LandTurn:
    """Geometry of the turning fan force in land mode."""

    theta: float  # angle of the force from the rolling axis, rad
    h: float      # lever about the yaw axis, m
    d: float      # lever in the stiction moment check, m

    @classmethod
    def from_params(cls, params: VehicleParams) -> LandTurn:
        return cls(params.turn_theta, params.turn_height, params.turn_arm)


@dataclass(frozen=True)
class ModeDynamicsInput:
    mode: Mode
    state: RigidState
    actuators: ActuatorCommand
    morph: MorphState | float = 0.0
    turn: LandTurn | None = None
    params: VehicleParams = field(default_factory=VehicleParams)


# ---------------------------------------------------------------- rotations

def quat_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array([
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    ])


def quat_to_matrix(q: np.ndarray) -> np.ndarray:
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def quat_axis_angle(axis, angle: float) -> np.ndarray:
    axis = np.asarray(axis, dtype=float)
    h = 0.5 * angle
    return np.concatenate(([math.cos(h)], math.sin(h) * axis / np.linalg.norm(axis)))


def _yaw_quat(psi):
    return np.array([math.cos(psi / 2), 0.0, 0.0, math.sin(psi / 2)])


# body z (cylinder axis) horizontal, pointing to world +y at zero heading
_LIE = quat_axis_angle([1.0, 0.0, 0.0], -math.pi / 2)


def _heading_of(R: np.ndarray) -> float:
    return math.atan2(R[1, 0], R[0, 0])


# ------------------------------------------------------------ fan geometry

def _morph_s(morph) -> float:
    return float(morph.s if isinstance(morph, MorphState) else morph)


def _fan_arms(params: VehicleParams) -> tuple[float, float, float]:
    return (params.tail_arm, params.fan_radial_arm, params.fan_radial_arm)


# thrust sense of each fan along the in-plane tangent when retracted; fan 1
# turns the hull counter-clockwise, fan 3 clockwise
SURFACE_SENSE = (1.0, 1.0, -1.0)


def surface_fan_axes(params: VehicleParams) -> tuple[np.ndarray, np.ndarray]:
    """Positions and unit thrust directions of the retracted fans, body x-y."""
    pos, dirs = [], []
    for az, r, sense in zip(params.fan_azimuths, _fan_arms(params), SURFACE_SENSE):
        pos.append((r * math.cos(az), r * math.sin(az)))
        dirs.append((-sense * math.sin(az), sense * math.cos(az)))
    return np.array(pos), np.array(dirs)


def surface_forward_axis(params: VehicleParams) -> np.ndarray:
    """Body-frame direction pushed by the symmetric pair (fans 1 and 3)."""
    _, dirs = surface_fan_axes(params)
    v = dirs[0] + dirs[2]
    return v / np.linalg.norm(v)


# ---------------------------------------------------------------- land mode

def land_roll_accel(f1: float, f2: float, params: VehicleParams) -> float:
    """Rolling acceleration about the spin axis from two rim forces."""
    if f1 < 0 or f2 < 0:
        raise DomainError("fan forces must be non-negative")
    return (f1 + f2) * params.body_radius / inertia_about(params, Axis.SPIN)


def land_yaw_accel(f3: float, theta: float, h: float, d: float, params: VehicleParams) -> LandYaw:
    """Turn-in-place response of the lying body to one fan force.

    Below the stiction moment the horizontal part of the force produces no
    forward motion; above it only the excess over the threshold does.
    """
    if f3 < 0:
        raise DomainError("fan force must be non-negative")
    if not (h > 0 and d > 0):
        raise DomainError("lever arms h and d must be positive")
    alpha = f3 * math.sin(theta) * h / inertia_about(params, Axis.CONTACT_YAW)
    moment = f3 * math.cos(theta) * d
    if abs(moment) < params.stiction_moment:
        return LandYaw(alpha, 0.0)
    excess = abs(moment) - params.stiction_moment
    return LandYaw(alpha, math.copysign(excess / d, moment))


def _land_generalized(thrusts, turn: LandTurn | None, params: VehicleParams):
    i_spin = inertia_about(params, Axis.SPIN)
    roll = land_roll_accel(thrusts[1], thrusts[2], params)
    yaw = 0.0
    if turn is None:
        roll -= thrusts[0] * params.body_radius / i_spin
    else:
        resp = land_yaw_accel(thrusts[0], turn.theta, turn.h, turn.d, params)
        yaw = resp.yaw_accel
        # residual push acts against the fan-1 side, like backward rolling
        roll -= resp.forward_force * params.body_radius / i_spin
    return roll, yaw


def _land_deriv(y, roll_acc, yaw_acc, radius):
    v = radius * y[4]
    return np.array([v * math.cos(y[2]), v * math.sin(y[2]), y[5], y[4], roll_acc, yaw_acc])


def land_orientation(heading: float, roll: float) -> np.ndarray:
    return quat_mul(quat_mul(_yaw_quat(heading), _LIE), _yaw_quat(roll))


def _land_to_rigid(y, params):
    q = land_orientation(y[2], y[3])
    R = quat_to_matrix(q)
    v = params.body_radius * y[4]
    w_world = y[4] * R[:, 2] + np.array([0.0, 0.0, y[5]])
    return RigidState(
        position=[y[0], y[1], params.body_radius],
        orientation=q,
        linear_velocity=[v * math.cos(y[2]), v * math.sin(y[2]), 0.0],
        angular_velocity=R.T @ w_world,
    )


def _land_from_rigid(state: RigidState, params):
    q = state.orientation / np.linalg.norm(state.orientation)
    R = quat_to_matrix(q)
    axis = R[:, 2]
    heading = math.atan2(-axis[0], axis[1])
    base = quat_to_matrix(quat_mul(_yaw_quat(heading), _LIE))
    Rr = base.T @ R
    roll = math.atan2(Rr[1, 0], Rr[0, 0])
    w_world = R @ state.angular_velocity
    return np.array([state.position[0], state.position[1], heading, roll,
                     float(state.angular_velocity[2]), float(w_world[2])])


# ------------------------------------------------------------- surface mode

def surface_wrench(actuators: ActuatorCommand, morph, params: VehicleParams) -> Wrench:
    """Planar force and yaw torque of the retracted fans (body frame)."""
    if _morph_s(morph) != 0.0:
        raise ModeConfigurationError("surface mode needs retracted fans (s = 0)")
    pos, dirs = surface_fan_axes(params)
    thrusts = actuators.thrusts(params)
    force = thrusts @ dirs
    torque = float(np.sum(thrusts * (pos[:, 0] * dirs[:, 1] - pos[:, 1] * dirs[:, 0])))
    return Wrench(np.array([force[0], force[1], 0.0]), np.array([0.0, 0.0, torque]))


def _surface_deriv(y, force_b, torque_z, params):
    c, s = math.cos(y[2]), math.sin(y[2])
    m = params.mass_total
    fx = c * force_b[0] - s * force_b[1] - params.surface_linear_damping * y[3]
    fy = s * force_b[0] + c * force_b[1] - params.surface_linear_damping * y[4]
    i_spin = inertia_about(params, Axis.SPIN)
    r_acc = (torque_z - params.surface_angular_damping * y[5]) / i_spin
    return np.array([y[3], y[4], y[5], fx / m, fy / m, r_acc])


def _surface_to_rigid(y, params):
    return RigidState(
        position=[y[0], y[1], 0.0],
        orientation=_yaw_quat(y[2]),
        linear_velocity=[y[3], y[4], 0.0],
        angular_velocity=[0.0, 0.0, y[5]],
    )


def _surface_from_rigid(state: RigidState, params):
    R = quat_to_matrix(state.orientation / np.linalg.norm(state.orientation))
    w_world = R @ state.angular_velocity
    return np.array([state.position[0], state.position[1], _heading_of(R),
                     state.linear_velocity[0], state.linear_velocity[1], w_world[2]])


# -------------------------------------------------------------- aerial mode

def tail_thrust_axis(delta: float, params: VehicleParams) -> np.ndarray:
    """Fan 1 thrust direction, tilted by ``delta`` about its radial arm."""
    az = params.fan_azimuths[0]
    return np.array([-math.sin(az) * math.sin(delta), math.cos(az) * math.sin(delta), math.cos(delta)])


def aerial_wrench(actuators: ActuatorCommand, morph, params: VehicleParams) -> Wrench:
    """Body-frame force and torque of the deployed fans.

    All rotors spin counter-clockwise seen from above, so each adds a
    reaction torque ``-k * F`` along its own thrust axis.
    """
    if _morph_s(morph) != 1.0:
        raise ModeConfigurationError("aerial mode needs deployed fans (s = 1)")
    thrusts = actuators.thrusts(params)
    k = params.drag_to_thrust_ratio
    force = np.zeros(3)
    torque = np.zeros(3)
    up = np.array([0.0, 0.0, 1.0])
    for i, (az, r) in enumerate(zip(params.fan_azimuths, _fan_arms(params))):
        n = tail_thrust_axis(actuators.tail_servo, params) if i == 0 else up
        f = thrusts[i] * n
        p = np.array([r * math.cos(az), r * math.sin(az), 0.0])
        force += f
        torque += np.cross(p, f) - k * f
    return Wrench(force, torque)


def _aerial_deriv(y, force_b, torque_b, params, inertia, inertia_inv):
    q = y[3:7]
    v = y[7:10]
    w = y[10:13]
    R = quat_to_matrix(q)
    acc = (R @ force_b - params.aerial_linear_damping * v) / params.mass_total
    acc[2] -= params.gravity
    qdot = 0.5 * quat_mul(q, np.array([0.0, w[0], w[1], w[2]]))
    wdot = inertia_inv @ (torque_b - np.cross(w, inertia @ w) - params.aerial_angular_damping * w)
    return np.concatenate((v, qdot, acc, wdot))


def _aerial_to_rigid(y, params):
    return RigidState(position=y[0:3], orientation=y[3:7], linear_velocity=y[7:10], angular_velocity=y[10:13])


def _aerial_from_rigid(state: RigidState, params):
    return np.concatenate((state.position, state.orientation, state.linear_velocity, state.angular_velocity))


# ------------------------------------------------------------ rollover torque

def rollover_torque(params: VehicleParams, tilt: float = math.pi / 2, buoyant_force: float | None = None) -> float:
    """Buoyancy torque about the centre of gravity while floating.

    ``tilt`` is the rotation of the body about its x axis away from the
    fan-face-up posture (pi/2 is lying on its side as in land mode). The
    buoyant force acts straight up at the centre of buoyancy; only its
    component perpendicular to the buoyancy-to-gravity line makes torque.
    Positive values turn the body back toward the fan-face-up posture.
    """
    w = params.weight if buoyant_force is None else buoyant_force
    rot = quat_to_matrix(quat_axis_angle([1.0, 0.0, 0.0], tilt))
    lever = rot @ (np.array(params.buoyancy_center_offset) - np.array(params.cg_offset))
    torque = np.cross(lever, np.array([0.0, 0.0, w]))
    return float(-torque[0])


# -------------------------------------------------------------- integration

@dataclass(frozen=True)
class _ModeModel:
    n_pos: int
    to_rigid: Callable
    from_rigid: Callable


MODELS = {
    Mode.LAND: _ModeModel(4, _land_to_rigid, _land_from_rigid),
    Mode.SURFACE: _ModeModel(3, _surface_to_rigid, _surface_from_rigid),
    Mode.AERIAL: _ModeModel(7, _aerial_to_rigid, _aerial_from_rigid),
}


def make_derivative(mode: Mode, actuators: ActuatorCommand, morph, params: VehicleParams,
                    turn: LandTurn | None = None) -> Callable[[np.ndarray], np.ndarray]:
    """Right-hand side of the reduced ODE with actuators held constant."""
    mode = Mode(mode)
    s = _morph_s(morph)
    if mode is Mode.LAND:
        if s != 0.0:
            raise ModeConfigurationError("land mode needs retracted fans (s = 0)")
        roll, yaw = _land_generalized(actuators.thrusts(params), turn, params)
        radius = params.body_radius
        return lambda y: _land_deriv(y, roll, yaw, radius)
    if mode is Mode.SURFACE:
        wr = surface_wrench(actuators, s, params)
        fb, tz = wr.force, float(wr.torque[2])
        return lambda y: _surface_deriv(y, fb, tz, params)
    wr = aerial_wrench(actuators, s, params)
    inertia = inertia_tensor(params)
    inertia_inv = np.linalg.inv(inertia)
    return lambda y: _aerial_deriv(y, wr.force, wr.torque, params, inertia, inertia_inv)


def mode_wrench(mode: Mode, actuators: ActuatorCommand, morph, params: VehicleParams,
                turn: LandTurn | None = None) -> Wrench:
    """Body-frame generalized wrench reported in telemetry."""
    mode = Mode(mode)
    if mode is Mode.SURFACE:
        return surface_wrench(actuators, morph, params)
    if mode is Mode.AERIAL:
        return aerial_wrench(actuators, morph, params)
    roll, yaw = _land_generalized(actuators.thrusts(params), turn, params)
    # roll torque about the spin axis, yaw torque about the contact vertical
    return Wrench(np.zeros(3), np.array([
        0.0, yaw * inertia_about(params, Axis.CONTACT_YAW), roll * inertia_about(params, Axis.SPIN)]))


def step_reduced(y: np.ndarray, deriv, dt: float, method: Method | str, n_pos: int) -> np.ndarray:
    method = Method(method)
    if method is Method.RK4:
        k1 = deriv(y)
        k2 = deriv(y + 0.5 * dt * k1)
        k3 = deriv(y + 0.5 * dt * k2)
        k4 = deriv(y + dt * k3)
        out = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    else:
        # velocities first, then positions from the updated velocities
        out = y.copy()
        out[n_pos:] = y[n_pos:] + dt * deriv(y)[n_pos:]
        out[:n_pos] = y[:n_pos] + dt * deriv(out)[:n_pos]
    if n_pos == 7:
        out[3:7] /= np.linalg.norm(out[3:7])
    return out


def integrate_step(inp: ModeDynamicsInput, dt: float, method: Method | str = Method.RK4) -> RigidState:
    """Advance the active mode's reduced state by one fixed step."""
    if not 0 < dt <= MAX_DT:
        raise DomainError(f"dt must lie in (0, {MAX_DT}] s, got {dt!r}")
    mode = Mode(inp.mode)
    model = MODELS[mode]
    deriv = make_derivative(mode, inp.actuators, inp.morph, inp.params, inp.turn)
    y = model.from_rigid(inp.state, inp.params)
    with np.errstate(over="ignore", invalid="ignore"):
        out = step_reduced(y, deriv, dt, method, model.n_pos)
    if not np.all(np.isfinite(out)):
        raise IntegrationDiverged("state became non-finite")
    return model.to_rigid(out, inp.params)
