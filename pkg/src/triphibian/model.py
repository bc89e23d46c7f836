"""Vehicle parameters, shared state types and thrust/inertia helpers.

Body frame convention used throughout the package: ``z`` is the cylinder
axis pointing out of the face that carries the ducted fans, ``x`` points
away from the tail fan (fan 1) and ``y`` completes a right-handed frame.
"""

from __future__ import annotations

import math
import os
import sys
from dataclasses import dataclass, field, fields, replace
from enum import Enum
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import DomainError

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

PARAMS_ENV = "TRIPHIBIAN_PARAMS"
GRAMS_PER_KG = 1000.0


class Axis(str, Enum):
    SPIN = "spin"                  # cylinder axis through the centre
    DIAMETER = "diameter"          # a diameter through the centre
    CONTACT_LINE = "contact_line"  # ground contact line, parallel to the spin axis
    CONTACT_YAW = "contact_yaw"    # vertical axis through the contact point of a lying body


def _vec3(v) -> tuple[float, float, float]:
    a = tuple(float(x) for x in v)
    if len(a) != 3:
        raise DomainError(f"expected a 3-vector, got {v!r}")
    return a


@dataclass(frozen=True)
class VehicleParams:
    """Every physical constant the models use.

    ``fan_radial_arm`` and ``tail_arm`` default to ``body_radius``.
    """

    mass_total: float = 3.88
    body_radius: float = 0.205
    body_height: float = 0.12
    fan_count: int = 3
    fan_max_thrust: float = 0.950 * 9.81
    fan_mass: float = 0.077
    morph_joint_mass: float = 0.121
    fan_azimuths: tuple[float, float, float] = (math.pi, math.pi / 3, -math.pi / 3)
    fan_radial_arm: float | None = None
    tail_arm: float | None = None
    drag_to_thrust_ratio: float = 0.02
    stiction_moment: float = 0.05
    cg_offset: tuple[float, float, float] = (0.0, 0.0, -0.02)
    buoyancy_center_offset: tuple[float, float, float] = (0.0, 0.0, 0.0)
    gravity: float = 9.81
    thrust_curve: str = "linear"
    fan_housing_radius: float = 0.035
    retracted_offset: float = 0.16
    extended_offset: float = 0.26
    morph_split: float = 0.6
    morph_rate: float = 0.5
    tail_servo_base: float = 0.0
    tail_servo_limit: float = math.pi / 2
    turn_theta: float = math.pi / 2
    turn_height: float = 0.1
    turn_arm: float = 0.1
    surface_linear_damping: float = 0.0
    surface_angular_damping: float = 0.0
    aerial_linear_damping: float = 0.0
    aerial_angular_damping: float = 0.0

    def __post_init__(self):
        if self.fan_radial_arm is None:
            object.__setattr__(self, "fan_radial_arm", self.body_radius)
        if self.tail_arm is None:
            object.__setattr__(self, "tail_arm", self.body_radius)
        object.__setattr__(self, "fan_azimuths", tuple(float(a) for a in self.fan_azimuths))
        object.__setattr__(self, "cg_offset", _vec3(self.cg_offset))
        object.__setattr__(self, "buoyancy_center_offset", _vec3(self.buoyancy_center_offset))
        self._check()

    def _check(self):
        if not self.mass_total >= 0:
            raise DomainError("mass_total must be non-negative")
        if not self.body_radius > 0:
            raise DomainError("body_radius must be positive")
        if not self.fan_max_thrust > 0:
            raise DomainError("fan_max_thrust must be positive")
        if not 0 <= self.drag_to_thrust_ratio < 1:
            raise DomainError("drag_to_thrust_ratio must lie in [0, 1)")
        if self.fan_count != 3 or len(self.fan_azimuths) != 3:
            raise DomainError("the vehicle has exactly three fans")
        a = self.fan_azimuths
        for i, j in ((0, 1), (1, 2), (2, 0)):
            gap = (a[j] - a[i]) % (2 * math.pi)
            if min(abs(gap - 2 * math.pi / 3), abs(gap - 4 * math.pi / 3)) > 1e-9:
                raise DomainError("fan azimuths must be spaced 120 degrees apart")
        if self.thrust_curve not in ("linear", "quadratic"):
            raise DomainError(f"unknown thrust curve {self.thrust_curve!r}")
        if not 0 < self.morph_split < 1:
            raise DomainError("morph_split must lie strictly inside (0, 1)")
        if not self.morph_rate > 0:
            raise DomainError("morph_rate must be positive")
        if not 0 < self.tail_servo_limit <= math.pi:
            raise DomainError("tail_servo_limit must lie in (0, pi]")

    @property
    def weight(self) -> float:
        return self.mass_total * self.gravity

    def with_overrides(self, **kw) -> VehicleParams:
        """Copy with some fields replaced; arms left unset follow the new radius."""
        if "body_radius" in kw:
            kw.setdefault("fan_radial_arm", None)
            kw.setdefault("tail_arm", None)
        return replace(self, **kw)


# TOML (section, key) -> (field name, converter)
_DEG = math.radians
_FILE_KEYS = {
    ("body", "mass"): ("mass_total", float),
    ("body", "diameter"): ("body_radius", lambda d: float(d) / 2),
    ("body", "height"): ("body_height", float),
    ("body", "gravity"): ("gravity", float),
    ("fans", "count"): ("fan_count", int),
    ("fans", "azimuths_deg"): ("fan_azimuths", lambda v: tuple(_DEG(x) for x in v)),
    ("fans", "mass"): ("fan_mass", float),
    ("fans", "housing_radius"): ("fan_housing_radius", float),
    ("fans", "thrust_curve"): ("thrust_curve", str),
    ("fans", "drag_to_thrust_ratio"): ("drag_to_thrust_ratio", float),
    ("fans", "radial_arm"): ("fan_radial_arm", float),
    ("fans", "tail_arm"): ("tail_arm", float),
    ("morph", "joint_mass"): ("morph_joint_mass", float),
    ("morph", "retracted_offset"): ("retracted_offset", float),
    ("morph", "extended_offset"): ("extended_offset", float),
    ("morph", "split"): ("morph_split", float),
    ("morph", "rate"): ("morph_rate", float),
    ("morph", "tail_servo_base"): ("tail_servo_base", float),
    ("morph", "tail_servo_limit_deg"): ("tail_servo_limit", _DEG),
    ("contact", "stiction_moment"): ("stiction_moment", float),
    ("contact", "cg_offset"): ("cg_offset", _vec3),
    ("contact", "buoyancy_center_offset"): ("buoyancy_center_offset", _vec3),
    ("contact", "turn_force_angle_deg"): ("turn_theta", _DEG),
    ("contact", "turn_height"): ("turn_height", float),
    ("contact", "turn_arm"): ("turn_arm", float),
    ("damping", "surface_linear"): ("surface_linear_damping", float),
    ("damping", "surface_angular"): ("surface_angular_damping", float),
    ("damping", "aerial_linear"): ("aerial_linear_damping", float),
    ("damping", "aerial_angular"): ("aerial_angular_damping", float),
}
PARAM_FIELDS = frozenset(f.name for f in fields(VehicleParams))


def params_from_mapping(doc: dict) -> VehicleParams:
    """Build parameters from a parsed parameter document."""
    kw = {}
    unknown = []
    for section, table in doc.items():
        if not isinstance(table, dict):
            unknown.append(section)
            continue
        for key, value in table.items():
            if (section, key) == ("fans", "max_thrust_gram"):
                continue
            try:
                name, conv = _FILE_KEYS[(section, key)]
            except KeyError:
                unknown.append(f"{section}.{key}")
                continue
            kw[name] = conv(value)
    if unknown:
        raise DomainError(f"unknown parameter keys: {', '.join(unknown)}")
    grams = doc.get("fans", {}).get("max_thrust_gram")
    if grams is not None:
        kw["fan_max_thrust"] = float(grams) / GRAMS_PER_KG * kw.get("gravity", 9.81)
    return VehicleParams(**kw)


def default_params_text() -> str:
    return resources.files(__package__).joinpath("data/default.toml").read_text()


def load_params(path: str | os.PathLike | None = None) -> VehicleParams:
    """Load a parameter file.

    With no path, ``$TRIPHIBIAN_PARAMS`` is used when set, otherwise the
    packaged nominal file.
    """
    if path is None:
        path = os.environ.get(PARAMS_ENV) or None
    if path is None:
        doc = tomllib.loads(default_params_text())
    else:
        doc = tomllib.loads(Path(path).read_text())
    return params_from_mapping(doc)


def thrust_from_throttle(u: float, params: VehicleParams) -> float:
    """Static thrust in newtons of one fan at throttle fraction ``u``."""
    if not 0.0 <= u <= 1.0:
        raise DomainError(f"throttle {u!r} outside [0, 1]")
    if params.thrust_curve == "quadratic":
        return u * u * params.fan_max_thrust
    return u * params.fan_max_thrust


def throttle_for_thrust(thrust: float, params: VehicleParams) -> float:
    """Inverse of :func:`thrust_from_throttle`."""
    if not 0.0 <= thrust <= params.fan_max_thrust * (1 + 1e-12):
        raise DomainError(f"thrust {thrust!r} N outside the fan envelope")
    u = min(thrust / params.fan_max_thrust, 1.0)
    return math.sqrt(u) if params.thrust_curve == "quadratic" else u


def inertia_about(params: VehicleParams, axis: Axis | str) -> float:
    """Moment of inertia of the body treated as a uniform solid cylinder."""
    m, r, h = params.mass_total, params.body_radius, params.body_height
    axis = Axis(axis)
    spin = 0.5 * m * r * r
    diameter = 0.25 * m * r * r + m * h * h / 12.0
    if axis is Axis.SPIN:
        return spin
    if axis is Axis.DIAMETER:
        return diameter
    if axis is Axis.CONTACT_LINE:
        return spin + m * r * r
    return diameter + m * r * r


def inertia_tensor(params: VehicleParams) -> np.ndarray:
    d = inertia_about(params, Axis.DIAMETER)
    return np.diag([d, d, inertia_about(params, Axis.SPIN)])


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class RigidState:
    """Pose and velocities of the body.

    ``orientation`` is a unit quaternion ``(w, x, y, z)`` rotating body
    vectors into the world frame; ``angular_velocity`` is in the body frame.
    """

    position: np.ndarray = field(default_factory=lambda: _frozen([0.0, 0.0, 0.0]))
    orientation: np.ndarray = field(default_factory=lambda: _frozen([1.0, 0.0, 0.0, 0.0]))
    linear_velocity: np.ndarray = field(default_factory=lambda: _frozen([0.0, 0.0, 0.0]))
    angular_velocity: np.ndarray = field(default_factory=lambda: _frozen([0.0, 0.0, 0.0]))

    def __post_init__(self):
        for name in ("position", "orientation", "linear_velocity", "angular_velocity"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        n = float(np.linalg.norm(self.orientation))
        if not n > 0:
            raise DomainError("orientation quaternion has zero norm")

    def __eq__(self, other):
        if not isinstance(other, RigidState):
            return NotImplemented
        return all(
            np.array_equal(getattr(self, k), getattr(other, k))
            for k in ("position", "orientation", "linear_velocity", "angular_velocity")
        )

    __hash__ = None

    @property
    def normalization_error(self) -> float:
        return abs(float(np.linalg.norm(self.orientation)) - 1.0)


@dataclass(frozen=True)
class ActuatorCommand:
    """Fan throttles plus the two servo commands.

    ``tail_servo`` is the tail-fan tilt in radians about its radial axis.
    ``transition_servo`` is the target deployment fraction, or ``None``
    when the transition servo is idle. ``tail_trim`` marks the tail servo
    as actively trimming yaw.
    """

    throttle: tuple[float, float, float] = (0.0, 0.0, 0.0)
    tail_servo: float = 0.0
    transition_servo: float | None = None
    tail_trim: bool = False
    servo_limit: float = math.pi / 2

    def __post_init__(self):
        thr = tuple(float(u) for u in self.throttle)
        if len(thr) != 3:
            raise DomainError("throttle must have three entries")
        for u in thr:
            if not 0.0 <= u <= 1.0:
                raise DomainError(f"throttle {u!r} outside [0, 1]")
        object.__setattr__(self, "throttle", thr)
        if not abs(self.tail_servo) <= self.servo_limit:
            raise DomainError(f"tail servo angle {self.tail_servo!r} beyond ±{self.servo_limit}")
        if self.transition_servo is not None and not 0.0 <= self.transition_servo <= 1.0:
            raise DomainError("transition servo target outside [0, 1]")

    def pattern(self) -> tuple[int, int, int, int, int]:
        """Zero/non-zero flags in the order (P1, P2, P3, S1, T1)."""
        p = tuple(int(u != 0.0) for u in self.throttle)
        return p + (int(self.transition_servo is not None), int(self.tail_trim))

    def thrusts(self, params: VehicleParams) -> np.ndarray:
        return np.array([thrust_from_throttle(u, params) for u in self.throttle])
