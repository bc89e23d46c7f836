"""Simulation and verification library for a land/water/air ducted-fan vehicle."""

from .allocation import Mode, MotionCommand, Op, aerial_mixer, allocate, tri_rotor_mixer
from .dynamics import (
    LandTurn,
    Method,
    ModeDynamicsInput,
    aerial_wrench,
    integrate_step,
    land_roll_accel,
    land_yaw_accel,
    rollover_torque,
    surface_wrench,
)
from .fsm import Event, ModeMachine, Phase, step, transition_plan
from .model import ActuatorCommand, Axis, RigidState, VehicleParams, inertia_about, load_params, thrust_from_throttle
from .morph import MorphState, fan_pose, morph_mass_check, tail_servo_morph_command
from .scenario import Scenario, load_scenario, validate
from .sim import RunReport, run

__version__ = "0.1.0"

__all__ = [
    "ActuatorCommand", "Axis", "Event", "LandTurn", "Method", "Mode", "ModeDynamicsInput",
    "ModeMachine", "MorphState", "MotionCommand", "Op", "Phase", "RigidState", "RunReport",
    "Scenario", "VehicleParams", "aerial_mixer", "aerial_wrench", "allocate", "fan_pose",
    "inertia_about", "integrate_step", "land_roll_accel", "land_yaw_accel", "load_params",
    "load_scenario", "morph_mass_check", "rollover_torque", "run", "step", "surface_wrench",
    "tail_servo_morph_command", "thrust_from_throttle", "transition_plan", "tri_rotor_mixer",
    "validate",
]
