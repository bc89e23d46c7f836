"""Deterministic scenario runner producing telemetry and a run report."""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .allocation import Mode, MotionCommand, Op, max_balanced_thrust, tri_rotor_mixer
from .dynamics import (
    MODELS,
    LandTurn,
    Method,
    Wrench,
    mode_wrench,
    make_derivative,
    step_reduced,
)
from .errors import IntegrationDiverged, RejectedTransition, ScenarioError
from .fsm import Event, GuardUpdate, ModeMachine, MorphProgress, Phase, admit_command, step
from .model import ActuatorCommand, RigidState, VehicleParams
from .morph import advance_deployment
from .scenario import Scenario, validate

COLUMNS = (
    "t", "mode", "phase", "morph_s", "u1", "u2", "u3", "tail_servo",
    "x", "y", "z", "vx", "vy", "vz", "wx", "wy", "wz",
    "fx", "fy", "fz", "mx", "my", "mz",
)

_HOLD = None  # dynamics placeholder while the mechanism or hull is repositioning
_IDLE = ActuatorCommand()


@dataclass(frozen=True)
class Rejection:
    t: float
    what: str
    guard: str
    message: str


@dataclass
class RunReport:
    name: str
    header: dict
    rows: int
    final_time: float
    terminal_mode: Mode
    terminal_phase: Phase
    terminal_state: RigidState
    morph_s: float
    dwell: dict = field(default_factory=dict)
    max_speed: dict = field(default_factory=dict)
    rejected: list = field(default_factory=list)
    mode_sequence: list = field(default_factory=list)

    def to_dict(self) -> dict:
        st = self.terminal_state
        return {
            "name": self.name,
            "header": self.header,
            "rows": self.rows,
            "final_time": self.final_time,
            "terminal": {
                "mode": self.terminal_mode.value,
                "phase": self.terminal_phase.value,
                "morph_s": self.morph_s,
                "position": st.position.tolist(),
                "orientation": st.orientation.tolist(),
                "linear_velocity": st.linear_velocity.tolist(),
                "angular_velocity": st.angular_velocity.tolist(),
            },
            "dwell_s": self.dwell,
            "max_speed_mps": self.max_speed,
            "rejected": [vars(r) for r in self.rejected],
            "mode_sequence": self.mode_sequence,
        }


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    return f"{float(v):.9g}"


def _dyn_mode(machine: ModeMachine):
    if machine.phase in (Phase.MORPHING_OUT, Phase.MORPHING_IN, Phase.ROLLING_OVER):
        return _HOLD
    if machine.mode is Mode.AERIAL or machine.phase is Phase.TAKING_OFF:
        return Mode.AERIAL
    return machine.mode


def _rest_state(mode, x: float, y: float, heading: float, params: VehicleParams) -> np.ndarray:
    """Reduced state at rest at planar pose (x, y, heading)."""
    if mode is Mode.LAND:
        return np.array([x, y, heading, 0.0, 0.0, 0.0])
    if mode is Mode.SURFACE:
        return np.array([x, y, heading, 0.0, 0.0, 0.0])
    q = [math.cos(heading / 2), 0.0, 0.0, math.sin(heading / 2)]
    return np.array([x, y, 0.0, *q, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0])


def _planar_pose(mode, y: np.ndarray) -> tuple[float, float, float]:
    if mode in (Mode.LAND, Mode.SURFACE):
        return float(y[0]), float(y[1]), float(y[2])
    q = y[3:7]
    w, qx, qy, qz = q
    heading = math.atan2(2 * (w * qz + qx * qy), 1 - 2 * (qy * qy + qz * qz))
    return float(y[0]), float(y[1]), heading


class _Telemetry:
    def __init__(self, fmt: str, header: dict):
        self.fmt = fmt
        self.buf = io.StringIO()
        if fmt == "csv":
            for k, v in header.items():
                self.buf.write(f"# {k}={v}\n")
            self.buf.write(",".join(COLUMNS) + "\n")
        else:
            self.buf.write(json.dumps({"header": header}, sort_keys=True) + "\n")

    def row(self, values):
        cells = [_fmt(v) for v in values]
        if self.fmt == "csv":
            self.buf.write(",".join(cells) + "\n")
        else:
            rec = {k: (c if isinstance(v, str) else float(c)) for k, v, c in zip(COLUMNS, values, cells)}
            self.buf.write(json.dumps(rec) + "\n")

    def getvalue(self) -> str:
        return self.buf.getvalue()


def run(scenario: Scenario, telemetry_path: str | Path | None = None, seed: int | None = None):
    """Run ``scenario``; returns ``(report, telemetry_text)``.

    Telemetry is also written to ``telemetry_path`` (or the scenario's own
    output path) when one is given.
    """
    errors = validate(scenario)
    if errors:
        raise ScenarioError(errors)
    params = scenario.load_params()
    dt = scenario.dt
    method = Method(scenario.integrator)
    header = {
        "scenario": scenario.name,
        "schema_version": scenario.schema_version,
        "integrator": method.value,
        "dt": repr(dt),
        "duration": repr(scenario.duration),
        "drag_to_thrust_ratio": repr(params.drag_to_thrust_ratio),
        "stiction_moment": repr(params.stiction_moment),
        "fan_max_thrust": repr(params.fan_max_thrust),
        "mass_total": repr(params.mass_total),
        "seed": "none" if seed is None else str(seed),
    }
    tele = _Telemetry(scenario.format, header)

    machine = ModeMachine.initial(scenario.initial_mode)
    dyn = _dyn_mode(machine)
    y = _rest_state(dyn, 0.0, 0.0, 0.0, params)
    command: MotionCommand | None = None
    rejected: list[Rejection] = []
    dwell_steps = {m.value: 0 for m in Mode}
    max_speed = {m.value: 0.0 for m in Mode}
    sequence = [f"{machine.mode.value}/{machine.phase.value}"]

    timeline = list(scenario.timeline)
    due = [max(0, math.ceil(e.t / dt - 1e-9)) for e in timeline]
    cursor = 0
    n = scenario.n_steps
    hold_pose = (0.0, 0.0, 0.0)
    ceiling = max_balanced_thrust(params)
    trims: dict[float, ActuatorCommand] = {}  # balanced mix per total thrust

    def apply(t, entry):
        # rejections are logged, not raised
        nonlocal machine, command
        try:
            if isinstance(entry, MotionCommand):
                admit_command(machine, entry)
                command = entry
                return
            new = step(machine, entry, params)
        except RejectedTransition as exc:
            rejected.append(Rejection(t, _describe(entry), exc.guard, str(exc)))
            return
        if (new.mode, new.phase) != (machine.mode, machine.phase):
            sequence.append(f"{new.mode.value}/{new.phase.value}")
            if command is not None:
                try:
                    admit_command(new, command)
                except RejectedTransition:
                    command = None
        machine = new

    for k in range(n):
        t = k * dt
        while cursor < len(timeline) and due[cursor] <= k:
            apply(t, timeline[cursor].entry)
            cursor += 1

        # mechanism slews while the machine asks for it
        target = machine.morph_target
        if target is not None and machine.morph_s != target:
            s_new = advance_deployment(machine.morph_s, target, dt, params)
            apply(t, MorphProgress(s_new))
            if s_new == target:
                apply(t, Event.MORPH_COMPLETE)

        new_dyn = _dyn_mode(machine)
        if new_dyn is not dyn:
            pose = hold_pose if dyn is _HOLD else _planar_pose(dyn, y)
            if new_dyn is _HOLD:
                hold_pose = pose
            else:
                y = _rest_state(new_dyn, *pose, params)
            dyn = new_dyn

        actuators = _actuators(machine, command, params, ceiling, trims)
        turn = LandTurn.from_params(params) if (
            command is not None and dyn is Mode.LAND and command.op is Op.COUNTER_CLOCKWISE) else None

        if dyn is _HOLD:
            wrench = Wrench(np.zeros(3), np.zeros(3))
        else:
            s_dyn = 1.0 if dyn is Mode.AERIAL else 0.0
            deriv = make_derivative(dyn, actuators, s_dyn, params, turn)
            with np.errstate(over="ignore", invalid="ignore"):
                y_new = step_reduced(y, deriv, dt, method, MODELS[dyn].n_pos)
            if not np.all(np.isfinite(y_new)):
                raise IntegrationDiverged(f"state non-finite at t={(k + 1) * dt:.9g}", last_good_time=t)
            if dyn is Mode.AERIAL and y_new[2] < 0.0:
                # resting on the ground or water plane
                y_new[2] = 0.0
                y_new[9] = max(y_new[9], 0.0)
            y = y_new
            wrench = mode_wrench(dyn, actuators, s_dyn, params, turn)

        state = _rigid(dyn, y, params, hold_pose)
        speed = float(np.linalg.norm(state.linear_velocity))
        dwell_steps[machine.mode.value] += 1
        max_speed[machine.mode.value] = max(max_speed[machine.mode.value], speed)
        tele.row((
            (k + 1) * dt, machine.mode.value, machine.phase.value, machine.morph_s,
            *actuators.throttle, actuators.tail_servo,
            *state.position, *state.linear_velocity, *state.angular_velocity,
            *wrench.force, *wrench.torque,
        ))

    # entries due exactly at the end of the run
    while cursor < len(timeline):
        apply(n * dt, timeline[cursor].entry)
        cursor += 1

    final_state = _rigid(dyn, y, params, hold_pose)
    report = RunReport(
        name=scenario.name,
        header=header,
        rows=n,
        final_time=n * dt,
        terminal_mode=machine.mode,
        terminal_phase=machine.phase,
        terminal_state=final_state,
        morph_s=machine.morph_s,
        dwell={k: v * dt for k, v in dwell_steps.items()},
        max_speed=max_speed,
        rejected=rejected,
        mode_sequence=sequence,
    )
    text = tele.getvalue()
    out = telemetry_path if telemetry_path is not None else scenario.telemetry
    if out is not None:
        Path(out).write_text(text)
    return report, text


def _describe(entry) -> str:
    if isinstance(entry, MotionCommand):
        return f"command {entry.mode.value}/{entry.op.value}"
    if isinstance(entry, GuardUpdate):
        return "guards"
    return f"event {Event(entry).value}"


def _actuators(machine: ModeMachine, command: MotionCommand | None, params: VehicleParams,
               ceiling: float, trims: dict) -> ActuatorCommand:
    if command is None or machine.phase in (Phase.MORPHING_OUT, Phase.MORPHING_IN, Phase.ROLLING_OVER):
        if machine.morph_target is not None and machine.phase is not Phase.TAKING_OFF:
            return ActuatorCommand(transition_servo=machine.morph_target)
        return _IDLE
    act = admit_command(machine, command)
    if act.tail_trim:
        # all three fans with the tail trimming yaw; pitch and roll held level
        total = command.magnitude * ceiling
        if total not in trims:
            trims[total] = tri_rotor_mixer(total, 0.0, 0.0, 0.0, params)
        return trims[total]
    return act


def _rigid(dyn, y, params, hold_pose) -> RigidState:
    if dyn is _HOLD:
        x, yy, psi = hold_pose
        return RigidState(position=[x, yy, 0.0], orientation=[math.cos(psi / 2), 0.0, 0.0, math.sin(psi / 2)])
    return MODELS[dyn].to_rigid(y, params)
