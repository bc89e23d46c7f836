"""Guarded mode machine for transitions between land, surface and aerial.

Transition procedures:

* surface -> aerial: deploy the fans, then take off.
* aerial -> surface: descend, touch down, retract the fans. Touching down
  on ground instead of water ends in land mode (an extension; the reverse
  of land -> aerial).
* land -> surface: at the water's edge, roll in and let buoyancy flip the
  body fan-face up.
* land -> aerial: turn the body flat, deploy the fans, take off.

Surface -> land is not part of the graph.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field, replace
from enum import Enum

from .allocation import ACTUATION_TABLE, Mode, MotionCommand, Op, allocate
from .dynamics import rollover_torque
from .errors import RejectedTransition
from .model import ActuatorCommand, VehicleParams


class Phase(str, Enum):
    STEADY = "Steady"
    MORPHING_OUT = "MorphingOut"
    MORPHING_IN = "MorphingIn"
    ROLLING_OVER = "RollingOver"
    TAKING_OFF = "TakingOff"
    LANDING = "Landing"


class Event(str, Enum):
    REQUEST_SURFACE_TO_AERIAL = "RequestSurfaceToAerial"
    REQUEST_AERIAL_TO_SURFACE = "RequestAerialToSurface"
    REQUEST_LAND_TO_SURFACE = "RequestLandToSurface"
    REQUEST_LAND_TO_AERIAL = "RequestLandToAerial"
    MORPH_COMPLETE = "MorphComplete"
    ROLLOVER_COMPLETE = "RolloverComplete"
    TOUCHDOWN_DETECTED = "TouchdownDetected"
    LIFTOFF_DETECTED = "LiftoffDetected"


@dataclass(frozen=True)
class GuardUpdate:
    """Scripted change of the sensed flags; ``None`` leaves a flag alone."""

    at_water_edge: bool | None = None
    airborne: bool | None = None
    on_ground: bool | None = None


@dataclass(frozen=True)
class MorphProgress:
    """Deployment fraction reported while the mechanism is moving."""

    s: float


@dataclass(frozen=True)
class GuardContext:
    morph_s: float = 0.0
    at_water_edge: bool = False
    airborne: bool = False
    on_ground: bool = False


@dataclass(frozen=True)
class ModeMachine:
    mode: Mode = Mode.LAND
    phase: Phase = Phase.STEADY
    guard_context: GuardContext = field(default_factory=GuardContext)

    @classmethod
    def initial(cls, mode: Mode | str, **context) -> ModeMachine:
        mode = Mode(mode)
        s = 1.0 if mode is Mode.AERIAL else 0.0
        if mode is Mode.LAND:
            context.setdefault("on_ground", True)
        if mode is Mode.AERIAL:
            context.setdefault("airborne", True)
        return cls(mode, Phase.STEADY, GuardContext(morph_s=s, **context))

    @property
    def morph_s(self) -> float:
        return self.guard_context.morph_s

    @property
    def morph_target(self) -> float | None:
        if self.phase in (Phase.MORPHING_OUT, Phase.TAKING_OFF):
            return 1.0
        if self.phase is Phase.MORPHING_IN:
            return 0.0
        return None

    def invariant_violations(self) -> list[str]:
        out = []
        if self.phase is Phase.STEADY:
            want = 1.0 if self.mode is Mode.AERIAL else 0.0
            if self.morph_s != want:
                out.append(f"{self.mode.value}/Steady with morph.s = {self.morph_s}")
        return out


def _ctx(m: ModeMachine, **kw) -> GuardContext:
    return replace(m.guard_context, **kw)


def _require(ok: bool, guard: str, detail: str = ""):
    if not ok:
        raise RejectedTransition(guard, detail)


def step(machine: ModeMachine, event, params: VehicleParams | None = None) -> ModeMachine:
    """Apply one event; raises :class:`RejectedTransition` if it is not enabled.

    The input machine is never modified.
    """
    m = machine
    if isinstance(event, GuardUpdate):
        kw = {k: v for k, v in vars(event).items() if v is not None}
        return replace(m, guard_context=_ctx(m, **kw))
    if isinstance(event, MorphProgress):
        return _morph_progress(m, float(event.s))
    ev = Event(event)
    where = f"in {m.mode.value}/{m.phase.value}"
    mode, phase, ctx = m.mode, m.phase, m.guard_context

    if ev is Event.REQUEST_SURFACE_TO_AERIAL:
        _require(mode is Mode.SURFACE and phase is Phase.STEADY, "Surface/Steady", where)
        return replace(m, phase=Phase.MORPHING_OUT)
    if ev is Event.REQUEST_LAND_TO_AERIAL:
        _require(mode is Mode.LAND and phase is Phase.STEADY, "Land/Steady", where)
        _require(ctx.on_ground, "on_ground")
        return replace(m, phase=Phase.MORPHING_OUT)
    if ev is Event.REQUEST_LAND_TO_SURFACE:
        _require(mode is Mode.LAND and phase is Phase.STEADY, "Land/Steady", where)
        _require(ctx.at_water_edge, "at_water_edge")
        p = params if params is not None else VehicleParams()
        torque = rollover_torque(p)
        _require(torque > 0.0, "rollover_torque > 0", f"buoyancy torque {torque:.4g} N*m")
        return replace(m, phase=Phase.ROLLING_OVER)
    if ev is Event.ROLLOVER_COMPLETE:
        _require(phase is Phase.ROLLING_OVER, "RollingOver", where)
        return replace(m, mode=Mode.SURFACE, phase=Phase.STEADY,
                       guard_context=_ctx(m, on_ground=False, at_water_edge=False))
    if ev is Event.REQUEST_AERIAL_TO_SURFACE:
        _require(mode is Mode.AERIAL and phase is Phase.STEADY, "Aerial/Steady", where)
        return replace(m, phase=Phase.LANDING)
    if ev is Event.TOUCHDOWN_DETECTED:
        _require(phase is Phase.LANDING, "Landing", where)
        _require(not ctx.airborne, "not airborne")
        dest = Mode.LAND if ctx.on_ground else Mode.SURFACE
        return replace(m, mode=dest, phase=Phase.MORPHING_IN)
    if ev is Event.MORPH_COMPLETE:
        if phase is Phase.MORPHING_OUT:
            return replace(m, phase=Phase.TAKING_OFF, guard_context=_ctx(m, morph_s=1.0))
        if phase is Phase.MORPHING_IN:
            return replace(m, phase=Phase.STEADY, guard_context=_ctx(m, morph_s=0.0))
        raise RejectedTransition("MorphingOut or MorphingIn", where)
    # LIFTOFF_DETECTED
    _require(phase is Phase.TAKING_OFF, "TakingOff", where)
    _require(ctx.morph_s == 1.0, "morph.s = 1 at TakeOff", f"morph.s = {ctx.morph_s}")
    _require(ctx.airborne, "airborne")
    return replace(m, mode=Mode.AERIAL, phase=Phase.STEADY,
                   guard_context=_ctx(m, on_ground=False, at_water_edge=False))


def _morph_progress(m: ModeMachine, s: float) -> ModeMachine:
    _require(0.0 <= s <= 1.0, "0 <= morph.s <= 1", f"s = {s}")
    if m.phase is Phase.MORPHING_OUT:
        _require(s >= m.morph_s, "deployment non-decreasing while MorphingOut")
    elif m.phase is Phase.MORPHING_IN:
        _require(s <= m.morph_s, "deployment non-increasing while MorphingIn")
    else:
        raise RejectedTransition("MorphingOut or MorphingIn", f"mechanism moved in {m.mode.value}/{m.phase.value}")
    return replace(m, guard_context=_ctx(m, morph_s=s))


# ------------------------------------------------------------ command gating

# which table rows may drive the actuators in each (mode, phase)
_ALLOWED_ROWS = {
    (Mode.LAND, Phase.STEADY): {Mode.LAND},
    (Mode.SURFACE, Phase.STEADY): {Mode.SURFACE},
    (Mode.AERIAL, Phase.STEADY): {Mode.AERIAL},
}


def admit_command(machine: ModeMachine, cmd: MotionCommand) -> ActuatorCommand:
    """Allocate ``cmd`` if the machine state allows it, else reject.

    No fan may be driven while the mechanism is morphing.
    """
    act = allocate(cmd)
    phase = machine.phase
    spinning = any(u != 0.0 for u in act.throttle)
    if phase in (Phase.MORPHING_OUT, Phase.MORPHING_IN):
        _require(not spinning, "no thrust while morphing", f"{cmd.mode.value}/{cmd.op.value}")
        _require(cmd.op is Op.MORPH or not act.pattern()[3], "Morph row only while morphing")
        return act
    if phase in (Phase.TAKING_OFF, Phase.LANDING):
        _require(cmd.mode is Mode.AERIAL and cmd.op is Op.TAKE_OFF, "TakeOff row while airborne phases",
                 f"{cmd.mode.value}/{cmd.op.value}")
        return act
    if phase is Phase.ROLLING_OVER:
        _require(not spinning, "fans idle while rolling over")
        return act
    allowed = _ALLOWED_ROWS[(machine.mode, phase)]
    _require(cmd.mode in allowed, f"{machine.mode.value} rows only", f"{cmd.mode.value}/{cmd.op.value}")
    if cmd.op is Op.MORPH:
        raise RejectedTransition("Morph row only while morphing", machine.mode.value)
    return act


# ------------------------------------------------------------ graph & plans

def _edges():
    # (mode, phase) -> [(event, (mode, phase))]; successful branches only
    S = Phase
    return {
        (Mode.SURFACE, S.STEADY): [(Event.REQUEST_SURFACE_TO_AERIAL, (Mode.SURFACE, S.MORPHING_OUT))],
        (Mode.SURFACE, S.MORPHING_OUT): [(Event.MORPH_COMPLETE, (Mode.SURFACE, S.TAKING_OFF))],
        (Mode.SURFACE, S.TAKING_OFF): [(Event.LIFTOFF_DETECTED, (Mode.AERIAL, S.STEADY))],
        (Mode.AERIAL, S.STEADY): [(Event.REQUEST_AERIAL_TO_SURFACE, (Mode.AERIAL, S.LANDING))],
        (Mode.AERIAL, S.LANDING): [
            (Event.TOUCHDOWN_DETECTED, (Mode.SURFACE, S.MORPHING_IN)),
            (Event.TOUCHDOWN_DETECTED, (Mode.LAND, S.MORPHING_IN)),
        ],
        (Mode.SURFACE, S.MORPHING_IN): [(Event.MORPH_COMPLETE, (Mode.SURFACE, S.STEADY))],
        (Mode.LAND, S.MORPHING_IN): [(Event.MORPH_COMPLETE, (Mode.LAND, S.STEADY))],
        (Mode.LAND, S.STEADY): [
            (Event.REQUEST_LAND_TO_SURFACE, (Mode.LAND, S.ROLLING_OVER)),
            (Event.REQUEST_LAND_TO_AERIAL, (Mode.LAND, S.MORPHING_OUT)),
        ],
        (Mode.LAND, S.ROLLING_OVER): [(Event.ROLLOVER_COMPLETE, (Mode.SURFACE, S.STEADY))],
        (Mode.LAND, S.MORPHING_OUT): [(Event.MORPH_COMPLETE, (Mode.LAND, S.TAKING_OFF))],
        (Mode.LAND, S.TAKING_OFF): [(Event.LIFTOFF_DETECTED, (Mode.AERIAL, S.STEADY))],
    }


TRANSITION_GRAPH = _edges()


def transition_plan(src: Mode | str, dst: Mode | str) -> list[tuple[Mode, Phase]]:
    """Shortest chain of intermediate (mode, phase) nodes from one steady mode to another."""
    src, dst = Mode(src), Mode(dst)
    if src is dst:
        raise ValueError("source and destination modes must differ")
    start, goal = (src, Phase.STEADY), (dst, Phase.STEADY)
    prev = {start: None}
    queue = deque([start])
    while queue:
        node = queue.popleft()
        if node == goal:
            break
        for _, nxt in TRANSITION_GRAPH.get(node, ()):
            if nxt not in prev:
                prev[nxt] = node
                queue.append(nxt)
    path = []
    node = prev[goal]
    while node != start:
        path.append(node)
        node = prev[node]
    return path[::-1]


def graph_document() -> dict:
    """Adjacency of the transition graph as plain data."""
    nodes = sorted({f"{m.value}/{p.value}" for (m, p) in TRANSITION_GRAPH}
                   | {f"{m.value}/{p.value}" for outs in TRANSITION_GRAPH.values() for _, (m, p) in outs})
    edges = [
        {"from": f"{m.value}/{p.value}", "event": ev.value, "to": f"{m2.value}/{p2.value}"}
        for (m, p), outs in TRANSITION_GRAPH.items()
        for ev, (m2, p2) in outs
    ]
    return {"schema_version": 1, "nodes": nodes, "edges": edges}


def graph_json() -> str:
    return json.dumps(graph_document(), indent=2, sort_keys=True)


def supported_rows() -> list[tuple[Mode, Op]]:
    return list(ACTUATION_TABLE)
