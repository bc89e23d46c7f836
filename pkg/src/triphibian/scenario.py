"""Scenario documents: parameters, a timed script and output settings.

A scenario is a TOML file::

    schema_version = 1
    initial_mode = "Land"
    duration = 2.0          # s
    dt = 0.001              # s
    integrator = "rk4"      # or "semi_implicit_euler"
    params = "default"      # or a parameter file path, relative to this file

    [params_override]       # optional; VehicleParams field names
    fan_max_thrust = 15.0

    [[timeline]]
    t = 0.0
    command = { mode = "Land", op = "Forward", magnitude = 1.0 }

    [[timeline]]
    t = 1.0
    guards = { at_water_edge = true }

    [[timeline]]
    t = 1.0
    event = "RequestLandToSurface"

    [outputs]
    telemetry = "land.csv"  # relative to the working directory
    format = "csv"          # or "jsonl"
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

from .allocation import Mode, MotionCommand
from .dynamics import MAX_DT, Method
from .errors import DomainError, ScenarioError
from .fsm import Event, GuardUpdate
from .model import PARAM_FIELDS, VehicleParams, load_params, tomllib

SCHEMA_VERSION = 1
FORMATS = ("csv", "jsonl")

Entry = Union[MotionCommand, Event, GuardUpdate]


@dataclass(frozen=True)
class TimelineEntry:
    t: float
    entry: Entry


@dataclass(frozen=True)
class Scenario:
    timeline: tuple[TimelineEntry, ...] = ()
    duration: float = 1.0
    dt: float = 0.001
    integrator: str = "rk4"
    initial_mode: Mode = Mode.LAND
    params_ref: str = "default"
    params_override: dict = field(default_factory=dict)
    telemetry: str | None = None
    format: str = "csv"
    name: str = "scenario"
    base_dir: Path = Path(".")
    strict: bool = False
    schema_version: int = SCHEMA_VERSION

    def load_params(self) -> VehicleParams:
        if self.params_ref in ("", "default"):
            params = load_params()
        else:
            p = Path(self.params_ref)
            params = load_params(p if p.is_absolute() else self.base_dir / p)
        return params.with_overrides(**self.params_override) if self.params_override else params

    @property
    def n_steps(self) -> int:
        return int(round(self.duration / self.dt))


def _parse_entry(i: int, raw: dict, errors: list[str]) -> TimelineEntry | None:
    if not isinstance(raw, dict):
        errors.append(f"timeline[{i}]: expected a table")
        return None
    t = raw.get("t")
    if not isinstance(t, (int, float)) or isinstance(t, bool) or not math.isfinite(t):
        errors.append(f"timeline[{i}]: missing or non-numeric time 't'")
        return None
    kinds = [k for k in ("command", "event", "guards") if k in raw]
    extra = set(raw) - {"t", "command", "event", "guards"}
    if len(kinds) != 1 or extra:
        errors.append(f"timeline[{i}]: needs exactly one of command/event/guards")
        return None
    kind = kinds[0]
    try:
        if kind == "command":
            c = raw["command"]
            entry = MotionCommand(c["mode"], c["op"], float(c.get("magnitude", 1.0)))
        elif kind == "event":
            entry = Event(raw["event"])
        else:
            g = raw["guards"]
            unknown = set(g) - {"at_water_edge", "airborne", "on_ground"}
            if unknown:
                raise ValueError(f"unknown guard flags {sorted(unknown)}")
            entry = GuardUpdate(**{k: bool(v) for k, v in g.items()})
    except (KeyError, TypeError, ValueError) as exc:
        errors.append(f"timeline[{i}]: bad {kind}: {exc}")
        return None
    return TimelineEntry(float(t), entry)


def scenario_from_mapping(doc: dict, base_dir: Path | str = ".", name: str = "scenario") -> Scenario:
    """Build a scenario; structural problems raise :class:`ScenarioError`."""
    errors: list[str] = []
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        errors.append(f"schema_version must be {SCHEMA_VERSION}, got {version!r}")
    entries = []
    for i, raw in enumerate(doc.get("timeline", [])):
        e = _parse_entry(i, raw, errors)
        if e is not None:
            entries.append(e)
    overrides = dict(doc.get("params_override", {}))
    bad = set(overrides) - PARAM_FIELDS
    if bad:
        errors.append(f"params_override: unknown fields {sorted(bad)}")
    outputs = doc.get("outputs", {})
    try:
        mode = Mode(doc.get("initial_mode", "Land"))
    except ValueError:
        errors.append(f"initial_mode {doc.get('initial_mode')!r} is not a mode")
        mode = Mode.LAND
    if errors:
        raise ScenarioError(errors)
    return Scenario(
        timeline=tuple(entries),
        duration=float(doc.get("duration", 1.0)),
        dt=float(doc.get("dt", 0.001)),
        integrator=str(doc.get("integrator", "rk4")),
        initial_mode=mode,
        params_ref=str(doc.get("params", "default")),
        params_override=overrides,
        telemetry=outputs.get("telemetry"),
        format=str(outputs.get("format", "csv")),
        name=str(doc.get("name", name)),
        base_dir=Path(base_dir),
        strict=bool(doc.get("strict", False)),
        schema_version=version,
    )


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    try:
        doc = tomllib.loads(path.read_text())
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioError([f"{path}: {exc}"]) from None
    return scenario_from_mapping(doc, base_dir=path.parent, name=path.stem)


def validate(scenario: Scenario) -> list[str]:
    """Every semantic problem with ``scenario``; empty when it can run."""
    errors = []
    if not scenario.dt > 0:
        errors.append(f"dt must be positive, got {scenario.dt}")
    elif scenario.dt > MAX_DT:
        errors.append(f"dt must not exceed {MAX_DT} s, got {scenario.dt}")
    if not scenario.duration >= 0:
        errors.append(f"duration must be non-negative, got {scenario.duration}")
    try:
        Method(scenario.integrator)
    except ValueError:
        errors.append(f"unknown integrator {scenario.integrator!r}")
    if scenario.format not in FORMATS:
        errors.append(f"unknown telemetry format {scenario.format!r}")
    prev = -math.inf
    for i, e in enumerate(scenario.timeline):
        if e.t < 0:
            errors.append(f"timeline[{i}]: negative time {e.t}")
        if e.t < prev:
            errors.append(f"timeline[{i}]: time {e.t} is earlier than the previous entry ({prev})")
        prev = max(prev, e.t)
    if scenario.timeline and scenario.duration < scenario.timeline[-1].t:
        errors.append(f"duration {scenario.duration} ends before the last timeline entry")
    try:
        scenario.load_params()
    except (OSError, DomainError, TypeError, ValueError) as exc:
        errors.append(f"parameters: {exc}")
    return errors
