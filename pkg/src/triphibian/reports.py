"""Text reports behind the CLI: hover trim, allocation table, morph sweep."""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np

from .allocation import ACTUATION_TABLE, tail_trim_angle
from .model import VehicleParams
from .morph import handedness, pose_curve

INFEASIBLE_FLAG = "hover infeasible at nominal parameters"


@dataclass(frozen=True)
class TrimReport:
    weight: float                  # N
    per_fan_required: float        # N, weight shared equally by three vertical fans
    per_fan_required_tilted: float  # N, same with the tail fan tilted for yaw balance
    fan_max_thrust: float          # N
    thrust_to_weight: float
    tail_tilt: float               # rad
    feasible: bool

    @property
    def flag(self) -> str:
        return "hover feasible" if self.feasible else INFEASIBLE_FLAG

    def render(self) -> str:
        lines = [
            f"weight                     {self.weight:.2f} N",
            f"per-fan thrust required    {self.per_fan_required:.2f} N",
            f"  with tail tilt {math.degrees(self.tail_tilt):.2f} deg   {self.per_fan_required_tilted:.2f} N",
            f"per-fan thrust available   {self.fan_max_thrust:.2f} N",
            f"thrust-to-weight           {self.thrust_to_weight:.3f}",
            f"status                     {self.flag}",
        ]
        return "\n".join(lines) + "\n"


def hover_trim(params: VehicleParams) -> TrimReport:
    """Thrust budget for hover. Reports infeasibility instead of raising."""
    w = params.weight
    delta = tail_trim_angle(params)
    tilted = w / (2.0 + math.cos(delta))
    return TrimReport(
        weight=w,
        per_fan_required=w / 3.0,
        per_fan_required_tilted=tilted,
        fan_max_thrust=params.fan_max_thrust,
        thrust_to_weight=3.0 * params.fan_max_thrust / w if w > 0 else math.inf,
        tail_tilt=delta,
        feasible=tilted <= params.fan_max_thrust,
    )


def render_allocation_table() -> str:
    out = io.StringIO()
    out.write(f"{'mode':<8} {'operation':<17} P1 P2 P3 S1 T1\n")
    for (mode, op), pat in ACTUATION_TABLE.items():
        fans = [f"f{i + 1}" if on else "0" for i, on in enumerate(pat[:3])]
        cells = fans + [str(pat[3]), str(pat[4])]
        out.write(f"{mode.value:<8} {op.value:<17} " + " ".join(f"{c:<2}" for c in cells).rstrip() + "\n")
    return out.getvalue()


def morph_sweep_csv(params: VehicleParams, steps: int = 100) -> str:
    """Per-fan pose over ``steps + 1`` evenly spaced deployment fractions."""
    s = np.linspace(0.0, 1.0, steps + 1)
    offset, tilt = pose_curve(s, params)
    out = io.StringIO()
    cols = ["s"]
    for i in (1, 2, 3):
        cols += [f"fan{i}_offset", f"fan{i}_tilt", f"fan{i}_hand"]
    out.write(",".join(cols) + "\n")
    for si, r, a in zip(s, offset, tilt):
        row = [f"{si:.9g}"]
        for i in (1, 2, 3):
            row += [f"{r:.9g}", f"{a:.9g}", handedness(i).value]
        out.write(",".join(row) + "\n")
    return out.getvalue()
