"""Pattern-table allocation and the aerial mixers."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from triphibian.allocation import (
    ACTUATION_TABLE,
    Mode,
    MotionCommand,
    Op,
    aerial_mixer,
    allocate,
    allocation_table,
    max_balanced_thrust,
    tail_trim_angle,
    tri_rotor_mixer,
)
from triphibian.dynamics import aerial_wrench
from triphibian.errors import AllocationError, DomainError, SaturationError, TrimInfeasibleError
from triphibian.model import VehicleParams

NOMINAL = VehicleParams()

# transcribed by hand from the actuation table; not imported from the package
TABLE = {
    ("Land", "Forward"): (0, 1, 1, 0, 0),
    ("Land", "Backward"): (1, 0, 0, 0, 0),
    ("Land", "CounterClockwise"): (1, 0, 0, 0, 0),
    ("Surface", "Forward"): (1, 0, 1, 0, 0),
    ("Surface", "Clockwise"): (0, 0, 1, 0, 0),
    ("Surface", "CounterClockwise"): (1, 0, 0, 0, 0),
    ("Aerial", "Morph"): (0, 0, 0, 1, 0),
    ("Aerial", "TakeOff"): (1, 1, 1, 0, 1),
}


@pytest.mark.parametrize("row", sorted(TABLE))
def test_every_row_pattern(row):
    act = allocate(MotionCommand(*row, magnitude=1.0))
    assert act.pattern() == TABLE[row]


def test_table_has_exactly_eight_rows():
    assert len(ACTUATION_TABLE) == 8
    assert {(m, o) for m, o, _ in allocation_table()} == set(TABLE)


def test_examples():
    a = allocate(MotionCommand("Land", "Forward", 1.0))
    assert a.throttle == (0.0, 1.0, 1.0) and a.transition_servo is None and not a.tail_trim
    a = allocate(MotionCommand("Surface", "Clockwise", 0.7))
    assert a.throttle == (0.0, 0.0, 0.7)
    a = allocate(MotionCommand("Aerial", "Morph", 0.3))
    assert a.throttle == (0.0, 0.0, 0.0) and a.transition_servo == 1.0 and not a.tail_trim
    assert allocate(MotionCommand("Land", "Forward", 0.0)).throttle == (0.0, 0.0, 0.0)


@pytest.mark.parametrize("mode, op", [("Surface", "Backward"), ("Land", "Clockwise"),
                                      ("Land", "TakeOff"), ("Aerial", "Forward")])
def test_unsupported_pair_names_it(mode, op):
    with pytest.raises(AllocationError, match=f"{mode}/{op}"):
        allocate(MotionCommand(mode, op))


def test_bad_magnitude():
    with pytest.raises(DomainError):
        MotionCommand("Land", "Forward", 1.5)
    with pytest.raises(ValueError):
        MotionCommand("Water", "Forward")


@given(row=st.sampled_from(sorted(TABLE)), m=st.floats(0.0, 0.5))
def test_allocation_homogeneous(row, m):
    a1 = allocate(MotionCommand(*row, magnitude=m))
    a2 = allocate(MotionCommand(*row, magnitude=2 * m))
    assert a2.throttle == tuple(2 * u for u in a1.throttle)
    if m > 0:
        assert a1.pattern() == a2.pattern() == TABLE[row]


@given(row=st.sampled_from(sorted(TABLE)), m=st.floats(0.0, 1.0))
def test_driven_fans_equal_magnitude(row, m):
    a = allocate(MotionCommand(*row, magnitude=m))
    for on, u in zip(TABLE[row][:3], a.throttle):
        assert u == (m if on else 0.0)


# ------------------------------------------------------------------ mixer

def _bisect(fn, lo, hi, iters=200):
    flo = fn(lo)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        fm = fn(mid)
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _oracle_delta(total, yaw, k, arm):
    # net yaw of equal fans F = T/(2+cos d): F*arm*sin d - k*F*(2+cos d) = yaw
    return _bisect(lambda d: arm * math.sin(d) - (k + yaw / total) * (2 + math.cos(d)), -math.pi / 2, math.pi / 2)


def test_mixer_zero_command():
    a = aerial_mixer(0.0, 0.0, NOMINAL)
    assert a.throttle == (0.0, 0.0, 0.0) and a.tail_servo == 0.0 and a.tail_trim


def test_mixer_no_reaction_no_tilt():
    p = NOMINAL.with_overrides(drag_to_thrust_ratio=0.0)
    a = aerial_mixer(9.0, 0.0, p)
    assert a.tail_servo == 0.0
    assert np.allclose(a.thrusts(p), [3.0, 3.0, 3.0], atol=1e-12)


def test_mixer_27n_matches_bisection_oracle():
    a = aerial_mixer(27.0, 0.0, NOMINAL)
    expected = _oracle_delta(27.0, 0.0, 0.02, 0.205)
    assert a.tail_servo == pytest.approx(expected, abs=1e-12)
    # coarse sweep agrees too
    grid = np.linspace(0, math.pi / 2, 200001)
    resid = np.abs(0.205 * np.sin(grid) - 0.02 * (2 + np.cos(grid)))
    assert a.tail_servo == pytest.approx(grid[np.argmin(resid)], abs=2e-5)
    assert aerial_wrench(a, 1.0, NOMINAL).torque[2] == pytest.approx(0.0, abs=1e-9)


def test_trim_angle_independent_of_thrust():
    d = tail_trim_angle(NOMINAL)
    for t in (1.0, 5.0, 27.0):
        assert tail_trim_angle(NOMINAL, t) == pytest.approx(d, abs=1e-14)


@settings(max_examples=60, deadline=None)
@given(total=st.floats(0.5, 18.0), yaw=st.floats(-0.3, 0.3), k=st.floats(0.0, 0.08))
def test_mixer_round_trip(total, yaw, k):
    p = NOMINAL.with_overrides(drag_to_thrust_ratio=k)
    try:
        a = aerial_mixer(total, yaw, p)
    except (SaturationError, TrimInfeasibleError):
        assume(False)
    w = aerial_wrench(a, 1.0, p)
    assert w.torque[2] == pytest.approx(yaw, abs=1e-9)
    assert w.force[2] == pytest.approx(total, rel=1e-12)
    assert a.tail_servo == pytest.approx(_oracle_delta(total, yaw, k, p.tail_arm), abs=1e-10)


def test_mixer_saturation():
    with pytest.raises(SaturationError):
        aerial_mixer(3 * NOMINAL.fan_max_thrust + 1.0, 0.0, NOMINAL)
    with pytest.raises(DomainError):
        aerial_mixer(-1.0, 0.0, NOMINAL)


def test_mixer_trim_infeasible_beyond_servo():
    p = NOMINAL.with_overrides(tail_servo_limit=math.radians(5))
    with pytest.raises(TrimInfeasibleError):
        aerial_mixer(10.0, 0.0, p)


@settings(max_examples=40, deadline=None)
@given(total=st.floats(5.0, 20.0), roll=st.floats(-0.2, 0.2), pitch=st.floats(-0.2, 0.2),
       yaw=st.floats(-0.1, 0.1))
def test_tri_rotor_mixer_reproduces_wrench(total, roll, pitch, yaw):
    a = tri_rotor_mixer(total, roll, pitch, yaw, NOMINAL)
    w = aerial_wrench(a, 1.0, NOMINAL)
    assert w.force[2] == pytest.approx(total, rel=1e-9)
    assert np.allclose(w.torque, [roll, pitch, yaw], atol=1e-9)


def test_max_balanced_thrust_is_the_edge():
    top = max_balanced_thrust(NOMINAL)
    assert 2 * NOMINAL.fan_max_thrust < top < 3 * NOMINAL.fan_max_thrust
    tri_rotor_mixer(top, 0.0, 0.0, 0.0, NOMINAL)
    with pytest.raises(SaturationError):
        tri_rotor_mixer(top * (1 + 1e-6), 0.0, 0.0, 0.0, NOMINAL)
    # the nominal vehicle cannot hover
    assert top < NOMINAL.weight


def test_modes_and_ops_are_strings():
    assert Mode("Land") is Mode.LAND
    assert Op("TakeOff") is Op.TAKE_OFF
