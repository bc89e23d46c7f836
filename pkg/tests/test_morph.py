"""Deployment kinematics."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from triphibian.errors import DomainError
from triphibian.model import VehicleParams
from triphibian.morph import (
    Handedness,
    advance_deployment,
    fan_pose,
    inscribed_margin,
    morph_mass_check,
    morph_state,
    pose_curve,
    tail_servo_morph_command,
)

P = VehicleParams()
fractions = st.floats(0.0, 1.0)


def test_retracted_endpoint():
    pose = fan_pose(0.0, 2, P)
    assert pose.radial_offset == P.retracted_offset
    assert pose.tilt == 0.0
    assert pose.handedness is Handedness.CCW
    assert pose.radial_offset + P.fan_housing_radius <= 0.205
    assert inscribed_margin(P) >= 0.0


def test_extended_endpoint():
    pose = fan_pose(1.0, 1, P)
    assert pose == fan_pose(1.0, 1, P)
    assert pose.radial_offset == P.extended_offset > P.body_radius
    assert abs(pose.tilt - math.pi / 2) <= 1e-12
    assert pose.handedness is Handedness.CW


def test_split_point_both_branches_agree():
    s = P.morph_split
    # first stage evaluated at its right end, second stage at its left end
    offset_stage1 = P.retracted_offset + (P.extended_offset - P.retracted_offset) * (s / s)
    tilt_stage2 = (math.pi / 2) * (s - s) / (1 - s)
    pose = fan_pose(s, 3, P)
    assert pose.tilt == tilt_stage2 == 0.0
    assert pose.radial_offset == offset_stage1 == P.extended_offset
    left = fan_pose(math.nextafter(s, 0.0), 3, P)
    right = fan_pose(math.nextafter(s, 1.0), 3, P)
    assert abs(left.radial_offset - pose.radial_offset) < 1e-12
    assert abs(right.tilt - pose.tilt) < 1e-12


def test_inscribed_violation_detected():
    p = P.with_overrides(retracted_offset=0.19)
    assert inscribed_margin(p) < 0


@given(a=fractions, b=fractions)
def test_monotone(a, b):
    lo, hi = sorted((a, b))
    r0, t0 = pose_curve(lo, P)
    r1, t1 = pose_curve(hi, P)
    assert r0 <= r1 and t0 <= t1


@given(s=st.floats(0.0, 1.0 - 1e-6))
def test_continuity(s):
    r0, t0 = pose_curve(s, P)
    r1, t1 = pose_curve(s + 1e-6, P)
    assert abs(r1 - r0) < 1e-4 and abs(t1 - t0) < 1e-4


@given(s=fractions)
def test_handedness_constant(s):
    hands = [p.handedness for p in morph_state(s, P).fan_poses]
    assert hands == [Handedness.CW, Handedness.CCW, Handedness.CCW]


@pytest.mark.parametrize("s", [-1e-9, 1.0 + 1e-9, math.nan])
def test_out_of_range(s):
    with pytest.raises(DomainError):
        fan_pose(s, 1, P)


def test_bad_fan_id():
    with pytest.raises(DomainError):
        fan_pose(0.5, 4, P)


def test_vectorised_matches_scalar():
    s = np.linspace(0, 1, 101)
    r, t = pose_curve(s, P)
    for si, ri, ti in zip(s, r, t):
        pose = fan_pose(float(si), 2, P)
        assert (pose.radial_offset, pose.tilt) == (ri, ti)


def test_tail_servo_two_values():
    lo = tail_servo_morph_command("retracted", P)
    hi = tail_servo_morph_command("extended", P)
    assert lo == P.tail_servo_base
    assert hi - lo == 90.0
    p = P.with_overrides(tail_servo_base=1500.0)
    assert tail_servo_morph_command("extended", p) - tail_servo_morph_command("retracted", p) == 90.0


def test_mass_check():
    assert morph_mass_check(P) == pytest.approx(0.121 / 3.88)
    assert round(morph_mass_check(P), 4) == 0.0312
    assert morph_mass_check(P.with_overrides(morph_joint_mass=0.0)) == 0.0
    assert morph_mass_check(P.with_overrides(morph_joint_mass=3.88)) == 1.0
    with pytest.raises(DomainError):
        morph_mass_check(P.with_overrides(mass_total=0.0))


@given(s=fractions, target=st.sampled_from([0.0, 1.0]), dt=st.floats(1e-4, 0.01))
def test_advance_moves_toward_target_without_overshoot(s, target, dt):
    nxt = advance_deployment(s, target, dt, P)
    assert abs(nxt - target) <= abs(s - target)
    assert abs(nxt - s) <= P.morph_rate * dt + 1e-15
    assert 0.0 <= nxt <= 1.0
