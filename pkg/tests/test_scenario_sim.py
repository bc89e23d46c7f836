"""Scenario parsing, validation and the simulation runner."""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import pytest

from triphibian.allocation import Mode
from triphibian.errors import ScenarioError
from triphibian.fsm import Event, GuardUpdate, Phase
from triphibian.scenario import Scenario, TimelineEntry, load_scenario, scenario_from_mapping, validate
from triphibian.sim import COLUMNS, run

SCENARIOS = Path(__file__).parents[1] / "scenarios"


def _rows(text):
    body = "\n".join(line for line in text.splitlines() if not line.startswith("#"))
    return list(csv.DictReader(io.StringIO(body)))


def _header(text):
    return dict(line[2:].split("=", 1) for line in text.splitlines() if line.startswith("# "))


def test_idle_run_is_1000_rest_rows():
    report, text = run(Scenario(duration=1.0, dt=0.001))
    rows = _rows(text)
    assert len(rows) == 1000 == report.rows
    assert list(rows[0]) == list(COLUMNS)
    assert float(rows[-1]["t"]) == pytest.approx(1.0)
    for r in rows:
        assert r["mode"] == "Land" and r["phase"] == "Steady"
        assert all(float(r[k]) == 0.0 for k in ("x", "y", "vx", "vy", "vz", "wx", "wy", "wz"))
    assert report.terminal_mode is Mode.LAND and not report.rejected
    assert report.dwell == {"Land": pytest.approx(1.0), "Surface": 0.0, "Aerial": 0.0}


def test_header_records_assumed_constants_and_seed():
    _, text = run(Scenario(duration=0.01), seed=42)
    h = _header(text)
    assert h["drag_to_thrust_ratio"] == "0.02"
    assert h["stiction_moment"] == "0.05"
    assert h["seed"] == "42"


def test_nine_significant_digits():
    _, text = run(load_scenario(SCENARIOS / "land_forward.toml"))
    last = _rows(text)[-1]
    digits = last["x"].replace(".", "").replace("-", "").lstrip("0")
    assert len(digits) <= 9
    assert float(last["x"]) > 0


def test_decreasing_time_names_index():
    sc = Scenario(timeline=(
        TimelineEntry(0.5, GuardUpdate(at_water_edge=True)),
        TimelineEntry(0.2, Event.REQUEST_LAND_TO_SURFACE),
    ))
    errors = validate(sc)
    assert len(errors) == 1
    assert "timeline[1]" in errors[0]


@pytest.mark.parametrize("kw, needle", [
    ({"dt": 0.0}, "dt"),
    ({"dt": 0.02}, "dt"),
    ({"duration": -1.0}, "duration"),
    ({"integrator": "euler"}, "integrator"),
    ({"format": "xml"}, "format"),
    ({"duration": 0.1, "timeline": (TimelineEntry(0.5, Event.MORPH_COMPLETE),)}, "last timeline"),
    ({"params_ref": "missing.toml"}, "parameters"),
])
def test_validation_errors(kw, needle):
    errors = validate(Scenario(**kw))
    assert any(needle in e for e in errors), errors
    with pytest.raises(ScenarioError):
        run(Scenario(**kw))


def test_structural_errors():
    with pytest.raises(ScenarioError) as err:
        scenario_from_mapping({"schema_version": 2, "timeline": [{"t": 0, "event": "Jump"}],
                               "params_override": {"wings": 2}})
    msg = "\n".join(err.value.errors)
    assert "schema_version" in msg and "timeline[0]" in msg and "wings" in msg


@pytest.mark.parametrize("path", sorted(SCENARIOS.glob("*.toml")), ids=lambda p: p.stem)
def test_shipped_scenarios_validate(path):
    assert validate(load_scenario(path)) == []


def test_concept_mode_sequence():
    report, _ = run(load_scenario(SCENARIOS / "concept_mission.toml"))
    assert report.mode_sequence == [
        "Land/Steady", "Land/RollingOver", "Surface/Steady", "Surface/MorphingOut",
        "Surface/TakingOff", "Aerial/Steady",
    ]
    assert (report.terminal_mode, report.terminal_phase) == (Mode.AERIAL, Phase.STEADY)
    assert report.rejected == []
    assert report.terminal_state.position[2] > 1.0
    assert report.morph_s == 1.0


def test_land_forward_matches_closed_form():
    report, _ = run(load_scenario(SCENARIOS / "land_forward.toml"))
    omega = 2 * 0.950 * 9.81 * 0.205 / (0.5 * 3.88 * 0.205 ** 2)
    speed = report.max_speed["Land"]
    assert speed / 0.205 == pytest.approx(omega, rel=1e-6)


def test_rejections_logged_not_raised():
    sc = Scenario(duration=0.01, timeline=(TimelineEntry(0.0, Event.REQUEST_LAND_TO_SURFACE),))
    report, _ = run(sc)
    assert len(report.rejected) == 1
    assert report.rejected[0].guard == "at_water_edge"
    assert report.terminal_phase is Phase.STEADY


def test_jsonl_output(tmp_path):
    out = tmp_path / "t.jsonl"
    report, text = run(Scenario(duration=0.005, format="jsonl"), telemetry_path=out)
    lines = out.read_text().splitlines()
    assert out.read_text() == text
    assert "header" in json.loads(lines[0])
    rec = json.loads(lines[-1])
    assert set(rec) == set(COLUMNS) and rec["mode"] == "Land"
    assert len(lines) == 1 + report.rows


def test_report_serialises():
    report, _ = run(Scenario(duration=0.01))
    doc = json.loads(json.dumps(report.to_dict()))
    assert doc["terminal"]["mode"] == "Land"
    assert doc["rows"] == 10
