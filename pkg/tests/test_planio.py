import json

import pytest

from rover_planner.fss import trajectory_from_actions
from rover_planner.planio import (TRACE_COLUMNS, PlanFormatError, TimedPlan, emit_plan, export_trace,
                                  parse_plan_json, parse_plan_text, read_trace, validate_plan)
from rover_planner.rover import ENGINE_EXPLODE, Mode, RoverConfig, RoverModel
from rover_planner.search import plan_optimal

from helpers import COLLIDE, MICRO20


@pytest.fixture(scope="module")
def micro_plan():
    res = plan_optimal(RoverModel(MICRO20).problem())
    return emit_plan(res.trajectory, MICRO20), res


def test_empty_trajectory():
    m = RoverModel(MICRO20)
    plan = emit_plan(trajectory_from_actions(m, []), MICRO20)
    assert plan.rows == [] and plan.duration == 0


def test_first_row_grouping():
    m = RoverModel(RoverConfig())
    traj = trajectory_from_actions(m, ["start", "accelerate", "running", "running"])
    plan = emit_plan(traj, RoverConfig())
    assert plan.rows[0] == (0, ["start", "accelerate", "running"])
    assert plan.to_text().splitlines()[-2] == "0\tStart Accelerate Running"


def test_text_fixpoint(micro_plan):
    plan, _ = micro_plan
    text = plan.to_text()
    again = parse_plan_text(text)
    assert again.rows == plan.rows and again.to_text() == text


def test_json_fixpoint(micro_plan):
    plan, _ = micro_plan
    doc = plan.to_json()
    assert json.loads(doc)["schema_version"] == 1
    assert parse_plan_json(doc).to_json() == doc


def test_metadata_from_replay(micro_plan):
    plan, res = micro_plan
    meta = plan.metadata
    assert meta["total_cost_fixed"] == res.cost
    assert meta["duration_s"] == res.trajectory.duration == plan.duration
    assert meta["energy_consumed_C"] + meta["residual_charge_C"] == pytest.approx(MICRO20.c_max)


def test_optimal_plan_validates(micro_plan):
    plan, res = micro_plan
    report = validate_plan(plan, MICRO20)
    assert report.passed and report.total_cost == res.cost and report.violation is None
    assert report.final_v == 0 and report.final_d == MICRO20.d_final


def test_disabled_rule_reported_not_raised(micro_plan):
    plan, _ = micro_plan
    rows = [(t, list(r)) for t, r in plan.rows]
    rows[0] = (0, ["running"])  # forgot to start
    report = validate_plan(TimedPlan(rows), MICRO20)
    assert not report.passed
    assert "'running'" in report.failure and "T = 0" in report.failure


def test_extra_accelerate_explodes(micro_plan):
    plan, _ = micro_plan
    cfg = MICRO20
    trace = validate_plan(plan, cfg).trace
    peak = max(r.v for r in trace)
    assert peak == cfg.v_safemax
    # first tick that starts at peak speed and would then push forward
    t_mut = next(r.t + 1 for r in trace[:-1]
                 if r.v == peak and trace[r.t + 1].a + cfg.a_step > 0
                 and trace[r.t + 1].mode == "running" and trace[r.t + 1].a + cfg.a_step <= cfg.a_max)
    rows = [(t, list(r)) for t, r in plan.rows]
    rules = rows[t_mut][1]
    rows[t_mut] = (t_mut, rules[:-1] + ["accelerate", rules[-1]])
    mutated = validate_plan(TimedPlan(rows), cfg)
    assert not mutated.passed
    assert mutated.violation == ENGINE_EXPLODE and mutated.violation_t == t_mut


@pytest.mark.parametrize("bad", [
    "T (sec)\tRule\n0\tStart Acelerate Running\n",
    "T (sec)\tRule\n0\tStart Accelerate\n",
    "T (sec)\tRule\n1\tStart Running\n",
    "0\tStart Running\n",
])
def test_corrupted_text_rejected(bad):
    with pytest.raises(PlanFormatError):
        parse_plan_text(bad)


def test_json_schema_checked():
    with pytest.raises(PlanFormatError):
        parse_plan_json('{"schema_version": 99, "rows": []}')
    with pytest.raises(PlanFormatError):
        parse_plan_json("not json")


def test_trailing_instant_rules_rejected():
    m = RoverModel(MICRO20)
    traj = trajectory_from_actions(m, ["start", "running", "accelerate"])
    with pytest.raises(PlanFormatError):
        emit_plan(traj, MICRO20)


def test_trace_columns_and_closure(micro_plan):
    plan, _ = micro_plan
    rows = read_trace(export_trace(plan, MICRO20))
    assert tuple(rows[0].keys()) == TRACE_COLUMNS
    assert len(rows) == plan.duration
    assert float(rows[-1]["cumulative_cost"]) == pytest.approx(plan.metadata["total_cost"], abs=1e-6)
    total = 0.0
    for r in rows:
        total += float(r["step_cost"])
        assert float(r["cumulative_cost"]) == pytest.approx(total, abs=1e-5)
        assert r["d"].count(".") == 1 and len(r["d"].split(".")[1]) == 1
        assert len(r["step_cost"].split(".")[1]) == 6


def test_trace_first_record(micro_plan):
    plan, _ = micro_plan
    m = RoverModel(MICRO20)
    first = read_trace(export_trace(plan, MICRO20))[0]
    assert first["mode"] == "running"
    draw = MICRO20.g_s + max(0.0, float(first["engine_power"]))
    assert float(first["c"]) == pytest.approx(m.charge_after(m.c_max, draw) * MICRO20.quantum)


def test_trace_charge_conservation(micro_plan):
    plan, _ = micro_plan
    m = RoverModel(MICRO20)
    cfg = MICRO20
    rows = read_trace(export_trace(plan, cfg))
    prev = cfg.c_max
    for r in rows:
        draw = cfg.g_s + (cfg.g_c if r["mode"] == "cooling" else max(0.0, float(r["engine_power"])))
        expected = m.charge_after(m.cfg.steps(prev), draw) * cfg.quantum
        assert float(r["c"]) == pytest.approx(expected, abs=1e-9)
        prev = float(r["c"])


def test_trace_cooling_tick_costs_more_than_idle():
    cfg = RoverConfig()
    m = RoverModel(cfg)
    t2 = parse_plan_text(open(_table2()).read())
    records = validate_plan(t2, cfg).trace
    cooling = [r for r in records if r.mode == "cooling"]
    assert cooling
    for r in cooling:
        assert r.engine_power == 0.0
        idle = m.step_cost(m.start_state(), r.t) / 1e6
        assert r.step_cost > idle


def test_config_hash_mismatch_warns(micro_plan):
    plan, _ = micro_plan
    report = validate_plan(plan, MICRO20.with_overrides(c_min=50.0))
    assert report.warnings


def _table2():
    from rover_planner.cli import bundled_table2_path

    return bundled_table2_path()


def test_table2_transcription_shape():
    plan = parse_plan_text(open(_table2()).read())
    assert plan.duration == 43
    assert plan.rows[0][1] == ["start", "accelerate", "running"]
    assert [t for t, r in plan.rows if r[-1] == "cooling"] == list(range(29, 35))
    assert [t for t, r in plan.rows if r[-1] == "braking"] == list(range(25, 29))
