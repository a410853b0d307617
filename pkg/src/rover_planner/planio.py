"""Timed plans: text/JSON serialization, replay validation and per-second traces.

The text form follows the published plan table: one row per second, the
rules fired in that second in firing order, durative rule last.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from dataclasses import dataclass, field
from typing import Optional

from .fss import Trajectory, from_fixed
from .rover import ERROR_MODES, RULE_DURATION, RULES, Mode, RoverConfig, RoverModel, RoverState

SCHEMA_VERSION = 1
TEXT_HEADER = "# rover plan"
TRACE_COLUMNS = ("t", "mode", "a", "v", "d", "c", "engine_power", "step_cost", "cumulative_cost")

_DISPLAY = {r: r.capitalize() for r in RULES}
_LOOKUP = {r.lower(): r for r in RULES}


class PlanFormatError(ValueError):
    pass


def config_hash(cfg: RoverConfig) -> str:
    blob = json.dumps(cfg.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass
class TimedPlan:
    rows: list[tuple[int, list[str]]]
    metadata: dict = field(default_factory=dict)

    @property
    def duration(self) -> int:
        return len(self.rows)

    def rule_sequence(self) -> list[str]:
        return [r for _, rules in self.rows for r in rules]

    # -- text ----------------------------------------------------------
    def to_text(self) -> str:
        lines = [f"{TEXT_HEADER} v{SCHEMA_VERSION}"]
        for key in sorted(self.metadata):
            lines.append(f"# {key}: {_fmt_meta(self.metadata[key])}")
        lines.append("T (sec)\tRule")
        for t, rules in self.rows:
            lines.append(f"{t}\t{' '.join(_DISPLAY[r] for r in rules)}")
        return "\n".join(lines) + "\n"

    # -- json ----------------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "metadata": dict(sorted(self.metadata.items())),
            "rows": [{"t": t, "rules": list(rules)} for t, rules in self.rows],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def _fmt_meta(value) -> str:
    if isinstance(value, float):
        return f"{value:.6f}"
    return str(value)


def _parse_meta(value: str):
    for conv in (int, float):
        try:
            return conv(value)
        except ValueError:
            pass
    return value


def _check_rows(rows: list[tuple[int, list[str]]]) -> None:
    for i, (t, rules) in enumerate(rows):
        if t != i:
            raise PlanFormatError(f"row {i}: expected T = {i}, found {t}")
        if not rules:
            raise PlanFormatError(f"T = {t}: empty row")
        for r in rules:
            if r not in RULE_DURATION:
                raise PlanFormatError(f"T = {t}: unknown rule {r!r}")
        if RULE_DURATION[rules[-1]] != 1 or any(RULE_DURATION[r] for r in rules[:-1]):
            raise PlanFormatError(f"T = {t}: a row needs exactly one durative rule, placed last")


def parse_plan_text(text: str) -> TimedPlan:
    lines = [ln.rstrip() for ln in text.splitlines()]
    metadata = {}
    rows = []
    seen_header = False
    for n, line in enumerate(lines, 1):
        if not line.strip():
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if ":" in body and not body.startswith("rover plan"):
                key, _, value = body.partition(":")
                metadata[key.strip()] = _parse_meta(value.strip())
            continue
        if not seen_header:
            if not line.lower().startswith("t (sec)"):
                raise PlanFormatError(f"line {n}: expected the 'T (sec)' header")
            seen_header = True
            continue
        parts = line.split()
        try:
            t = int(parts[0])
        except ValueError:
            raise PlanFormatError(f"line {n}: bad time index {parts[0]!r}") from None
        names = []
        for word in parts[1:]:
            rule = _LOOKUP.get(word.lower())
            if rule is None:
                raise PlanFormatError(f"line {n}: unknown rule {word!r}")
            names.append(rule)
        rows.append((t, names))
    if not seen_header:
        raise PlanFormatError("missing 'T (sec)' header")
    _check_rows(rows)
    return TimedPlan(rows, metadata)


def parse_plan_json(text: str) -> TimedPlan:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise PlanFormatError(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("schema_version") != SCHEMA_VERSION:
        raise PlanFormatError(f"unsupported plan document (schema_version != {SCHEMA_VERSION})")
    try:
        rows = [(int(r["t"]), [str(x) for x in r["rules"]]) for r in doc["rows"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise PlanFormatError(f"malformed rows: {exc}") from exc
    _check_rows(rows)
    return TimedPlan(rows, dict(doc.get("metadata", {})))


def load_plan(path) -> TimedPlan:
    from pathlib import Path

    text = Path(path).read_text()
    if str(path).endswith(".json"):
        return parse_plan_json(text)
    return parse_plan_text(text)


def rows_from_actions(names: list[str]) -> list[tuple[int, list[str]]]:
    rows = []
    pending: list[str] = []
    for name in names:
        pending.append(name)
        if RULE_DURATION[name]:
            rows.append((len(rows), pending))
            pending = []
    if pending:
        raise PlanFormatError(f"trailing instantaneous rules {pending} after the last tick")
    return rows


@dataclass
class TraceRecord:
    t: int
    mode: str
    a: float
    v: float
    d: float
    c: float
    engine_power: float
    step_cost: float
    cumulative_cost: float


@dataclass
class ValidationReport:
    passed: bool
    goal_reached: bool
    duration: int
    total_cost: int
    final_d: float
    final_v: float
    final_c: float
    residual_ok: bool
    horizon_ok: bool
    violation: Optional[str] = None
    violation_t: Optional[int] = None
    failure: Optional[str] = None
    trace: list[TraceRecord] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def energy_consumed(self) -> float:
        return self._c_max - self.final_c

    _c_max: float = 0.0

    def summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        lines = [
            f"validation       : {status}",
            f"goal reached     : {self.goal_reached}",
            f"duration         : {self.duration} s (horizon ok: {self.horizon_ok})",
            f"final d, v       : {self.final_d:.1f} cm, {self.final_v:.1f} cm/s",
            f"final charge     : {self.final_c:.1f} C (residual ok: {self.residual_ok})",
            f"energy consumed  : {self.energy_consumed:.1f} C",
            f"total cost       : {from_fixed(self.total_cost):.6f}",
        ]
        if self.violation:
            lines.append(f"violation        : {self.violation} at T = {self.violation_t}")
        if self.failure:
            lines.append(f"failure          : {self.failure}")
        lines.extend(f"warning          : {w}" for w in self.warnings)
        return "\n".join(lines)

    def to_dict(self) -> dict:
        return {
            "passed": self.passed, "goal_reached": self.goal_reached, "duration": self.duration,
            "total_cost": self.total_cost, "final_d": self.final_d, "final_v": self.final_v,
            "final_c": self.final_c, "energy_consumed": self.energy_consumed,
            "residual_ok": self.residual_ok, "horizon_ok": self.horizon_ok,
            "violation": self.violation, "violation_t": self.violation_t, "failure": self.failure,
            "warnings": self.warnings,
        }


def _simulate(rows, model: RoverModel):
    """Replay rows; returns (final state, trace, total cost, violation, violation_t, failure)."""
    q = model.q
    s = model.start_state()
    trace = []
    total = 0
    for t, rules in rows:
        for rule in rules:
            mode_before = s.mode
            res = model.apply_rule(s, rule, t)
            if res is None:
                return s, trace, total, None, None, f"rule {rule!r} not enabled at T = {t} (mode {s.mode.name})"
            if RULE_DURATION[rule]:
                total += res.weight
                applied_a = s.a
                if rule == "braking" and model.decrement_first and s.a - model.a_step >= -model.a_lim:
                    applied_a = s.a - model.a_step
                trace.append(TraceRecord(
                    t=t, mode=mode_before.name, a=applied_a * q, v=res.state.v * q, d=res.state.d * q,
                    c=res.state.c * q, engine_power=res.power, step_cost=from_fixed(res.weight),
                    cumulative_cost=from_fixed(total)))
            s = res.state
            if res.violation:
                return s, trace, total, res.violation, t, None
    return s, trace, total, None, None, None


def validate_plan(plan: TimedPlan, cfg: RoverConfig) -> ValidationReport:
    model = RoverModel(cfg)
    q = model.q
    try:
        _check_rows(plan.rows)
        s, trace, total, violation, vt, failure = _simulate(plan.rows, model)
    except PlanFormatError as exc:
        s, trace, total, violation, vt, failure = model.start_state(), [], 0, None, None, str(exc)
    goal = failure is None and violation is None and model.is_goal_state(s)
    residual_ok = s.c >= model.c_min and s.mode not in ERROR_MODES
    horizon_ok = plan.duration <= model.t_max
    report = ValidationReport(
        passed=goal and residual_ok and horizon_ok and violation is None and failure is None,
        goal_reached=goal, duration=plan.duration, total_cost=total,
        final_d=s.d * q, final_v=s.v * q, final_c=s.c * q,
        residual_ok=residual_ok, horizon_ok=horizon_ok,
        violation=violation, violation_t=vt, failure=failure, trace=trace,
    )
    report._c_max = model.c_max * q
    expected = plan.metadata.get("config_hash")
    if expected is not None and expected != config_hash(cfg):
        report.warnings.append(f"plan was produced for config {expected}, validating against {config_hash(cfg)}")
    return report


def emit_plan(traj: Trajectory, cfg: RoverConfig) -> TimedPlan:
    """Group a trajectory into per-second rows and attach replay-derived metadata."""
    rows = rows_from_actions(traj.action_names)
    model = RoverModel(cfg)
    s, _, total, violation, _, failure = _simulate(rows, model)
    if failure is not None or violation is not None:
        raise PlanFormatError(f"trajectory does not replay: {failure or violation}")
    if rows and model.pack(s) != traj.final_state:
        raise PlanFormatError("replayed final state differs from the trajectory's")
    q = model.q
    metadata = {
        "config_hash": config_hash(cfg),
        "total_cost": from_fixed(total),
        "total_cost_fixed": total,
        "duration_s": len(rows),
        "energy_consumed_C": round((model.c_max - s.c) * q, 6),
        "residual_charge_C": round(s.c * q, 6),
    }
    return TimedPlan(rows, metadata)


def export_trace(plan: TimedPlan, cfg: RoverConfig) -> str:
    report = validate_plan(plan, cfg)
    if report.failure is not None:
        raise PlanFormatError(report.failure)
    return trace_csv(report.trace)


def trace_csv(records: list[TraceRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRACE_COLUMNS)
    for r in records:
        w.writerow([r.t, r.mode, f"{r.a:.1f}", f"{r.v:.1f}", f"{r.d:.1f}", f"{r.c:.1f}",
                    f"{r.engine_power:.6f}", f"{r.step_cost:.6f}", f"{r.cumulative_cost:.6f}"])
    return buf.getvalue()


def read_trace(text: str) -> list[dict]:
    return list(csv.DictReader(io.StringIO(text)))


__all__ = [
    "TimedPlan", "TraceRecord", "ValidationReport", "PlanFormatError", "emit_plan", "validate_plan",
    "export_trace", "parse_plan_text", "parse_plan_json", "load_plan", "config_hash", "trace_csv",
    "read_trace", "rows_from_actions", "Mode", "RoverState",
]
