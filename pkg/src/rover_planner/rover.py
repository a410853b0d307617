"""Discretized planetary-rover engine-control domain.

All quantized variables are held as integer multiples of ``cfg.quantum``
(acceleration, speed, distance in cm-based units; charge in coulombs), so
transitions are exact integer arithmetic except for the power model, whose
result is rounded once per tick.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, fields, replace
from decimal import ROUND_HALF_UP, Decimal
from enum import IntEnum
from pathlib import Path
from typing import NamedTuple, Optional

from .fss import ActionDescriptor, PlanningProblem, TransitionOutcome, to_fixed
from .packing import BitLayout, Field

DT = 1  # seconds per durative tick


class ConfigError(ValueError):
    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


class RangeError(ValueError):
    pass


def quantize(x: float, quantum: float) -> float:
    """Nearest multiple of ``quantum``, ties away from zero (decimal-exact)."""
    if quantum <= 0:
        raise ValueError("quantum must be positive")
    q = Decimal(repr(quantum))
    steps = (Decimal(repr(x)) / q).quantize(Decimal(1), rounding=ROUND_HALF_UP)
    return float(steps * q)


def quantize_steps(x: float, quantum: float, lo: Optional[int] = None, hi: Optional[int] = None) -> int:
    """Like :func:`quantize` but returns the multiple count, range-checked."""
    q = Decimal(repr(quantum))
    n = int((Decimal(repr(x)) / q).quantize(Decimal(1), rounding=ROUND_HALF_UP))
    if (lo is not None and n < lo) or (hi is not None and n > hi):
        raise RangeError(f"{x} quantizes to {n} steps, outside [{lo}, {hi}]")
    return n


@dataclass(frozen=True)
class RoverConfig:
    rho: float = 0.1
    g: float = 3.8
    m: float = 71.73
    mu: float = 0.8
    c_max: float = 18000.0
    c_min: float = 17000.0
    v_max: float = 10.0
    v_safemax: float = 10.0
    a_max: float = 5.0
    a_step: float = 1.5
    g_s: float = 25.0
    t_c: int = 6
    d_max: float = 130.0
    g_c: float = 10.0
    d_final: float = 200.0
    t_max: int = 60
    Cd: float = 0.5
    Crr: float = 0.05
    fa: float = 0.5
    V_bus: float = 28.0
    friction_decel: float = 0.0
    quantum: float = 0.1
    # Reconstruction switches, not physical constants.
    integration: str = "exact"
    braking_order: str = "decrement_first"
    chain_limit: int = 3

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        def need(ok, name, msg):
            if not ok:
                raise ConfigError(name, msg)

        for f in fields(self):
            v = getattr(self, f.name)
            if f.name in ("integration", "braking_order"):
                continue
            need(isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v),
                 f.name, f"must be a finite number, got {v!r}")
        need(self.quantum > 0, "quantum", "must be > 0")
        need(0 < self.c_min < self.c_max, "c_min", "need 0 < c_min < c_max")
        need(0 < self.v_safemax <= self.v_max, "v_safemax", "need 0 < v_safemax <= v_max")
        for name in ("t_c", "t_max", "d_max", "d_final", "a_step", "a_max", "V_bus"):
            need(getattr(self, name) > 0, name, "must be > 0")
        for name in ("t_c", "t_max", "chain_limit"):
            need(float(getattr(self, name)).is_integer(), name, "must be an integer")
        need(self.chain_limit >= 0, "chain_limit", "must be >= 0")
        for name in ("rho", "g", "m", "mu", "g_s", "g_c", "Cd", "Crr", "fa", "friction_decel"):
            need(getattr(self, name) >= 0, name, "must be >= 0")
        need(self.a_step <= self.a_max, "a_step", "must not exceed a_max")
        for name in ("c_max", "c_min", "v_max", "v_safemax", "a_max", "a_step", "d_max", "d_final",
                     "friction_decel"):
            ratio = Decimal(repr(float(getattr(self, name)))) / Decimal(repr(float(self.quantum)))
            need(ratio == ratio.to_integral_value(), name, f"must be a multiple of quantum {self.quantum}")
        need(self.integration in ("exact", "euler"), "integration", "must be 'exact' or 'euler'")
        need(self.braking_order in ("decrement_first", "integrate_first"), "braking_order",
             "must be 'decrement_first' or 'integrate_first'")

    def steps(self, x: float) -> int:
        return quantize_steps(x, self.quantum)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "RoverConfig":
        known = {f.name: f for f in fields(cls)}
        kwargs = {}
        for key, value in data.items():
            if key.startswith("_"):
                continue
            if key not in known:
                raise ConfigError(key, "unknown config field")
            kwargs[key] = value
        for name in ("t_c", "t_max", "chain_limit"):
            if name in kwargs and isinstance(kwargs[name], float) and kwargs[name].is_integer():
                kwargs[name] = int(kwargs[name])
        return cls(**kwargs)

    @classmethod
    def load(cls, path) -> "RoverConfig":
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError("<file>", f"invalid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("<file>", "top level must be an object")
        return cls.from_dict(data)

    def with_overrides(self, **kw) -> "RoverConfig":
        return replace(self, **kw)


class Mode(IntEnum):
    stopped = 0
    running = 1
    braking = 2
    cooling = 3
    noenergy = 4
    engineBlown = 5


MOTION_MODES = (Mode.running, Mode.braking)
ERROR_MODES = (Mode.noenergy, Mode.engineBlown)

RULES = ("start", "accelerate", "decelerate", "running", "braking", "cooling")
RULE_DURATION = {"start": 0, "accelerate": 0, "decelerate": 0, "running": 1, "braking": 1, "cooling": 1}

ENGINE_EXPLODE = "engineExplode"
ENERGY_END = "energyEnd"


class RoverState(NamedTuple):
    """Rover state in quantum units: a, v, d, c are integer multiples of the quantum."""

    mode: Mode
    a: int
    v: int
    d: int
    c: int
    tc: int = 0


class TickResult(NamedTuple):
    state: RoverState
    rule: str
    weight: int
    power: float
    violation: Optional[str]


def engine_power(v: float, vdot: float, cfg: RoverConfig) -> float:
    """Mechanical power (J/s) to move at speed ``v`` (m/s) with acceleration ``vdot`` (m/s^2)."""
    return (0.5 * cfg.rho * v * v * cfg.Cd * cfg.fa + cfg.m * cfg.g * (cfg.Crr + vdot / cfg.g)) * v


def _round_div(num: int, den: int) -> int:
    # nearest integer to num/den for num >= 0, den > 0, ties up
    return (2 * num + den) // (2 * den)


def integrate_steps(v: int, d: int, a_net: int, exact: bool = True) -> tuple[int, int]:
    """One-second update of (v, d) in quantum units; speed never goes negative."""
    v_new = v + a_net
    if not exact:
        return max(0, v_new), d + v
    if v_new >= 0:
        return v_new, d + _round_div(2 * v + a_net, 2)
    # comes to rest inside the tick after v^2 / (2|a|)
    return 0, d + _round_div(v * v, -2 * a_net)


class RoverModel:
    """Rule semantics, invariants, goal and cost of the rover domain.

    Implements the domain protocol consumed by the search engine: states are
    exchanged as packed integers.
    """

    rule_names = RULES

    def __init__(self, cfg: RoverConfig):
        self.cfg = cfg
        s = cfg.steps
        self.q = cfg.quantum
        self.a_step = s(cfg.a_step)
        self.a_lim = s(cfg.a_max)
        self.v_safe = s(cfg.v_safemax)
        self.d_max = s(cfg.d_max)
        self.d_final = s(cfg.d_final)
        self.c_max = s(cfg.c_max)
        self.c_min = s(cfg.c_min)
        self.friction = s(cfg.friction_decel)
        self.t_c = int(cfg.t_c)
        self.t_max = int(cfg.t_max)
        self.exact = cfg.integration == "exact"
        self.decrement_first = cfg.braking_order == "decrement_first"
        # overspeed/overshoot states must still be encodable: one tick of slack
        self.v_hi = s(cfg.v_max) + self.a_lim
        self.d_hi = self.d_final + s(cfg.v_max) + self.a_lim
        self.layout = BitLayout([
            Field("mode", 0, len(Mode) - 1),
            Field("a", -self.a_lim, self.a_lim),
            Field("v", 0, self.v_hi),
            Field("d", 0, self.d_hi),
            Field("c", 0, self.c_max),
            Field("tc", 0, self.t_c),
        ])
        self._charge_per_joule = 1.0 / (cfg.V_bus * self.q)
        self._instant = {r: ActionDescriptor(r, 0, 0) for r in ("start", "accelerate", "decelerate")}

    # -- encoding --------------------------------------------------------
    def pack(self, s: RoverState) -> int:
        return self.layout.pack(s)

    def unpack(self, p: int) -> RoverState:
        m, a, v, d, c, tc = self.layout.unpack(p)
        return RoverState(Mode(m), a, v, d, c, tc)

    def start_state(self) -> RoverState:
        return RoverState(Mode.stopped, 0, 0, 0, self.c_max, 0)

    def initial_state(self) -> int:
        return self.pack(self.start_state())

    def state(self, mode=Mode.running, a=0.0, v=0.0, d=0.0, c=None, tc=0) -> RoverState:
        """Build a state from physical values."""
        s = self.cfg.steps
        return RoverState(Mode(mode), s(a), s(v), s(d), self.c_max if c is None else s(c), tc)

    def physical(self, s: RoverState) -> dict:
        q = self.q
        return {"mode": s.mode.name, "a": s.a * q, "v": s.v * q, "d": s.d * q, "c": s.c * q, "tc": s.tc}

    # -- model pieces ----------------------------------------------------
    def power(self, s: RoverState) -> float:
        """Engine power for the state's speed and net acceleration (SI)."""
        q = self.q / 100.0
        return engine_power(s.v * q, (s.a - self.friction) * q, self.cfg)

    def charge_after(self, c: int, draw: float) -> int:
        left = c - draw * self._charge_per_joule
        return max(0, math.floor(left + 0.5))

    def step_cost(self, s: RoverState, i: int) -> int:
        cfg = self.cfg
        if not 0 <= i < self.t_max:
            raise ValueError(f"tick {i} outside [0, {self.t_max})")
        if s.mode in ERROR_MODES:
            return 0
        den = self.t_max - i
        if s.mode == Mode.stopped:
            return to_fixed(cfg.g_s ** 2 / den)
        if s.mode == Mode.cooling:
            return to_fixed((cfg.g_s + cfg.g_c) ** 2 / den)
        return to_fixed((cfg.g_s + self.power(s)) ** 2 / den)

    def check_invariants(self, s: RoverState) -> Optional[str]:
        if s.mode == Mode.engineBlown or (s.mode in MOTION_MODES and s.v > self.v_safe):
            return ENGINE_EXPLODE
        if s.mode == Mode.noenergy or s.c < self.c_min:
            return ENERGY_END
        return None

    def is_goal_state(self, s: RoverState) -> bool:
        return s.v == 0 and s.d == self.d_final and s.mode not in ERROR_MODES

    def enabled(self, s: RoverState, rule: str) -> bool:
        mode = s.mode
        if rule == "start":
            return mode == Mode.stopped
        if rule == "accelerate":
            return mode == Mode.running and s.a + self.a_step <= self.a_lim
        if rule == "decelerate":
            return mode == Mode.running and s.a - self.a_step >= -self.a_lim
        if rule == "running":
            return mode == Mode.running and s.d <= self.d_final
        if rule == "braking":
            return mode == Mode.braking and s.d <= self.d_final
        if rule == "cooling":
            return mode == Mode.cooling
        raise KeyError(rule)

    def _move(self, s: RoverState, a: int) -> tuple[int, int]:
        return integrate_steps(s.v, s.d, a - self.friction, self.exact)

    def apply_rule(self, s: RoverState, rule: str, tick: int = 0) -> Optional[TickResult]:
        """Fire ``rule`` in ``s`` at elapsed time ``tick``; None when its guard is false."""
        if not self.enabled(s, rule):
            return None
        if rule == "start":
            return TickResult(s._replace(mode=Mode.running), rule, 0, 0.0, None)
        if rule == "accelerate":
            return TickResult(s._replace(a=s.a + self.a_step), rule, 0, 0.0, None)
        if rule == "decelerate":
            return TickResult(s._replace(a=s.a - self.a_step), rule, 0, 0.0, None)

        cfg = self.cfg
        if rule == "running":
            power = self.power(s)
            weight = self.step_cost(s, tick)
            v, d = self._move(s, s.a)
            c = self.charge_after(s.c, cfg.g_s + max(0.0, power))
            mode = s.mode
            if d // self.d_max > s.d // self.d_max:
                mode = Mode.braking
            nxt = RoverState(mode, s.a, v, d, c, 0)
        elif rule == "braking":
            a = s.a - self.a_step if s.a - self.a_step >= -self.a_lim else s.a
            applied = s._replace(a=a) if self.decrement_first else s
            power = self.power(applied)
            weight = self.step_cost(applied, tick)
            v, d = self._move(s, applied.a)
            c = self.charge_after(s.c, cfg.g_s + max(0.0, power))
            if v == 0 and a <= 0:
                nxt = RoverState(Mode.cooling, 0, 0, d, c, 0)
            else:
                nxt = RoverState(Mode.braking, a, v, d, c, 0)
        else:  # cooling
            power = 0.0
            weight = self.step_cost(s, tick)
            c = self.charge_after(s.c, cfg.g_s + cfg.g_c)
            tc = s.tc + 1
            if tc >= self.t_c:
                nxt = RoverState(Mode.running, 0, 0, s.d, c, 0)
            else:
                nxt = RoverState(Mode.cooling, 0, 0, s.d, c, tc)

        violation = self.check_invariants(nxt)
        if violation == ENGINE_EXPLODE:
            nxt = nxt._replace(mode=Mode.engineBlown)
        elif violation == ENERGY_END:
            nxt = nxt._replace(mode=Mode.noenergy)
        return TickResult(nxt, rule, weight, power, violation)

    def step(self, s: RoverState, tick: int = 0) -> list[TickResult]:
        """All enabled rules in rule order; durative ones only while tick < t_max."""
        out = []
        for rule in RULES:
            if tick >= self.t_max and RULE_DURATION[rule]:
                continue
            r = self.apply_rule(s, rule, tick)
            if r is not None:
                out.append(r)
        return out

    # -- domain protocol -------------------------------------------------
    def successors(self, state: int, tick: int = 0) -> list[TransitionOutcome]:
        s = self.unpack(state)
        out = []
        for r in self.step(s, tick):
            action = self._instant.get(r.rule) or ActionDescriptor(r.rule, 1, r.weight)
            out.append(TransitionOutcome(self.pack(r.state), action, r.violation))
        return out

    def is_goal(self, state: int) -> bool:
        return self.is_goal_state(self.unpack(state))

    def violation(self, state: int) -> Optional[str]:
        return self.check_invariants(self.unpack(state))

    def problem(self, horizon: Optional[int] = None) -> PlanningProblem:
        return PlanningProblem(self, self.t_max if horizon is None else horizon,
                               chain_limit=int(self.cfg.chain_limit))

    def table1_space_size(self) -> int:
        """Product of the quantized ranges of a, v, d, c and the six modes.

        Uses the nominal ranges a in [-a_max, a_max], v in [0, v_max],
        d in [0, d_final], c in [0, c_max], without the one-tick encoding slack.
        """
        s = self.cfg.steps
        n_a = 2 * s(self.cfg.a_max) + 1
        n_v = s(self.cfg.v_max) + 1
        return n_a * n_v * (self.d_final + 1) * (self.c_max + 1) * len(Mode)


def integrate_tick(s: RoverState, cfg: RoverConfig) -> tuple[float, float]:
    """Physical-unit wrapper: (v', d') after one tick of running/braking dynamics."""
    if s.mode not in MOTION_MODES:
        raise ValueError("integrate_tick needs a running or braking state")
    fr = cfg.steps(cfg.friction_decel)
    v, d = integrate_steps(s.v, s.d, s.a - fr, cfg.integration == "exact")
    return v * cfg.quantum, d * cfg.quantum


def charge_update(c: float, power_draw: float, cfg: RoverConfig) -> float:
    """Battery charge (C) after drawing ``power_draw`` J/s for one tick at the bus voltage."""
    if power_draw < 0:
        raise ValueError("power_draw must be >= 0")
    return quantize(max(0.0, c - power_draw * DT / cfg.V_bus), cfg.quantum)
