"""Shared fixtures data: micro configs and tiny synthetic domains."""

import json
from functools import lru_cache
from pathlib import Path

from rover_planner.fss import ActionDescriptor, TransitionOutcome
from rover_planner.rover import RoverConfig

MICRO_DIR = Path(__file__).resolve().parents[1] / "src" / "rover_planner" / "data" / "micro"

# d_final = 20 cm, t_max = 12 s, quantum 0.5; small enough for the brute-force oracle
MICRO20 = RoverConfig(quantum=0.5, d_final=20.0, t_max=12, d_max=100.0, c_max=100.0, c_min=60.0,
                      t_c=2, chain_limit=1, a_max=3.0, v_max=3.0, v_safemax=3.0)


def micro_paths():
    return sorted(MICRO_DIR.glob("micro_*.json"))


@lru_cache(maxsize=None)
def micro_config(name: str) -> RoverConfig:
    return RoverConfig.load(MICRO_DIR / name)


def micro_meta(name: str) -> dict:
    return json.loads((MICRO_DIR / name).read_text())


class LineDomain:
    """States 0..n on a line. 'step' moves +1 in one tick, 'hop' moves +2 instantly.

    step costs ``cost[state]``; hop is free but only allowed from even states.
    """

    rule_names = ("hop", "step")

    def __init__(self, n=6, goal=None, cost=None, start=0, bad=()):
        self.n = n
        self.goal_state = n if goal is None else goal
        self.cost = cost or {}
        self.start = start
        self.bad = set(bad)

    def initial_state(self):
        return self.start

    def successors(self, state, tick=0):
        out = []
        if state % 2 == 0 and state + 2 <= self.n:
            out.append(TransitionOutcome(state + 2, ActionDescriptor("hop", 0, 0), self.violation(state + 2)))
        if state + 1 <= self.n:
            w = self.cost.get(state, 10)
            out.append(TransitionOutcome(state + 1, ActionDescriptor("step", 1, w), self.violation(state + 1)))
        return out

    def is_goal(self, state):
        return state == self.goal_state

    def violation(self, state):
        return "bad" if state in self.bad else None


class IsolatedDomain:
    rule_names = ("noop",)

    def initial_state(self):
        return 7

    def successors(self, state, tick=0):
        return []

    def is_goal(self, state):
        return False

    def violation(self, state):
        return None


class WideDomain:
    """Grid walk whose descriptor is 96 bits wide (two 48-bit coordinates).

    Used where the rover's 51-bit descriptor is too narrow to show the
    memory benefit of 8-byte signatures.
    """

    rule_names = ("east", "north")
    SHIFT = 48
    BASE = 1 << 40

    def __init__(self, size=6):
        self.size = size
        self.descriptor_bits = 2 * self.SHIFT

    def pack(self, x, y):
        return ((self.BASE + y) << self.SHIFT) | (self.BASE + x)

    def unpack(self, p):
        return (p & ((1 << self.SHIFT) - 1)) - self.BASE, (p >> self.SHIFT) - self.BASE

    def initial_state(self):
        return self.pack(0, 0)

    def successors(self, state, tick=0):
        x, y = self.unpack(state)
        out = []
        if x < self.size:
            out.append(TransitionOutcome(self.pack(x + 1, y), ActionDescriptor("east", 1, 1 + (x * y) % 3)))
        if y < self.size:
            out.append(TransitionOutcome(self.pack(x, y + 1), ActionDescriptor("north", 1, 1 + (x + y) % 2)))
        return out

    def is_goal(self, state):
        return self.unpack(state) == (self.size, self.size)

    def violation(self, state):
        return None


# ~7k visited nodes, a few thousand per tick: enough for 16-bit signatures to collide
COLLIDE = MICRO20.with_overrides(d_final=40.0, t_max=20, chain_limit=3, a_max=4.5, v_max=6.0,
                                 v_safemax=6.0, c_max=1000.0, c_min=900.0)
