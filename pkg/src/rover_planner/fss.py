"""Finite-state-system abstraction shared by every planning domain.

A domain exposes a packed initial state, a deterministic successor
enumerator and a goal predicate. Costs are fixed-point integers
(``COST_SCALE`` units per cost unit) so that optimality comparisons do not
depend on float summation order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional, Protocol, Sequence

COST_SCALE = 10**6

PackedState = int


def to_fixed(value: float) -> int:
    return int(round(value * COST_SCALE))


def from_fixed(cost: int) -> float:
    return cost / COST_SCALE


class ActionDescriptor(NamedTuple):
    name: str
    duration: int  # 0 (instantaneous) or 1 (one tick)
    weight: int = 0  # fixed-point, >= 0


class TransitionOutcome(NamedTuple):
    successor: PackedState
    action: ActionDescriptor
    invariant_violation: Optional[str] = None

    @property
    def is_error(self) -> bool:
        return self.invariant_violation is not None


class Domain(Protocol):
    """What the search engine needs from a planning domain.

    ``successors`` must be pure: equal inputs give equal, identically ordered
    outputs. ``tick`` is the elapsed durative time when the rule fires and
    only influences the weights of the returned actions.
    """

    rule_names: Sequence[str]

    def initial_state(self) -> PackedState: ...

    def successors(self, state: PackedState, tick: int = 0) -> list[TransitionOutcome]: ...

    def is_goal(self, state: PackedState) -> bool: ...

    def violation(self, state: PackedState) -> Optional[str]: ...


class ReplayError(ValueError):
    """A trajectory step is not produced by the domain transition function."""

    def __init__(self, index: int, message: str):
        super().__init__(f"step {index}: {message}")
        self.index = index


@dataclass(frozen=True)
class PlanningProblem:
    domain: Domain
    horizon: int
    goal: Optional[Callable[[PackedState], bool]] = None
    chain_limit: int = 3

    def __post_init__(self):
        if self.horizon < 0:
            raise ValueError("horizon must be >= 0")
        if self.chain_limit < 0:
            raise ValueError("chain_limit must be >= 0")

    def is_goal(self, state: PackedState) -> bool:
        if self.goal is not None:
            return self.goal(state)
        return self.domain.is_goal(state)


@dataclass(frozen=True)
class Trajectory:
    """Alternating states and actions; ``steps[i] = (s_i, a_i)``.

    ``start_tick`` is the elapsed time at ``steps[0]``; it is non-zero only
    for suffixes cut out of a longer trajectory.
    """

    steps: tuple[tuple[PackedState, ActionDescriptor], ...]
    final_state: PackedState
    start_tick: int = 0

    def __len__(self) -> int:
        return len(self.steps)

    @property
    def initial_state(self) -> PackedState:
        return self.steps[0][0] if self.steps else self.final_state

    @property
    def duration(self) -> int:
        return sum(a.duration for _, a in self.steps)

    @property
    def action_names(self) -> list[str]:
        return [a.name for _, a in self.steps]

    def states(self) -> list[PackedState]:
        return [s for s, _ in self.steps] + [self.final_state]

    def concat(self, other: "Trajectory") -> "Trajectory":
        if other.initial_state != self.final_state:
            raise ValueError("trajectories do not meet")
        if other.start_tick != self.start_tick + self.duration:
            raise ValueError("second trajectory starts at the wrong tick")
        return Trajectory(self.steps + other.steps, other.final_state, self.start_tick)

    def split(self, k: int) -> tuple["Trajectory", "Trajectory"]:
        head = self.steps[:k]
        mid = self.steps[k][0] if k < len(self.steps) else self.final_state
        first = Trajectory(head, mid, self.start_tick)
        second = Trajectory(self.steps[k:], self.final_state, self.start_tick + first.duration)
        return first, second


def trajectory_from_actions(domain: Domain, names: Sequence[str], start: Optional[PackedState] = None,
                            start_tick: int = 0) -> Trajectory:
    """Replay rule names from ``start`` (default: the initial state)."""
    state = domain.initial_state() if start is None else start
    tick = start_tick
    steps = []
    for i, name in enumerate(names):
        outcome = _find(domain, state, tick, name)
        if outcome is None:
            raise ReplayError(i, f"rule {name!r} is not enabled at tick {tick}")
        steps.append((state, outcome.action))
        state = outcome.successor
        tick += outcome.action.duration
    return Trajectory(tuple(steps), state, start_tick)


def _find(domain: Domain, state: PackedState, tick: int, name: str) -> Optional[TransitionOutcome]:
    for outcome in domain.successors(state, tick):
        if outcome.action.name == name:
            return outcome
    return None


def replay(traj: Trajectory, domain: Domain) -> list[TransitionOutcome]:
    """Re-run every step, returning the outcomes; raises ReplayError on the first mismatch."""
    outcomes = []
    tick = traj.start_tick
    states = traj.states()
    for i, (state, action) in enumerate(traj.steps):
        outcome = _find(domain, state, tick, action.name)
        if outcome is None:
            raise ReplayError(i, f"rule {action.name!r} is not enabled at tick {tick}")
        if outcome.successor != states[i + 1]:
            raise ReplayError(i, f"rule {action.name!r} leads to a different state than recorded")
        outcomes.append(outcome)
        tick += outcome.action.duration
    return outcomes


def trajectory_cost(traj: Trajectory, problem: PlanningProblem) -> int:
    return sum(o.action.weight for o in replay(traj, problem.domain))


@dataclass(frozen=True)
class Admissibility:
    ok: bool
    reason: Optional[str] = None
    index: Optional[int] = None

    def __bool__(self) -> bool:
        return self.ok


def is_admissible(traj: Trajectory, problem: PlanningProblem) -> Admissibility:
    domain = problem.domain
    if traj.start_tick != 0 or traj.initial_state != domain.initial_state():
        return Admissibility(False, "not-initial")
    try:
        outcomes = replay(traj, domain)
    except ReplayError as exc:
        return Admissibility(False, "not-replayable", exc.index)
    for i, outcome in enumerate(outcomes):
        if outcome.is_error:
            return Admissibility(False, outcome.invariant_violation, i)
    if domain.violation(traj.initial_state) is not None:
        return Admissibility(False, domain.violation(traj.initial_state), 0)
    if traj.duration > problem.horizon:
        return Admissibility(False, "horizon-exceeded")
    if not problem.is_goal(traj.final_state):
        return Admissibility(False, "goal-not-reached")
    return Admissibility(True)
