"""Brute-force reference planner for tiny instances.

Enumerates every legal rule sequence depth-first and keeps the cheapest one
that ends in a goal state. The only pruning is the end of a branch at an
invariant violation, the horizon and the instantaneous-chain bound. Meant to
be read and trusted, not to be fast.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .fss import PlanningProblem

DEFAULT_GUARD = 10**8


class OracleExplosion(RuntimeError):
    def __init__(self, explored: int):
        super().__init__(f"explosion guard hit after {explored} sequences")
        self.explored = explored


@dataclass
class OracleResult:
    best_cost: Optional[int]
    best_sequence: list[str] = field(default_factory=list)
    sequences_explored: int = 0

    @property
    def found(self) -> bool:
        return self.best_cost is not None


def brute_force_plan(problem: PlanningProblem, max_ticks: Optional[int] = None,
                     guard: int = DEFAULT_GUARD) -> OracleResult:
    domain = problem.domain
    max_ticks = problem.horizon if max_ticks is None else max_ticks
    limit = problem.chain_limit
    result = OracleResult(None)
    path: list[str] = []
    cache: dict = {}  # successors are pure, so memoizing them changes nothing

    def successors(state, tick):
        out = cache.get((state, tick))
        if out is None:
            out = cache[(state, tick)] = domain.successors(state, tick)
        return out

    def visit(state, tick, chain, cost):
        result.sequences_explored += 1
        if result.sequences_explored > guard:
            raise OracleExplosion(result.sequences_explored)
        if problem.is_goal(state) and (result.best_cost is None or cost < result.best_cost):
            result.best_cost = cost
            result.best_sequence = list(path)
        for succ, action, violation in successors(state, tick):
            if action.duration == 0:
                if chain >= limit:
                    continue
                next_tick, next_chain = tick, chain + 1
            else:
                if tick + action.duration > max_ticks:
                    continue
                next_tick, next_chain = tick + action.duration, 0
            if violation is not None:
                result.sequences_explored += 1
                continue
            path.append(action.name)
            visit(succ, next_tick, next_chain, cost + action.weight)
            path.pop()

    s0 = domain.initial_state()
    if domain.violation(s0) is None:
        visit(s0, 0, 0, 0)
    return result


def naive_reachable_count(problem: PlanningProblem, horizon: Optional[int] = None) -> int:
    """Distinct states reachable within ``horizon`` ticks, by plain BFS over (state, tick, chain)."""
    domain = problem.domain
    horizon = problem.horizon if horizon is None else horizon
    s0 = domain.initial_state()
    states = {s0}
    seen = {(s0, 0, 0)}
    queue = [(s0, 0, 0)] if domain.violation(s0) is None else []
    while queue:
        state, tick, chain = queue.pop()
        for succ, action, violation in domain.successors(state, tick):
            if action.duration == 0:
                if chain >= problem.chain_limit:
                    continue
                node = (succ, tick, chain + 1)
            else:
                if tick + 1 > horizon:
                    continue
                node = (succ, tick + 1, 0)
            states.add(succ)
            if node in seen or violation is not None:
                continue
            seen.add(node)
            queue.append(node)
    return len(states)
