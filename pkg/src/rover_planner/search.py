"""Exhaustive reachability and cost-optimal planning over a domain's implicit graph.

Search nodes are (state, elapsed ticks, zero-duration rules fired since the
last durative rule). Every durative rule advances the tick by one and
instantaneous rules raise the chain counter, so the node graph is acyclic
and layered by tick. Uniform-cost search on it reduces to relaxing nodes in
(tick, chain) order, which is what ``plan_optimal`` does; each layer can be
expanded by several worker processes and merged in a fixed order, so the
result does not depend on the worker count.
"""

from __future__ import annotations

import json
import os
import resource
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional

from .fss import Domain, PackedState, PlanningProblem, Trajectory, trajectory_from_actions
from .packing import signature

DEFAULT_MEMORY_CAP = 2 * 1024**3
BOOKKEEPING_BYTES = 16  # cost + parent reference + rule index per visited entry
SIGNATURE_BYTES = 8
PARALLEL_MIN_BATCH = 4096


class SearchAborted(RuntimeError):
    """Visited-set memory budget exceeded; ``stats`` holds the partial counts."""

    def __init__(self, stats: "SearchStats"):
        super().__init__(f"memory budget of {stats.memory_cap} bytes exceeded "
                         f"after {stats.reachable_count} states")
        self.stats = stats


@dataclass
class SearchStats:
    reachable_count: int = 0
    expanded_count: int = 0
    peak_open_size: int = 0
    peak_memory_estimate: int = 0
    wall_time: float = 0.0
    visited_entries: int = 0
    entry_bytes: int = 0
    descriptor_bits: int = 0
    horizon: int = 0
    compacted: bool = False
    signature_bits: int = 64
    workers: int = 1
    memory_cap: int = DEFAULT_MEMORY_CAP
    aborted: bool = False
    peak_rss_bytes: int = 0
    error_states: int = 0
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def summary(self) -> str:
        lines = [
            f"reachable states : {self.reachable_count:,}",
            f"expanded         : {self.expanded_count:,}",
            f"error states     : {self.error_states:,}",
            f"peak open layer  : {self.peak_open_size:,}",
            f"visited entries  : {self.visited_entries:,} x {self.entry_bytes} B"
            f"{' (hash compaction)' if self.compacted else ''}",
            f"visited memory   : {self.peak_memory_estimate / 2**20:.1f} MiB (estimate)",
            f"peak RSS         : {self.peak_rss_bytes / 2**20:.1f} MiB",
            f"wall time        : {self.wall_time:.1f} s",
        ]
        for k, v in self.extra.items():
            lines.append(f"{k:<17}: {v}")
        if self.aborted:
            lines.append("ABORTED: memory budget exceeded")
        return "\n".join(lines)


@dataclass
class SearchResult:
    trajectory: Optional[Trajectory]
    cost: Optional[int]
    stats: SearchStats

    @property
    def found(self) -> bool:
        return self.trajectory is not None


def _descriptor_bits(domain: Domain) -> int:
    layout = getattr(domain, "layout", None)
    if layout is not None:
        return layout.width
    if getattr(domain, "descriptor_bits", None):
        return domain.descriptor_bits
    return max(1, domain.initial_state().bit_length())


def _peak_rss() -> int:
    return resource.getrusage(resource.RUSAGE_SELF).ru_maxrss * 1024


class _Expander:
    """Maps successor generation over a batch of states, optionally in a process pool."""

    def __init__(self, domain: Domain, workers: int):
        self.domain = domain
        self.workers = max(1, int(workers))
        self.pool = None
        if self.workers > 1:
            self.pool = ProcessPoolExecutor(self.workers, initializer=_init_worker, initargs=(domain,))

    def __call__(self, states: list[PackedState], tick: int) -> list:
        if self.pool is None or len(states) < PARALLEL_MIN_BATCH:
            succ = self.domain.successors
            return [succ(s, tick) for s in states]
        size = -(-len(states) // (self.workers * 4))
        chunks = [states[i:i + size] for i in range(0, len(states), size)]
        out = []
        for part in self.pool.map(_expand_chunk, chunks, [tick] * len(chunks)):
            out.extend(part)
        return out

    def close(self):
        if self.pool is not None:
            self.pool.shutdown()
            self.pool = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


_worker_domain = None


def _init_worker(domain):
    global _worker_domain
    _worker_domain = domain


def _expand_chunk(states, tick):
    succ = _worker_domain.successors
    return [succ(s, tick) for s in states]


def reachable(domain: Domain, horizon: int, chain_limit: int = 3, *, compact: bool = False,
              signature_bits: int = 64, memory_cap: int = DEFAULT_MEMORY_CAP, workers: int = 1) -> SearchStats:
    """Breadth-first enumeration of the states reachable within ``horizon`` ticks.

    A state reached at tick t with k instantaneous rules already chained is
    dominated by an earlier visit with chain count <= k, so the visited set
    only remembers the smallest chain count seen per state. Error states are
    counted but not expanded.
    """
    if horizon < 0:
        raise ValueError("horizon must be >= 0")
    t0 = time.perf_counter()
    bits = _descriptor_bits(domain)
    entry = (SIGNATURE_BYTES if compact else (bits + 7) // 8) + 1
    stats = SearchStats(horizon=horizon, compacted=compact, signature_bits=signature_bits,
                        descriptor_bits=bits, entry_bytes=entry, workers=workers, memory_cap=memory_cap)

    def key(s):
        return signature(s, signature_bits) if compact else s

    s0 = domain.initial_state()
    seen = {key(s0): 0}
    frontier = [s0] if domain.violation(s0) is None else []
    if not frontier:
        stats.error_states = 1
    with _Expander(domain, workers) as expand:
        for tick in range(horizon + 1):
            level = frontier
            frontier = []
            k = 0
            while level:
                stats.peak_open_size = max(stats.peak_open_size, len(level))
                stats.expanded_count += len(level)
                nxt_level = []
                for outcomes in expand(level, tick):
                    for succ, action, violation in outcomes:
                        if action.duration == 0:
                            if k >= chain_limit:
                                continue
                            child_k = k + 1
                        elif tick < horizon:
                            child_k = 0
                        else:
                            continue
                        sk = key(succ)
                        prev = seen.get(sk)
                        if prev is not None and prev <= child_k:
                            continue
                        if prev is None and violation is not None:
                            stats.error_states += 1
                        seen[sk] = child_k
                        if violation is not None:
                            continue
                        (nxt_level if child_k else frontier).append(succ)
                level = nxt_level
                k += 1
            stats.visited_entries = len(seen)
            stats.peak_memory_estimate = max(stats.peak_memory_estimate, len(seen) * entry)
            if stats.peak_memory_estimate > memory_cap:
                stats.aborted = True
                break
            if not frontier:
                break
    stats.reachable_count = len(seen)
    stats.visited_entries = len(seen)
    stats.wall_time = time.perf_counter() - t0
    stats.peak_rss_bytes = _peak_rss()
    if stats.aborted:
        raise SearchAborted(stats)
    return stats


def plan_optimal(problem: PlanningProblem, *, compact: bool = False, signature_bits: int = 64,
                 memory_cap: int = DEFAULT_MEMORY_CAP, workers: int = 1) -> SearchResult:
    """Minimum-cost admissible trajectory, or ``trajectory=None`` when none exists.

    Among equal-cost plans the first one generated wins: earlier tick, then
    fewer chained rules, then parent order, then rule order of the domain.
    Only nodes at the start of a tick are kept in the visited set; each
    remembers its parent and the rules fired in between, packed into one
    integer. With ``compact=True`` those nodes are identified by signature
    only, and a collision can silently drop a node.
    """
    t0 = time.perf_counter()
    domain = problem.domain
    horizon = problem.horizon
    chain_limit = problem.chain_limit
    is_goal = problem.is_goal
    rule_index = {name: i + 1 for i, name in enumerate(domain.rule_names)}
    base = len(rule_index) + 1
    bits = _descriptor_bits(domain)
    entry = (SIGNATURE_BYTES if compact else (bits + 7) // 8) + BOOKKEEPING_BYTES
    stats = SearchStats(horizon=horizon, compacted=compact, signature_bits=signature_bits,
                        descriptor_bits=bits, entry_bytes=entry, workers=workers, memory_cap=memory_cap)

    def key(s):
        return signature(s, signature_bits) if compact else s

    # visited[t][key] = (cost, parent_key, rules fired since the parent, base-encoded)
    visited: list[dict] = []
    s0 = domain.initial_state()
    best_cost: Optional[int] = None
    best_node = None
    entries = 1
    layer = {key(s0): (0, None, 0)}
    frontier = {key(s0): s0}
    if domain.violation(s0) is not None:
        frontier = {}
        stats.error_states = 1

    with _Expander(domain, workers) as expand:
        for tick in range(horizon + 1):
            visited.append(layer)
            nxt_layer: dict = {}
            nxt_frontier: dict = {}
            # intra-tick chain: level k holds key -> (state, cost, origin key, code)
            level = {nk: (s, layer[nk][0], nk, 0) for nk, s in frontier.items()}
            seen_at: dict = {}
            k = 0
            while level:
                stats.peak_open_size = max(stats.peak_open_size, len(level))
                todo = []
                for nk, (s, cost, origin, code) in level.items():
                    if best_cost is not None and cost >= best_cost:
                        continue
                    prev = seen_at.get(nk)
                    if prev is not None and prev <= cost:
                        continue
                    seen_at[nk] = cost
                    if is_goal(s):
                        best_cost, best_node = cost, (tick, origin, code)
                        continue
                    todo.append((cost, origin, code, s))
                stats.expanded_count += len(todo)
                inst: dict = {}
                results = expand([item[3] for item in todo], tick)
                for (cost, origin, code, _), outcomes in zip(todo, results):
                    for succ, action, violation in outcomes:
                        w = action.weight
                        if w < 0:
                            raise ValueError(f"negative step cost {w} for rule {action.name!r}")
                        c = cost + w
                        if best_cost is not None and c >= best_cost:
                            continue
                        sk = key(succ)
                        step = code * base + rule_index[action.name]
                        if action.duration == 0:
                            if k >= chain_limit:
                                continue
                            old = inst.get(sk)
                            if old is not None and old[1] <= c:
                                continue
                            if violation is not None:
                                stats.error_states += old is None
                                continue
                            inst[sk] = (succ, c, origin, step)
                        elif tick < horizon:
                            old = nxt_layer.get(sk)
                            if old is None:
                                entries += 1
                                stats.error_states += violation is not None
                            elif old[0] <= c:
                                continue
                            nxt_layer[sk] = (c, origin, step)
                            if violation is None:
                                nxt_frontier[sk] = succ
                level = inst
                k += 1
            stats.peak_memory_estimate = max(stats.peak_memory_estimate, entries * entry)
            if entries * entry > memory_cap:
                stats.aborted = True
                break
            layer, frontier = nxt_layer, nxt_frontier
            if not frontier:
                break

    stats.reachable_count = entries
    stats.visited_entries = entries
    stats.wall_time = time.perf_counter() - t0
    stats.peak_rss_bytes = _peak_rss()
    if stats.aborted:
        raise SearchAborted(stats)
    if best_node is None:
        return SearchResult(None, None, stats)
    names = _reconstruct(visited, best_node, domain.rule_names, base)
    traj = trajectory_from_actions(domain, names)
    stats.extra["plan_cost"] = best_cost
    return SearchResult(traj, best_cost, stats)


def _decode(code: int, base: int, rule_names) -> list[str]:
    out = []
    while code:
        code, digit = divmod(code, base)
        out.append(rule_names[digit - 1])
    out.reverse()
    return out


def _reconstruct(visited, node, rule_names, base) -> list[str]:
    tick, origin, code = node
    names = _decode(code, base, rule_names)
    while tick > 0:
        _, origin, code = visited[tick][origin]
        tick -= 1
        names = _decode(code, base, rule_names) + names
    return names


def plan_optimal_compacted(problem: PlanningProblem, *, signature_bits: int = 64, **kw) -> SearchResult:
    return plan_optimal(problem, compact=True, signature_bits=signature_bits, **kw)


def default_workers() -> int:
    return max(1, min(8, os.cpu_count() or 1))
