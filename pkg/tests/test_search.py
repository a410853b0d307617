import pytest

from rover_planner.fss import PlanningProblem, is_admissible, trajectory_cost
from rover_planner.oracle import naive_reachable_count
from rover_planner.planio import emit_plan
from rover_planner.rover import RoverModel
from rover_planner.search import SearchAborted, plan_optimal, plan_optimal_compacted, reachable

from helpers import COLLIDE, MICRO20, IsolatedDomain, LineDomain, WideDomain, micro_config


def test_isolated_initial_state():
    for h in (0, 3, 50):
        assert reachable(IsolatedDomain(), h).reachable_count == 1


def test_reachable_matches_naive_bfs_micro20():
    m = RoverModel(MICRO20)
    stats = reachable(m, MICRO20.t_max, MICRO20.chain_limit)
    assert stats.reachable_count == naive_reachable_count(m.problem())
    assert stats.expanded_count <= stats.reachable_count


def test_reachable_matches_naive_bfs_battery(battery):
    for name, (cfg, *_rest) in battery.items():
        m = RoverModel(cfg)
        assert reachable(m, cfg.t_max, cfg.chain_limit).reachable_count == naive_reachable_count(m.problem()), name


def test_reachable_horizon_zero_counts_instant_closure():
    m = RoverModel(MICRO20)
    assert reachable(m, 0, 1).reachable_count == naive_reachable_count(m.problem(), 0) == 2


def test_goal_at_start():
    d = LineDomain(goal=0)
    res = plan_optimal(PlanningProblem(d, 4))
    assert res.cost == 0 and len(res.trajectory) == 0


def test_unreachable_goal():
    res = plan_optimal(PlanningProblem(LineDomain(n=6), 2, chain_limit=0))
    assert not res.found and res.cost is None


def test_prefers_cheap_instant_rules():
    d = LineDomain(n=6, cost={0: 5, 1: 5, 2: 50, 3: 5, 4: 5, 5: 5})
    res = plan_optimal(PlanningProblem(d, 6, chain_limit=1))
    assert res.cost == 20 and res.trajectory.action_names == ["step", "step", "hop", "step", "step"]


def test_chain_limit_respected():
    d = LineDomain(n=8, cost={i: 1 for i in range(8)})
    # two hops in a row would need a chain of 2
    res = plan_optimal(PlanningProblem(d, 8, chain_limit=1))
    names = res.trajectory.action_names
    assert all(not (a == b == "hop") for a, b in zip(names, names[1:]))


def test_violations_are_dead_ends():
    d = LineDomain(n=4, bad={2})
    res = plan_optimal(PlanningProblem(d, 4))
    assert not res.found


def test_negative_weight_rejected():
    d = LineDomain(n=2, cost={0: -1})
    with pytest.raises(ValueError):
        plan_optimal(PlanningProblem(d, 2))


def test_memory_cap_aborts_with_partial_stats():
    m = RoverModel(MICRO20)
    with pytest.raises(SearchAborted) as err:
        plan_optimal(m.problem(), memory_cap=2000)
    assert err.value.stats.aborted and err.value.stats.visited_entries > 0
    with pytest.raises(SearchAborted):
        reachable(m, 12, 1, memory_cap=500)


def test_micro20_matches_oracle():
    from rover_planner.oracle import brute_force_plan

    problem = RoverModel(MICRO20).problem()
    res = plan_optimal(problem)
    assert res.cost == brute_force_plan(problem).best_cost
    assert is_admissible(res.trajectory, problem)
    assert trajectory_cost(res.trajectory, problem) == res.cost


def test_battery_matches_oracle(battery):
    assert len(battery) >= 20
    for name, (cfg, exact, _, oracle) in battery.items():
        assert exact.cost == oracle.best_cost, name


def test_battery_compacted_matches(battery):
    for name, (cfg, exact, compact, _) in battery.items():
        assert compact.cost == exact.cost, name
        assert compact.stats.compacted


def test_battery_plans_admissible(battery):
    for name, (cfg, exact, *_rest) in battery.items():
        if exact.found:
            assert is_admissible(exact.trajectory, RoverModel(cfg).problem()), name


def test_sixteen_bit_signatures_lose_optimality():
    """Negative test: truncating signatures to 16 bits merges distinct nodes."""
    problem = RoverModel(COLLIDE).problem()
    exact = plan_optimal(problem)
    assert plan_optimal_compacted(problem).cost == exact.cost
    truncated = plan_optimal_compacted(problem, signature_bits=16)
    assert truncated.cost is None or truncated.cost > exact.cost


def test_compact_entries_smaller_for_wide_descriptors():
    d = WideDomain()
    problem = PlanningProblem(d, 12)
    full, compact = plan_optimal(problem), plan_optimal(problem, compact=True)
    assert full.cost == compact.cost
    assert compact.stats.entry_bytes < full.stats.entry_bytes
    assert compact.stats.peak_memory_estimate < full.stats.peak_memory_estimate


def test_rover_descriptor_already_below_signature_size():
    # the packed rover state fits in 7 bytes, one less than a 64-bit signature
    stats = reachable(RoverModel(MICRO20), 2, 1, compact=False)
    assert (stats.descriptor_bits + 7) // 8 <= 8


def test_deterministic_across_runs_and_workers():
    problem = RoverModel(COLLIDE).problem()
    a = plan_optimal(problem)
    b = plan_optimal(problem)
    c = plan_optimal(problem, workers=2)
    assert a.trajectory == b.trajectory == c.trajectory
    cfg = COLLIDE
    texts = {emit_plan(r.trajectory, cfg).to_json() for r in (a, b, c)}
    assert len(texts) == 1


def test_stats_fields():
    res = plan_optimal(RoverModel(micro_config("micro_101.json")).problem())
    d = res.stats.to_dict()
    for key in ("reachable_count", "expanded_count", "peak_open_size", "peak_memory_estimate", "wall_time"):
        assert key in d
    assert "reachable" in res.stats.summary()
