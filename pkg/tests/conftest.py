import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from helpers import micro_config, micro_paths  # noqa: E402
from rover_planner.oracle import brute_force_plan  # noqa: E402
from rover_planner.rover import RoverModel  # noqa: E402
from rover_planner.search import plan_optimal  # noqa: E402


@pytest.fixture(scope="session")
def battery():
    """name -> (config, exact result, compacted result, oracle result), computed once."""
    out = {}
    for path in micro_paths():
        cfg = micro_config(path.name)
        problem = RoverModel(cfg).problem()
        out[path.name] = (cfg, plan_optimal(problem), plan_optimal(problem, compact=True),
                          brute_force_plan(problem))
    return out


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import REPORT
    except ImportError:
        return
    if REPORT:
        terminalreporter.section("acceptance criteria")
        for line in REPORT:
            terminalreporter.write_line(line)
