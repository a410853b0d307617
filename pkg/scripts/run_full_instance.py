"""Plan, validate, trace and count reachable states for the bundled Table 1 config.

Usage: python scripts/run_full_instance.py [out_dir]
Takes a few minutes per step on one core.
"""

import sys
from pathlib import Path

from rover_planner import cli


def main(out: Path) -> int:
    out.mkdir(parents=True, exist_ok=True)
    status = cli.main(["plan", "--out", str(out), "--name", "table1"])
    if status != cli.EXIT_OK:
        return status
    plan = out / "table1.plan.json"
    cli.main(["validate", str(plan), "--out", str(out), "--name", "table1"])
    cli.main(["trace", str(plan), "--out", str(out), "--name", "table1"])
    # the published plan, for comparison
    cli.main(["validate", str(cli.bundled_table2_path()), "--out", str(out), "--name", "table2"])
    cli.main(["trace", str(cli.bundled_table2_path()), "--out", str(out), "--name", "table2"])
    return cli.main(["stats", "--out", str(out), "--name", "table1"])


if __name__ == "__main__":
    sys.exit(main(Path(sys.argv[1] if len(sys.argv) > 1 else "runs/full")))
