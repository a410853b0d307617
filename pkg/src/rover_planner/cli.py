"""Command-line front end: plan, validate, stats, trace, oracle.

Config precedence is file < environment < flags. Environment overrides use
``PLANNER_CFG_<field>=value`` (e.g. ``PLANNER_CFG_t_max=30``); flags use
``--set field=value``. ``PLANNER_MEMORY_CAP`` sets the search memory cap.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import os
import sys
from dataclasses import fields
from importlib import resources
from pathlib import Path

from .fss import from_fixed
from .oracle import OracleExplosion, brute_force_plan
from .planio import (PlanFormatError, config_hash, emit_plan, export_trace, load_plan,
                     validate_plan)
from .rover import ConfigError, RoverConfig, RoverModel
from .search import (DEFAULT_MEMORY_CAP, SearchAborted, default_workers, plan_optimal,
                     reachable)

EXIT_OK = 0
EXIT_NO_PLAN = 2
EXIT_INVALID_CONFIG = 3
EXIT_MEMORY_ABORT = 4
EXIT_VALIDATION_FAILURE = 5

REFERENCE_REACHABLE = 939_477
ENV_PREFIX = "PLANNER_CFG_"
MEMORY_ENV = "PLANNER_MEMORY_CAP"

_UNITS = {"": 1, "K": 1024, "M": 1024**2, "G": 1024**3, "T": 1024**4}


def bundled_config_path() -> Path:
    return Path(str(resources.files("rover_planner") / "data" / "table1.json"))


def bundled_table2_path() -> Path:
    return Path(str(resources.files("rover_planner") / "data" / "table2.plan.txt"))


def parse_size(text: str) -> int:
    t = text.strip().upper().removesuffix("B").removesuffix("I")
    unit = t[-1] if t and t[-1] in _UNITS else ""
    number = t[: len(t) - len(unit)]
    try:
        value = float(number) * _UNITS[unit]
    except ValueError:
        raise ValueError(f"bad size {text!r}") from None
    if value <= 0:
        raise ValueError(f"size must be positive: {text!r}")
    return int(value)


def _coerce(name: str, raw: str):
    kinds = {f.name: f.type for f in fields(RoverConfig)}
    if name not in kinds:
        raise ConfigError(name, "unknown config field")
    kind = kinds[name]
    try:
        if kind in ("int", int):
            return int(raw)
        if kind in ("float", float):
            return float(raw)
    except ValueError:
        raise ConfigError(name, f"cannot parse {raw!r}") from None
    return raw


def effective_config(path, sets=(), environ=None) -> tuple[RoverConfig, dict]:
    """Load ``path`` and apply env then flag overrides; returns (config, override sources)."""
    environ = os.environ if environ is None else environ
    cfg = RoverConfig.load(path)
    sources = {}
    env = {k[len(ENV_PREFIX):]: v for k, v in sorted(environ.items()) if k.startswith(ENV_PREFIX)}
    for name, raw in env.items():
        sources[name] = "env"
    flags = {}
    for item in sets:
        name, sep, raw = item.partition("=")
        if not sep:
            raise ConfigError(item, "expected field=value")
        flags[name.strip()] = raw.strip()
        sources[name.strip()] = "flag"
    overrides = {name: _coerce(name, raw) for name, raw in {**env, **flags}.items()}
    if overrides:
        cfg = cfg.with_overrides(**overrides)
    return cfg, sources


def memory_cap(flag, environ=None) -> tuple[int, str]:
    environ = os.environ if environ is None else environ
    if flag is not None:
        return parse_size(flag), "flag"
    if environ.get(MEMORY_ENV):
        return parse_size(environ[MEMORY_ENV]), "env"
    return DEFAULT_MEMORY_CAP, "default"


class Run:
    """Collects what a command did and writes the manifest next to its outputs."""

    def __init__(self, args, command: str):
        self.args = args
        self.command = command
        self.outputs: dict[str, str] = {}
        self.stats = None
        self.cfg = None
        self.sources: dict = {}
        self.extra: dict = {}
        self.out_dir = Path(args.out) if getattr(args, "out", None) else None

    def output(self, kind: str, name: str, text: str) -> Path:
        base = self.out_dir or Path(".")
        base.mkdir(parents=True, exist_ok=True)
        path = base / name
        path.write_text(text)
        self.outputs[kind] = str(path)
        return path

    def finish(self, status: int) -> int:
        flags = {k: v for k, v in vars(self.args).items() if k != "func"}
        manifest = {
            "command": self.command,
            "config_path": str(getattr(self.args, "config", "")),
            "config_hash": config_hash(self.cfg) if self.cfg else None,
            "effective_config": self.cfg.to_dict() if self.cfg else None,
            "override_sources": self.sources,
            "flags": flags,
            "outputs": self.outputs,
            "stats": self.stats.to_dict() if self.stats is not None else None,
            "exit_status": status,
            "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(),
            **self.extra,
        }
        base = self.out_dir or Path(".")
        base.mkdir(parents=True, exist_ok=True)
        path = base / f"{self.args.name}.{self.command}.manifest.json"
        path.write_text(json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n")
        return status


def _load(run: Run) -> int | None:
    try:
        run.cfg, run.sources = effective_config(run.args.config, run.args.set)
        cap, src = memory_cap(getattr(run.args, "memory_cap", None))
    except ConfigError as exc:
        print(f"invalid config: field {exc.field!r}: {exc}", file=sys.stderr)
        return EXIT_INVALID_CONFIG
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return EXIT_INVALID_CONFIG
    except ValueError as exc:
        print(f"invalid memory cap: {exc}", file=sys.stderr)
        return EXIT_INVALID_CONFIG
    run.extra["memory_cap"] = {"bytes": cap, "source": src}
    run.cap = cap
    return None


def cmd_plan(args) -> int:
    run = Run(args, "plan")
    err = _load(run)
    if err is not None:
        return run.finish(err)
    model = RoverModel(run.cfg)
    workers = args.workers if args.workers else 1
    try:
        res = plan_optimal(model.problem(args.horizon), compact=args.compact_hash,
                           signature_bits=args.signature_bits, memory_cap=run.cap, workers=workers)
    except SearchAborted as exc:
        run.stats = exc.stats
        print(f"memory cap exceeded ({run.cap} bytes); partial stats:\n{exc.stats.summary()}", file=sys.stderr)
        return run.finish(EXIT_MEMORY_ABORT)
    run.stats = res.stats
    if not res.found:
        print(f"no plan within {model.problem(args.horizon).horizon} s", file=sys.stderr)
        print(res.stats.summary(), file=sys.stderr)
        return run.finish(EXIT_NO_PLAN)
    plan = emit_plan(res.trajectory, run.cfg)
    run.output("plan_text", f"{args.name}.plan.txt", plan.to_text())
    run.output("plan_json", f"{args.name}.plan.json", plan.to_json())
    meta = plan.metadata
    print(f"plan found: {meta['duration_s']} s, cost {meta['total_cost']:.6f}, "
          f"energy {meta['energy_consumed_C']:.1f} C, residual {meta['residual_charge_C']:.1f} C")
    print(res.stats.summary())
    return run.finish(EXIT_OK)


def cmd_validate(args) -> int:
    run = Run(args, "validate")
    err = _load(run)
    if err is not None:
        return run.finish(err)
    try:
        plan = load_plan(args.plan)
    except (PlanFormatError, OSError) as exc:
        print(f"cannot parse plan {args.plan}: {exc}", file=sys.stderr)
        run.extra["error"] = str(exc)
        return run.finish(EXIT_VALIDATION_FAILURE)
    report = validate_plan(plan, run.cfg)
    print(report.summary())
    run.extra["report"] = report.to_dict()
    if args.out:
        run.output("report", f"{args.name}.validation.json", json.dumps(report.to_dict(), indent=2) + "\n")
    return run.finish(EXIT_OK if report.passed else EXIT_VALIDATION_FAILURE)


def cmd_stats(args) -> int:
    run = Run(args, "stats")
    err = _load(run)
    if err is not None:
        return run.finish(err)
    model = RoverModel(run.cfg)
    horizon = model.t_max if args.horizon is None else args.horizon
    workers = args.workers if args.workers else 1
    try:
        stats = reachable(model, horizon, int(run.cfg.chain_limit), compact=args.compact_hash,
                          signature_bits=args.signature_bits, memory_cap=run.cap, workers=workers)
    except SearchAborted as exc:
        run.stats = exc.stats
        print(f"memory cap exceeded; partial stats:\n{exc.stats.summary()}", file=sys.stderr)
        return run.finish(EXIT_MEMORY_ABORT)
    space = model.table1_space_size()
    stats.extra.update({
        "theoretical_space": space,
        "encoded_space": model.layout.space_size(),
        "pruning_ratio": stats.reachable_count / space,
        "reference_reachable": REFERENCE_REACHABLE,
        "ratio_to_reference": stats.reachable_count / REFERENCE_REACHABLE,
    })
    run.stats = stats
    print(f"reachable_count    : {stats.reachable_count}")
    print(f"theoretical space  : {space} ({space:.3e})")
    print(f"pruning ratio      : {stats.reachable_count / space:.3e}")
    print(f"vs 939,477         : ratio {stats.reachable_count / REFERENCE_REACHABLE:.3f}")
    print(f"wall time          : {stats.wall_time:.1f} s")
    if args.out:
        run.output("stats", f"{args.name}.stats.json", stats.to_json() + "\n")
    return run.finish(EXIT_OK)


def cmd_trace(args) -> int:
    run = Run(args, "trace")
    err = _load(run)
    if err is not None:
        return run.finish(err)
    try:
        plan = load_plan(args.plan)
        text = export_trace(plan, run.cfg)
    except (PlanFormatError, OSError) as exc:
        print(f"cannot trace plan {args.plan}: {exc}", file=sys.stderr)
        return run.finish(EXIT_VALIDATION_FAILURE)
    path = run.output("trace", f"{args.name}.trace.csv", text)
    print(f"wrote {path}")
    return run.finish(EXIT_OK)


def cmd_oracle(args) -> int:
    run = Run(args, "oracle")
    err = _load(run)
    if err is not None:
        return run.finish(err)
    problem = RoverModel(run.cfg).problem(args.horizon)
    try:
        oracle = brute_force_plan(problem, guard=args.guard)
    except OracleExplosion as exc:
        print(f"oracle aborted: {exc}", file=sys.stderr)
        return run.finish(EXIT_MEMORY_ABORT)
    res = plan_optimal(problem, memory_cap=run.cap)
    run.stats = res.stats
    o = "none" if oracle.best_cost is None else f"{from_fixed(oracle.best_cost):.6f}"
    e = "none" if res.cost is None else f"{from_fixed(res.cost):.6f}"
    agree = oracle.best_cost == res.cost
    print(f"oracle cost  : {o} ({oracle.sequences_explored} sequences)")
    print(f"search cost  : {e}")
    print(f"agreement    : {agree}")
    if oracle.found:
        print("oracle plan  : " + " ".join(oracle.best_sequence))
    run.extra["oracle"] = {"best_cost": oracle.best_cost, "best_sequence": oracle.best_sequence,
                           "sequences_explored": oracle.sequences_explored, "search_cost": res.cost,
                           "agree": agree}
    if not agree:
        return run.finish(EXIT_VALIDATION_FAILURE)
    return run.finish(EXIT_OK if oracle.found else EXIT_NO_PLAN)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rover-planner", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, search=False):
        sp.add_argument("--config", default=str(bundled_config_path()), help="rover config JSON")
        sp.add_argument("--set", action="append", default=[], metavar="FIELD=VALUE",
                        help="override a config field (repeatable)")
        sp.add_argument("--out", default=None, help="output directory (default: cwd)")
        sp.add_argument("--name", default="run", help="basename for output files")
        sp.add_argument("--memory-cap", default=None, help="e.g. 2G, 512M or bytes")
        if search:
            sp.add_argument("--horizon", type=int, default=None, help="ticks (default t_max)")
            sp.add_argument("--compact-hash", action="store_true", help="store state signatures only")
            sp.add_argument("--signature-bits", type=int, default=64)
            sp.add_argument("--workers", type=int, default=1,
                            help=f"successor-generation processes (0 = {default_workers()})")

    sp = sub.add_parser("plan", help="find an optimal plan")
    common(sp, search=True)
    sp.set_defaults(func=cmd_plan)

    sp = sub.add_parser("validate", help="replay a plan file")
    sp.add_argument("plan")
    common(sp)
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("stats", help="reachability statistics")
    common(sp, search=True)
    sp.set_defaults(func=cmd_stats)

    sp = sub.add_parser("trace", help="export a per-second CSV trace of a plan")
    sp.add_argument("plan")
    common(sp)
    sp.set_defaults(func=cmd_trace)

    sp = sub.add_parser("oracle", help="brute-force cross-check on a small instance")
    common(sp)
    sp.add_argument("--horizon", type=int, default=None)
    sp.add_argument("--guard", type=int, default=10**7)
    sp.set_defaults(func=cmd_oracle)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "workers", 1) == 0:
        args.workers = default_workers()
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
