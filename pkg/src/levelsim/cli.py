"""Command line entry point: ``levelsim run | validate-trace | oracle``.

Exit codes: 0 success or clean trace, 1 trace violations, 2 usage or
configuration errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from collections import Counter
from typing import Optional, Sequence

from .models.counter import counter_oracle, counter_values
from .models.droplet import MACRO, MICRO, aligned_masses, droplet_count, pond_mass
from .models.pingpong import memorized_stamps
from .scenario import ScenarioConfig, ScenarioError, build_world, counter_config, load_scenario
from .scheduler import ConfigurationError, World, run_until, state_digest
from .state import IntegrityError
from .topology import TopologyError
from .trace import TraceParseError, read_trace, trace_digest, validate_causality, write_trace

EXIT_OK, EXIT_VIOLATIONS, EXIT_USAGE = 0, 1, 2


def _model_summary(config: ScenarioConfig, world: World) -> dict:
    if config.model == "counter":
        return {"counters": counter_values(world)}
    if config.model == "droplet":
        masses = aligned_masses(world)
        return {
            "droplets": droplet_count(world.states[MICRO]),
            "pond_mass": pond_mass(world.states[MACRO]),
            "aligned_total_mass": sorted(set(masses.values())),
        }
    return {"stamps": memorized_stamps(world)}


def summarize_run(config: ScenarioConfig, world: World, scheduler: str) -> dict:
    trace = world.trace
    kinds = Counter(ev.kind for ev in trace)
    reactions = Counter(ev.level for ev in trace if ev.kind == "reaction")
    return {
        "model": config.model,
        "scheduler": scheduler,
        "horizon": world.horizon,
        "seed": world.rng_seed,
        "iterations": world.iterations,
        "final_clocks": dict(world.clocks),
        "state_digests": {l: state_digest(st) for l, st in sorted(world.states.items())},
        "reactions": {l: reactions.get(l, 0) for l in world.topology.level_ids},
        "events": {k: kinds[k] for k in sorted(kinds)},
        "dropped_influences": len(world.dropped),
        "pending_batches": world.buffers.waiting(),
        "trace_digest": trace_digest(trace),
        "model_summary": _model_summary(config, world),
    }


def _cmd_run(args) -> int:
    config = load_scenario(args.scenario)
    scheduler = args.scheduler or config.scheduler
    world = build_world(config, horizon=args.until, seed=args.seed)
    world, trace = run_until(world, scheduler)
    write_trace(trace, args.trace)
    summary = json.dumps(summarize_run(config, world, scheduler), indent=2, sort_keys=True) + "\n"
    if args.summary:
        with open(args.summary, "w", encoding="utf-8") as fh:
            fh.write(summary)
    else:
        sys.stdout.write(summary)
    return EXIT_OK


def _cmd_validate(args) -> int:
    config = load_scenario(args.scenario)
    trace = read_trace(args.trace)
    report = validate_causality(trace, config.topology())
    for v in report:
        print(v)
    if report:
        print(f"{len(report)} violation(s) in {len(trace)} events", file=sys.stderr)
        return EXIT_VIOLATIONS
    print(f"clean: {len(trace)} events")
    return EXIT_OK


def _cmd_oracle(args) -> int:
    config = load_scenario(args.scenario)
    if config.model != "counter":
        print(f"error: oracle is defined for the counter model only, not {config.model!r}", file=sys.stderr)
        return EXIT_USAGE
    scheduler = args.scheduler or config.scheduler
    horizon = config.horizon if args.until is None else args.until
    counts = counter_oracle(config.topology(), counter_config(config), scheduler, horizon)
    print(json.dumps(counts, sort_keys=True))
    return EXIT_OK


def _nonneg(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="levelsim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario and write its trace")
    run.add_argument("--scenario", required=True)
    run.add_argument("--scheduler", choices=("sync", "async"))
    run.add_argument("--until", type=_nonneg, help="horizon in ticks (overrides the scenario)")
    run.add_argument("--seed", type=_nonneg)
    run.add_argument("--trace", required=True, help="JSON-lines trace output path")
    run.add_argument("--summary", help="summary JSON path (default: stdout)")
    run.set_defaults(func=_cmd_run)

    val = sub.add_parser("validate-trace", help="audit a trace against the scheduling rules")
    val.add_argument("--trace", required=True)
    val.add_argument("--scenario", required=True)
    val.set_defaults(func=_cmd_validate)

    ora = sub.add_parser("oracle", help="print the independent counter-model replay")
    ora.add_argument("--scenario", required=True)
    ora.add_argument("--scheduler", choices=("sync", "async"))
    ora.add_argument("--until", type=_nonneg)
    ora.set_defaults(func=_cmd_oracle)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ScenarioError, ConfigurationError, TopologyError, TraceParseError, IntegrityError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
