"""Command line: tcpbp {run,sweep,validate,presets}."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .sim.engine import BACKPRESSURE, STATIC, InvalidConfig, run
from .sim.experiments import AXES, sweep
from .sim.output import FORMATS, emit, render, write_rows
from .topology import PRESETS, KPolicy, ScenarioConfig, load_scenario, preset, validate

EXIT_INVALID = 2
EXIT_IO = 3


def _scenario(args) -> ScenarioConfig:
    if args.scenario and args.preset:
        raise InvalidConfig(["give either --scenario or --preset, not both"])
    if args.scenario:
        config = load_scenario(args.scenario)
    else:
        config = preset(args.preset or "diamond")
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.horizon is not None:
        changes["horizon_slots"] = args.horizon
    if args.policy == "classical":
        changes["k_policy"] = KPolicy.classical()
    elif args.k is not None:
        changes["k_policy"] = KPolicy.parse(args.k)
    elif args.policy == "tcp-aware":
        changes["k_policy"] = KPolicy.buffer_share()
    if args.lossy_links:
        links, p = _lossy(args.lossy_links)
        changes["graph"] = config.graph.with_corruption(links, p)
    return config.replace(**changes)


def _lossy(spec: str) -> tuple[list[int], float]:
    """``"0,1:0.3"`` -> links [0, 1] with corrupt_prob 0.3 (``:p`` optional)."""
    ids, _, p = spec.partition(":")
    links = [int(x) for x in ids.split(",") if x.strip()]
    return links, float(p) if p else 0.0


def _routing(args) -> str:
    return STATIC if args.baseline == "static" else BACKPRESSURE


def cmd_run(args) -> int:
    config = _scenario(args)
    result = run(config, _routing(args))
    if args.out:
        series, summary = emit(result, args.out, args.format)
        print(f"wrote {series} and {summary}")
    totals = " ".join(f"flow{s}={t}" for s, t in enumerate(result.totals))
    print(f"{totals} jain={result.jain:.4f} verdict={result.stability.verdict} "
          f"digest={result.digest}")
    return 0


def cmd_sweep(args) -> int:
    config = _scenario(args)
    if args.axis == "K":
        values = args.values.split(",")
    else:
        values = [float(v) for v in args.values.split(",")]
    links = _lossy(args.lossy_links)[0] if args.lossy_links else None
    seeds = range(args.seed or 0, (args.seed or 0) + args.seeds)
    rows = [r.as_dict() for r in sweep(config, args.axis, values, seeds, links, _routing(args))]
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        print(f"wrote {write_rows(rows, out / f'sweep.{args.format}', args.format)}")
    else:
        sys.stdout.write(render(rows, args.format))
    return 0


def cmd_validate(args) -> int:
    config = _scenario(args)
    problems = validate(config)
    for p in problems:
        print(f"invalid: {p}", file=sys.stderr)
    if problems:
        return EXIT_INVALID
    print(f"ok: {config.graph.n_nodes} nodes, {len(config.graph.links)} links, "
          f"{len(config.flows)} flows, digest {config.digest()}")
    return 0


def cmd_presets(args) -> int:
    if args.name:
        print(json.dumps(preset(args.name).to_dict(), indent=2))
        return 0
    for name in PRESETS:
        cfg = preset(name)
        print(f"{name}: {cfg.graph.n_nodes} nodes, {len(cfg.graph.links)} links, "
              f"{len(cfg.flows)} flows")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tcpbp", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log warnings")
    sub = parser.add_subparsers(dest="command", required=True)

    def scenario_flags(p):
        p.add_argument("--scenario", help="scenario JSON file")
        p.add_argument("--preset", choices=PRESETS, help="built-in scenario (default diamond)")
        p.add_argument("--seed", type=int)
        p.add_argument("--horizon", type=int, help="slots to simulate")
        p.add_argument("--policy", choices=("classical", "tcp-aware"))
        p.add_argument("--k", help="fixed:<v> or buffer-share")
        p.add_argument("--baseline", choices=("static",), help="static shortest-path routing")
        p.add_argument("--lossy-links", help="link ids with optional corrupt_prob, e.g. 0,1:0.3")

    p = sub.add_parser("run", help="simulate one scenario")
    scenario_flags(p)
    p.add_argument("--out", help="directory for series and summary files")
    p.add_argument("--format", choices=FORMATS, default="csv")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="sweep one axis over seeds")
    scenario_flags(p)
    p.add_argument("--axis", choices=AXES, required=True)
    p.add_argument("--values", required=True, help="comma separated axis values")
    p.add_argument("--seeds", type=int, default=3, help="number of seeds per point")
    p.add_argument("--out")
    p.add_argument("--format", choices=FORMATS, default="csv")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("validate", help="check a scenario without running it")
    scenario_flags(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("presets", help="list presets or dump one as JSON")
    p.add_argument("name", nargs="?", choices=PRESETS)
    p.set_defaults(func=cmd_presets)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except InvalidConfig as exc:
        for p in exc.problems:
            print(f"invalid: {p}", file=sys.stderr)
        return EXIT_INVALID
    except (ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"invalid: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
