"""Command-line entry point: ``marsops run``, ``marsops sweep``, ``marsops list``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Sequence

import yaml

from .engine import RunConfig
from .leadership import LeadershipMode
from .memory import MemoryMode
from .metrics import AmpiConfig
from .protocols import ProtocolMode
from .routing import RoutingPolicy
from .runner import (CSV_COLUMNS, FACTOR_LEVELS, FACTORS, METRIC_COLUMNS, SweepSpec,
                     consensus_config, run_batches, _on_off)
from .scenarios import SCENARIO_IDS, list_scenarios

CONFIG_KEYS = ("routing", "leadership", "role_switching", "memory", "consensus", "consensus_rounds",
               "consensus_quorum", "protocols", "outage_rate", "scenario", "runs", "seed",
               "ampi_include_crosslayer", "jobs", "out", "factor", "levels")


def _add_factor_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--routing", choices=FACTOR_LEVELS["routing"])
    p.add_argument("--leadership", choices=FACTOR_LEVELS["leadership"])
    p.add_argument("--role_switching", choices=FACTOR_LEVELS["role_switching"])
    p.add_argument("--memory", choices=FACTOR_LEVELS["memory"])
    p.add_argument("--consensus", choices=FACTOR_LEVELS["consensus"])
    p.add_argument("--consensus_rounds", type=int)
    p.add_argument("--consensus_quorum", type=float)
    p.add_argument("--protocols", choices=FACTOR_LEVELS["protocols"])
    p.add_argument("--outage_rate", type=float, help="per-controller offline probability")
    p.add_argument("--scenario", help="scenario id, comma-separated ids, or 'all'")
    p.add_argument("--runs", type=int, help="repetitions per configuration")
    p.add_argument("--seed", type=int, help="seed of run 0; run i uses seed + i")
    p.add_argument("--ampi_include_crosslayer", metavar="{true,false}",
                   help="include the cross-layer term in AMPI")
    p.add_argument("--jobs", type=int, help="parallel worker processes")
    p.add_argument("--config", type=Path, help="YAML or JSON file with the same keys as the flags")
    p.add_argument("--out", type=Path, help="output directory for summary.csv and runs/")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="marsops", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run scenarios under one configuration")
    _add_factor_flags(run)
    sweep = sub.add_parser("sweep", help="vary one factor across its levels")
    _add_factor_flags(sweep)
    sweep.add_argument("--factor", choices=FACTORS)
    sweep.add_argument("--levels", help="comma-separated levels (default: all levels of the factor)")
    sub.add_parser("list", help="list scenario ids")
    return parser


def load_config_file(path: Path) -> dict[str, Any]:
    text = path.read_text(encoding="utf-8")
    doc = json.loads(text) if path.suffix == ".json" else yaml.safe_load(text)
    doc = doc or {}
    if not isinstance(doc, dict):
        raise SystemExit(f"config file {path} must contain a mapping")
    unknown = set(doc) - set(CONFIG_KEYS)
    if unknown:
        raise SystemExit(f"unknown config keys: {sorted(unknown)}")
    return doc


def merged_options(args: argparse.Namespace) -> dict[str, Any]:
    """Flags override the config file, which overrides built-in defaults."""
    opts = load_config_file(args.config) if getattr(args, "config", None) else {}
    for key in CONFIG_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            opts[key] = value
    return opts


def _scenarios(value: Any) -> list[str]:
    if value is None:
        return ["DailyOperations"]
    items = value if isinstance(value, list) else [s.strip() for s in str(value).split(",") if s.strip()]
    if items == ["all"]:
        return list(SCENARIO_IDS)
    return items


def config_from_options(opts: dict[str, Any], scenario: str) -> RunConfig:
    d = RunConfig()
    return RunConfig(
        scenario=scenario,
        routing=RoutingPolicy(opts.get("routing", d.routing.value)),
        leadership=LeadershipMode(opts.get("leadership", d.leadership.value)),
        switching=_on_off(opts.get("role_switching", d.switching)),
        memory=MemoryMode(opts.get("memory", d.memory.value)),
        consensus=consensus_config(_on_off(opts.get("consensus", d.consensus.enabled)),
                                   opts.get("consensus_rounds"), opts.get("consensus_quorum")),
        protocols=ProtocolMode(opts.get("protocols", d.protocols.value)),
        outage_p=float(opts.get("outage_rate", d.outage_p)),
        seed=int(opts.get("seed", 0)),
        ampi=AmpiConfig(include_crosslayer=_on_off(opts.get("ampi_include_crosslayer", False))),
    )


def specs_from_options(opts: dict[str, Any], sweep: bool) -> list[SweepSpec]:
    runs = int(opts.get("runs", 1))
    seed = int(opts.get("seed", 0))
    factor = opts.get("factor") if sweep else None
    if sweep and factor is None:
        raise SystemExit("sweep needs --factor")
    levels: Sequence = ()
    if factor is not None:
        raw = opts.get("levels")
        if raw is None:
            levels = FACTOR_LEVELS[factor]
        else:
            levels = raw if isinstance(raw, list) else [x.strip() for x in str(raw).split(",")]
    return [SweepSpec(config_from_options(opts, sid), factor, tuple(levels), runs, seed)
            for sid in _scenarios(opts.get("scenario"))]


def _print_rows(rows) -> None:
    print(",".join(CSV_COLUMNS))
    for row in rows:
        print(",".join(f"{getattr(row, c):.2f}" if c in METRIC_COLUMNS else str(getattr(row, c))
                       for c in CSV_COLUMNS))


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    if args.command == "list":
        print("\n".join(list_scenarios()))
        return 0
    opts = merged_options(args)
    try:
        specs = specs_from_options(opts, sweep=args.command == "sweep")
        rows = run_batches(specs, out_dir=opts.get("out"), jobs=int(opts.get("jobs", 1)))
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    _print_rows(rows)
    return 0 if len(rows) == sum(len(s.level_configs()) for s in specs) else 1


if __name__ == "__main__":
    sys.exit(main())
