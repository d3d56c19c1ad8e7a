"""Factor sweeps: repeated runs per level, aggregation to means, CSV and log export."""
from __future__ import annotations

import csv
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from statistics import fmean
from typing import Any, Iterable, Sequence

from .consensus import ConsensusConfig
from .engine import RunConfig, RunResult, run_scenario
from .errors import MarsOpsError
from .leadership import LeadershipMode
from .memory import MemoryMode
from .protocols import ProtocolMode
from .routing import RoutingPolicy

log = logging.getLogger(__name__)

FACTORS = ("routing", "leadership", "role_switching", "memory", "consensus", "protocols")

FACTOR_LEVELS = {
    "routing": ("strict", "crosslayer"),
    "leadership": ("single", "functional"),
    "role_switching": ("off", "on"),
    "memory": ("off", "basic", "shared"),
    "consensus": ("off", "on"),
    "protocols": ("off", "hetero"),
}

CSV_COLUMNS = ("scenario", "routing", "leadership", "switching", "memory", "consensus", "protocols",
               "time", "msgs", "failures", "n_asset", "n_viol", "n_miss", "crosslayer", "rolesw", "ampi")
METRIC_COLUMNS = CSV_COLUMNS[7:]


def _on_off(value: Any) -> bool:
    if isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in ("on", "true", "1", "yes"):
        return True
    if text in ("off", "false", "0", "no"):
        return False
    raise ValueError(f"expected on/off, got {value!r}")


def apply_level(cfg: RunConfig, factor: str, level: Any) -> RunConfig:
    """Return ``cfg`` with one factor set to ``level`` (CLI vocabulary accepted)."""
    if factor == "routing":
        return replace(cfg, routing=RoutingPolicy(level))
    if factor == "leadership":
        return replace(cfg, leadership=LeadershipMode(str(level).lower()))
    if factor == "role_switching":
        return replace(cfg, switching=_on_off(level))
    if factor == "memory":
        return replace(cfg, memory=MemoryMode(str(level).lower()))
    if factor == "consensus":
        return replace(cfg, consensus=replace(cfg.consensus, enabled=_on_off(level)))
    if factor == "protocols":
        return replace(cfg, protocols=ProtocolMode(str(level).lower()))
    raise ValueError(f"unknown factor {factor!r}; choose from {FACTORS}")


def level_labels(cfg: RunConfig) -> dict[str, str]:
    return {
        "routing": cfg.routing.value.lower(),
        "leadership": cfg.leadership.value,
        "switching": "on" if cfg.switching else "off",
        "memory": cfg.memory.value,
        "consensus": "on" if cfg.consensus.enabled else "off",
        "protocols": cfg.protocols.value,
    }


@dataclass(frozen=True)
class SweepSpec:
    base: RunConfig
    varied_factor: str | None = None
    levels: tuple = ()
    repetitions_N: int = 1
    seed_base: int = 0

    def __post_init__(self):
        if self.repetitions_N < 1:
            raise ValueError("repetitions_N must be positive")
        if self.varied_factor is not None:
            if self.varied_factor not in FACTORS:
                raise ValueError(f"unknown factor {self.varied_factor!r}; choose from {FACTORS}")
            if not self.levels:
                raise ValueError("a sweep needs at least one level")
        object.__setattr__(self, "levels", tuple(self.levels))

    def level_configs(self) -> list[RunConfig]:
        if self.varied_factor is None:
            return [self.base]
        return [apply_level(self.base, self.varied_factor, lv) for lv in self.levels]

    def run_configs(self, level_cfg: RunConfig) -> list[RunConfig]:
        """Paired seeds: run ``i`` of every level uses ``seed_base + i``."""
        return [replace(level_cfg, seed=self.seed_base + i) for i in range(self.repetitions_N)]


@dataclass(frozen=True)
class AggregateRow:
    scenario: str
    routing: str
    leadership: str
    switching: str
    memory: str
    consensus: str
    protocols: str
    time: float
    msgs: float
    failures: float
    n_asset: float
    n_viol: float
    n_miss: float
    crosslayer: float
    rolesw: float
    ampi: float
    n_runs: int = field(default=1, compare=False)  # not exported to CSV

    def rounded(self) -> "AggregateRow":
        return replace(self, **{c: round(getattr(self, c), 2) for c in METRIC_COLUMNS})


def aggregate(results: Sequence[RunResult]) -> AggregateRow:
    if not results:
        raise ValueError("cannot aggregate zero runs")
    cfg = results[0].config

    def mean(get) -> float:
        return fmean(get(r) for r in results)

    return AggregateRow(
        scenario=results[0].scenario.id,
        **level_labels(cfg),
        time=mean(lambda r: r.metrics.time_T),
        msgs=mean(lambda r: r.metrics.msgs_M),
        failures=mean(lambda r: r.metrics.failures_F),
        n_asset=mean(lambda r: r.breakdown.n_asset),
        n_viol=mean(lambda r: r.breakdown.n_viol),
        n_miss=mean(lambda r: r.breakdown.n_miss),
        crosslayer=mean(lambda r: r.metrics.cross_C),
        rolesw=mean(lambda r: r.metrics.switches_S),
        ampi=mean(lambda r: r.ampi),
        n_runs=len(results),
    )


def run_id(cfg: RunConfig) -> str:
    lv = level_labels(cfg)
    parts = [cfg.scenario] + [f"{k}-{v}" for k, v in lv.items()] + [f"seed{cfg.seed}"]
    return "__".join(parts)


def _write_run(out_dir: Path, result: RunResult) -> None:
    runs = out_dir / "runs"
    runs.mkdir(parents=True, exist_ok=True)
    rid = run_id(result.config)
    result.write_log(runs / f"{rid}.log")
    (runs / f"{rid}.report.txt").write_text(result.report_text, encoding="utf-8")


def run_batches(specs: Iterable[SweepSpec], *, out_dir: str | Path | None = None,
                jobs: int = 1) -> list[AggregateRow]:
    """Run every level of every spec; rows come out in (spec, level) order.

    A level whose runs raise is skipped with a logged diagnostic; other levels
    still produce rows. With ``out_dir`` set, per-run logs and reports plus
    ``summary.csv`` are written there.
    """
    out = Path(out_dir) if out_dir is not None else None
    rows: list[AggregateRow] = []
    pool = ProcessPoolExecutor(max_workers=jobs) if jobs > 1 else None
    try:
        for spec in specs:
            for level_cfg in spec.level_configs():
                cfgs = spec.run_configs(level_cfg)
                try:
                    results = list(pool.map(run_scenario, cfgs)) if pool else [run_scenario(c) for c in cfgs]
                except (MarsOpsError, ValueError, KeyError) as exc:
                    log.error("level %s aborted: %s", run_id(level_cfg), exc)
                    continue
                if out is not None:
                    for r in results:
                        _write_run(out, r)
                rows.append(aggregate(results))
    finally:
        if pool is not None:
            pool.shutdown()
    if out is not None and rows:
        out.mkdir(parents=True, exist_ok=True)
        export_csv(rows, out / "summary.csv")
    return rows


def run_batch(spec: SweepSpec, *, out_dir: str | Path | None = None, jobs: int = 1) -> list[AggregateRow]:
    return run_batches([spec], out_dir=out_dir, jobs=jobs)


def export_csv(rows: Sequence[AggregateRow], path: str | Path) -> None:
    if not rows:
        raise ValueError("no rows to export")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for row in rows:
            writer.writerow([getattr(row, c) if c not in METRIC_COLUMNS else f"{getattr(row, c):.2f}"
                             for c in CSV_COLUMNS])


def read_csv(path: str | Path) -> list[AggregateRow]:
    """Parse a summary CSV back into rows (``n_runs`` is not stored and reads as 1)."""
    names = {f.name for f in fields(AggregateRow)}
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        for rec in csv.DictReader(fh):
            values = {k: (float(v) if k in METRIC_COLUMNS else v) for k, v in rec.items() if k in names}
            out.append(AggregateRow(**values))
    return out


def consensus_config(enabled: bool, rounds: int | None = None, quorum: float | None = None) -> ConsensusConfig:
    base = ConsensusConfig()
    return ConsensusConfig(enabled, rounds if rounds is not None else base.rounds_R,
                           quorum if quorum is not None else base.quorum_theta)
