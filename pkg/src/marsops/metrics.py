"""Run metrics and the composite performance index (AMPI)."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

DEFAULT_WEIGHTS = (0.4, 0.2, 0.0, 0.25, 0.15)
DEFAULT_K = (20.0, 50.0, 3.0, 5.0)


@dataclass(frozen=True)
class RunMetrics:
    """Per-run counters. ``time_T`` is the decision-step surrogate, not seconds."""

    time_T: float
    msgs_M: float
    cross_C: float
    failures_F: float
    switches_S: float
    wall_clock_s: float = field(default=0.0, compare=False)

    def __post_init__(self):
        for name in ("time_T", "msgs_M", "failures_F", "switches_S"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if not 0.0 <= self.cross_C <= 1.0:
            raise ValueError(f"cross_C must lie in [0, 1], got {self.cross_C}")

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class AmpiConfig:
    weights: tuple[float, float, float, float, float] = DEFAULT_WEIGHTS
    K_T: float = DEFAULT_K[0]
    K_M: float = DEFAULT_K[1]
    K_F: float = DEFAULT_K[2]
    K_S: float = DEFAULT_K[3]
    include_crosslayer: bool = False

    def __post_init__(self):
        if len(self.weights) != 5 or any(w < 0 for w in self.weights):
            raise ValueError("need five non-negative weights")
        for name in ("K_T", "K_M", "K_F", "K_S"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


def squash(x: float, K: float) -> float:
    if K <= 0:
        raise ValueError(f"squashing constant must be positive, got {K}")
    if x < 0:
        raise ValueError(f"squash input must be non-negative, got {x}")
    return x / (x + K)


def ampi_terms(m: RunMetrics, cfg: AmpiConfig = AmpiConfig()) -> dict[str, float]:
    """Weighted ``w_i * (1 - x_i)`` contributions, keyed T/M/C/F/S."""
    w1, w2, w3, w4, w5 = cfg.weights
    terms = {
        "T": w1 * (1.0 - squash(m.time_T, cfg.K_T)),
        "M": w2 * (1.0 - squash(m.msgs_M, cfg.K_M)),
        "C": w3 * (1.0 - m.cross_C) if cfg.include_crosslayer else 0.0,
        "F": w4 * (1.0 - squash(m.failures_F, cfg.K_F)),
        "S": w5 * (1.0 - squash(m.switches_S, cfg.K_S)),
    }
    return terms


def compute_ampi(m: RunMetrics, cfg: AmpiConfig = AmpiConfig()) -> float:
    return sum(ampi_terms(m, cfg).values())


def ampi_from_columns(time: float, msgs: float, failures: float, rolesw: float,
                      crosslayer: float = 0.0, cfg: AmpiConfig = AmpiConfig()) -> float:
    """AMPI from table-style columns (means allowed, so values may be fractional)."""
    return compute_ampi(RunMetrics(time, msgs, crosslayer, failures, rolesw), cfg)
