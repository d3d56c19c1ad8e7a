"""Failure accounting: unserviceable assets, constraint violations, missing deliverables."""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, Sequence

from .handover import ControlResolution


class RuleKind(str, Enum):
    REDLINE = "redline"
    INTERLOCK_BYPASS = "interlock_bypass"
    SEO_REJECTION = "seo_rejection"


@dataclass(frozen=True)
class ConstraintRule:
    """Fires once per event whose fields all equal the ``match`` values."""

    rule_id: str
    scenario: str
    kind: RuleKind
    match: Mapping[str, str]
    description: str = ""

    def matches(self, event: Mapping) -> bool:
        return all(event.get(k) == v for k, v in self.match.items())

    def to_dict(self) -> dict:
        return {"rule_id": self.rule_id, "scenario": self.scenario, "kind": self.kind.value,
                "match": dict(self.match), "description": self.description}

    @classmethod
    def from_dict(cls, d: Mapping) -> "ConstraintRule":
        return cls(d["rule_id"], d["scenario"], RuleKind(d["kind"]), dict(d["match"]),
                   d.get("description", ""))


@dataclass(frozen=True)
class ViolationEvent:
    tick: int
    actor: str
    rule_id: str
    description: str = ""

    def record(self) -> dict:
        return {"type": "violation", "tick": self.tick, "actor": self.actor,
                "rule_id": self.rule_id, "description": self.description}


@dataclass(frozen=True)
class FailureBreakdown:
    n_asset: int = 0
    n_viol: int = 0
    n_miss: int = 0
    f_total: int = field(init=False)

    def __post_init__(self):
        if min(self.n_asset, self.n_viol, self.n_miss) < 0:
            raise ValueError("failure counts must be non-negative")
        object.__setattr__(self, "f_total", self.n_asset + self.n_viol + self.n_miss)


def evaluate_rules(rules: Iterable[ConstraintRule], events: Iterable[Mapping]) -> list[ViolationEvent]:
    """One violation per (matching event, rule); repeated events count separately."""
    rules = list(rules)
    out = []
    for ev in events:
        for rule in rules:
            if rule.matches(ev):
                out.append(ViolationEvent(ev.get("tick", 0), ev.get("actor", ""), rule.rule_id,
                                          rule.description))
    return out


def count_failures(log: Iterable[Mapping], resolutions: Iterable[ControlResolution],
                   deliverable_flags: Sequence[bool]) -> FailureBreakdown:
    log = list(log)
    dead = {r.asset for r in resolutions if r.controller is None}
    dead |= {rec["asset"] for rec in log if rec.get("type") == "unserviceable"}
    n_viol = sum(1 for rec in log if rec.get("type") == "violation")
    n_miss = sum(1 for f in deliverable_flags if not f)
    return FailureBreakdown(len(dead), n_viol, n_miss)
