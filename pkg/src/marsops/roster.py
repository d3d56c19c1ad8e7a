"""Base organisation: 93 agents in 7 layers plus the asset ownership table."""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping

from .errors import RosterError, UnknownAssetError


class Kind(str, Enum):
    HUMAN = "Human"
    ASSET = "Asset"


class Layer(str, Enum):
    STRATEGY_GOVERNANCE = "StrategyGovernance"
    MISSION_OPERATIONS = "MissionOperations"
    CIVICS_WELLBEING = "CivicsWellbeing"
    INFRASTRUCTURE_ISRU = "InfrastructureISRU"
    SCIENCE_EXPLORATION = "ScienceExploration"
    DATA_AI_DIGITAL_TWIN = "DataAIDigitalTwin"
    ASSETS = "Assets"


LAYER_ORDER = {layer: i for i, layer in enumerate(Layer)}

# Strategy & Governance roles sit above the functional groups in the command chain.
COMMAND_GROUPS = frozenset({"CMD", "OPS", "SEO", "EARTH"})

_ID_RE = re.compile(r"^[A-Z][A-Z0-9_]*_(\d+)$")


def id_number(agent_id: str) -> int:
    """Trailing numeric suffix of an id, e.g. ``"AI_02" -> 2``."""
    m = _ID_RE.match(agent_id)
    if m is None:
        raise RosterError(f"malformed agent id {agent_id!r}")
    return int(m.group(1))


@dataclass(frozen=True)
class AgentSpec:
    id: str
    kind: Kind
    layer: Layer
    group: str
    title: str

    def __post_init__(self):
        if not self.id:
            raise RosterError("agent id must be non-empty")
        if (self.kind is Kind.ASSET) != (self.layer is Layer.ASSETS):
            raise RosterError(f"{self.id}: kind/layer mismatch ({self.kind.value}, {self.layer.value})")

    @property
    def is_human(self) -> bool:
        return self.kind is Kind.HUMAN


@dataclass(frozen=True)
class OwnershipRecord:
    asset: str
    primary: str
    backups: tuple[str, ...]
    alarm: str
    function: str = ""

    def __post_init__(self):
        if self.primary in self.backups:
            raise RosterError(f"{self.asset}: primary {self.primary} also listed as backup")
        if self.alarm not in ("A", "B", "C"):
            raise RosterError(f"{self.asset}: alarm level must be A, B or C, got {self.alarm!r}")

    @property
    def controllers(self) -> tuple[str, ...]:
        return (self.primary, *self.backups)


@dataclass(frozen=True)
class Roster:
    """Immutable agent table. ``agents`` is kept in canonical roster order."""

    agents: tuple[AgentSpec, ...]
    ownership: Mapping[str, OwnershipRecord]
    _index: dict = field(default_factory=dict, repr=False, compare=False)
    _order: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        index = {}
        for a in self.agents:
            if a.id in index:
                raise RosterError(f"duplicate agent id {a.id}")
            index[a.id] = a
        object.__setattr__(self, "_index", index)
        object.__setattr__(self, "_order", {a.id: i for i, a in enumerate(self.agents)})
        assets = {a.id for a in self.agents if a.kind is Kind.ASSET}
        if set(self.ownership) != assets:
            missing = sorted(assets - set(self.ownership))
            extra = sorted(set(self.ownership) - assets)
            raise RosterError(f"ownership table mismatch: missing={missing} extra={extra}")
        for rec in self.ownership.values():
            for c in rec.controllers:
                spec = index.get(c)
                if spec is None or not spec.is_human:
                    raise RosterError(f"{rec.asset}: controller {c} is not a human agent")

    def __contains__(self, agent_id: object) -> bool:
        return agent_id in self._index

    def __len__(self) -> int:
        return len(self.agents)

    def __getitem__(self, agent_id: str) -> AgentSpec:
        try:
            return self._index[agent_id]
        except KeyError:
            raise RosterError(f"unknown agent {agent_id!r}") from None

    def group_of(self, agent_id: str) -> str:
        return self[agent_id].group

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(a.id for a in self.agents)

    @property
    def humans(self) -> tuple[AgentSpec, ...]:
        return tuple(a for a in self.agents if a.kind is Kind.HUMAN)

    @property
    def assets(self) -> tuple[AgentSpec, ...]:
        return tuple(a for a in self.agents if a.kind is Kind.ASSET)

    def members(self, group: str) -> list[str]:
        """Ids of a group sorted by numeric suffix (lowest first)."""
        return sorted((a.id for a in self.agents if a.group == group), key=id_number)

    def groups(self, kind: Kind | None = None) -> list[str]:
        seen: dict[str, None] = {}
        for a in self.agents:
            if kind is None or a.kind is kind:
                seen.setdefault(a.group, None)
        return list(seen)

    def group_leader(self, group: str) -> str:
        """Lowest-numbered member of ``group``."""
        members = self.members(group)
        if not members:
            raise RosterError(f"unknown group {group!r}")
        return members[0]

    def order(self, agent_id: str) -> int:
        return self._order[agent_id]

    def controllers(self) -> list[str]:
        """Every human referenced by an ownership record, in roster order."""
        refs = {c for rec in self.ownership.values() for c in rec.controllers}
        return [a.id for a in self.agents if a.id in refs]


def ownership_of(roster: Roster, asset: str) -> OwnershipRecord:
    if asset not in roster or roster[asset].kind is not Kind.ASSET:
        raise UnknownAssetError(asset)
    return roster.ownership[asset]


def _sort_key(spec: AgentSpec):
    return (LAYER_ORDER[spec.layer], spec.group, id_number(spec.id))


def roster_from_dict(doc: Mapping) -> Roster:
    """Build a roster from the on-disk schema (``agents`` + ``ownership`` lists)."""
    try:
        agents = [
            AgentSpec(a["id"], Kind(a["kind"]), Layer(a["layer"]), a["group"], a.get("title", ""))
            for a in doc["agents"]
        ]
        ownership = {
            o["asset"]: OwnershipRecord(
                o["asset"], o["primary"], tuple(o["backups"]), o["alarm"], o.get("function", "")
            )
            for o in doc["ownership"]
        }
    except (KeyError, ValueError, TypeError) as exc:
        raise RosterError(f"invalid roster document: {exc}") from exc
    agents.sort(key=_sort_key)
    return Roster(tuple(agents), ownership)


def roster_to_dict(roster: Roster) -> dict:
    return {
        "agents": [
            {"id": a.id, "kind": a.kind.value, "layer": a.layer.value, "group": a.group, "title": a.title}
            for a in roster.agents
        ],
        "ownership": [
            {"asset": r.asset, "primary": r.primary, "backups": list(r.backups),
             "alarm": r.alarm, "function": r.function}
            for r in roster.ownership.values()
        ],
    }


_DEFAULT: Roster | None = None


def build_default_roster() -> Roster:
    global _DEFAULT
    if _DEFAULT is None:
        text = resources.files("marsops.data").joinpath("roster.json").read_text(encoding="utf-8")
        _DEFAULT = roster_from_dict(json.loads(text))
    return _DEFAULT


def load_roster(path: str | Path | None = None) -> Roster:
    """Default roster, or an override document read from ``path``."""
    if path is None:
        return build_default_roster()
    return roster_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def check_ids(roster: Roster, ids: Iterable[str]) -> None:
    unknown = sorted({i for i in ids if i not in roster})
    if unknown:
        raise RosterError(f"ids not in roster: {unknown}")
