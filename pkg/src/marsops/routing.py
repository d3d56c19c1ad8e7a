"""Hierarchical router with whitelisted cross-layer shortcuts and hub forwarding."""
from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
import pathlib
from typing import Iterable, Iterator

from .errors import RoutingError
from .roster import COMMAND_GROUPS, Kind, Roster

OPS_HUB = "OPS_01"
CMD_HUB = "CMD_01"
HUBS = (OPS_HUB, CMD_HUB)


class RoutingPolicy(str, Enum):
    STRICT = "STRICT"
    CROSSLAYER = "CROSSLAYER"

    @classmethod
    def _missing_(cls, value):
        if isinstance(value, str):
            return cls.__members__.get(value.upper())
        return None


class PathKind(str, Enum):
    DIRECT = "Direct"
    HUB_FORWARDED = "HubForwarded"


DEFAULT_WHITELIST_PAIRS = (
    ("GEO", "AI"), ("GEO", "COM"), ("GEO", "LAB"),
    ("BIO", "AI"), ("LAB", "AI"), ("COM", "AI"), ("LSS", "AI"),
    ("PWR", "AI"), ("ISRU", "AI"), ("AGRI", "AI"), ("MNT", "AI"),
)


@dataclass(frozen=True)
class Whitelist:
    """Directed group-level shortcut pairs ``(source, target)``."""

    pairs: frozenset[tuple[str, str]]

    def __post_init__(self):
        for src, dst in self.pairs:
            if src == dst:
                raise RoutingError(f"whitelist pair {src}->{dst} has identical groups")

    @classmethod
    def default(cls) -> "Whitelist":
        return cls(frozenset(DEFAULT_WHITELIST_PAIRS))

    @classmethod
    def parse(cls, text: str) -> "Whitelist":
        """Parse ``SRC -> DST`` lines; blank lines and ``#`` comments are skipped."""
        pairs = set()
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            src, sep, dst = line.partition("->")
            if not sep or not src.strip() or not dst.strip():
                raise RoutingError(f"whitelist line {lineno}: expected 'SRC -> DST', got {raw!r}")
            pairs.add((src.strip(), dst.strip()))
        return cls(frozenset(pairs))

    @classmethod
    def load(cls, path: str | pathlib.Path) -> "Whitelist":
        return cls.parse(pathlib.Path(path).read_text(encoding="utf-8"))

    def dumps(self) -> str:
        return "".join(f"{s} -> {d}\n" for s, d in sorted(self.pairs))

    def allows(self, src_group: str, dst_group: str) -> bool:
        return src_group != dst_group and (src_group, dst_group) in self.pairs

    def __or__(self, other: "Whitelist") -> "Whitelist":
        return Whitelist(self.pairs | other.pairs)


@dataclass(frozen=True)
class HierarchyGraph:
    edges: frozenset[tuple[str, str]]

    def __contains__(self, edge: object) -> bool:
        return edge in self.edges

    def __iter__(self) -> Iterator[tuple[str, str]]:
        return iter(self.edges)

    def __len__(self) -> int:
        return len(self.edges)


def build_hierarchy(roster: Roster) -> HierarchyGraph:
    """Chain-of-command edges, all bidirectional.

    CMD_01 links to the other command roles, OPS_01 links to every functional
    group leader (lowest-numbered member), leaders link to their members, and
    each asset links to its primary and backup controllers.
    """
    edges: set[tuple[str, str]] = set()

    def link(a: str, b: str) -> None:
        if a != b:
            edges.add((a, b))
            edges.add((b, a))

    for role in ("OPS_01", "SEO_01", "EARTH_01"):
        if role in roster:
            link(CMD_HUB, role)
    for group in roster.groups(Kind.HUMAN):
        if group in COMMAND_GROUPS:
            continue
        members = roster.members(group)
        leader = members[0]
        link(OPS_HUB, leader)
        for m in members[1:]:
            link(leader, m)
    for rec in roster.ownership.values():
        for c in rec.controllers:
            link(c, rec.asset)
    return HierarchyGraph(frozenset(edges))


@dataclass(frozen=True)
class Path:
    hops: tuple[tuple[str, str], ...]
    kind: PathKind
    hub: str | None = None

    def __post_init__(self):
        if self.kind is PathKind.DIRECT:
            if len(self.hops) != 1 or self.hub is not None:
                raise RoutingError("direct path must have one hop and no hub")
        else:
            if len(self.hops) != 2 or self.hub not in HUBS:
                raise RoutingError("hub-forwarded path must have two hops via OPS_01 or CMD_01")
            (_, mid1), (mid2, _) = self.hops
            if mid1 != self.hub or mid2 != self.hub:
                raise RoutingError("hub-forwarded hops must meet at the hub")

    @property
    def n_hops(self) -> int:
        return len(self.hops)


@dataclass(frozen=True)
class MessageEnvelope:
    seq: int
    sender: str
    recipient: str
    path: Path
    payload: str
    is_cross_layer: bool
    tick: int
    via: str | None = None

    def record(self) -> dict:
        return {
            "type": "msg",
            "seq": self.seq,
            "tick": self.tick,
            "sender": self.sender,
            "recipient": self.recipient,
            "kind": self.path.kind.value,
            "hub": self.path.hub,
            "hops": self.path.n_hops,
            "is_cross_layer": self.is_cross_layer,
            "via": self.via,
        }


@dataclass
class TrafficCounters:
    n_msg: int = 0
    n_cross: int = 0
    n_envelopes: int = 0


def select_hub(sender: str, recipient: str, emergency: bool = False) -> str:
    order = (CMD_HUB, OPS_HUB) if emergency else (OPS_HUB, CMD_HUB)
    for hub in order:
        if hub not in (sender, recipient):
            return hub
    raise RoutingError(f"no hub available for {sender}->{recipient}")


class Router:
    """Per-run message router: path selection, hop accounting and audit log."""

    def __init__(self, roster: Roster, graph: HierarchyGraph | None = None,
                 whitelist: Whitelist | None = None,
                 policy: RoutingPolicy = RoutingPolicy.STRICT,
                 gate_shortcuts_in_emergency: bool = False):
        self.roster = roster
        self.graph = graph if graph is not None else build_hierarchy(roster)
        self.whitelist = whitelist if whitelist is not None else Whitelist.default()
        self.policy = RoutingPolicy(policy)
        self.gate_shortcuts_in_emergency = gate_shortcuts_in_emergency
        self.counters = TrafficCounters()
        self.audit: list[MessageEnvelope] = []
        self._seq = 0

    def route(self, sender: str, recipient: str, *, emergency: bool = False,
              policy: RoutingPolicy | None = None) -> Path:
        policy = self.policy if policy is None else policy
        if emergency and self.gate_shortcuts_in_emergency:
            policy = RoutingPolicy.STRICT
        return route(self.graph, self.whitelist, policy, sender, recipient,
                     roster=self.roster, emergency=emergency)

    def send(self, sender: str, recipient: str, payload: str, tick: int, *,
             emergency: bool = False, policy: RoutingPolicy | None = None,
             via: str | None = None) -> MessageEnvelope:
        path = self.route(sender, recipient, emergency=emergency, policy=policy)
        return self.deliver(self._envelope(sender, recipient, path, payload, tick, policy, via))

    def relay(self, sender: str, recipient: str, payload: str, tick: int, via: str) -> MessageEnvelope:
        """Single mediated hop (e.g. translator relay), never counted as cross-layer."""
        path = Path(((sender, recipient),), PathKind.DIRECT)
        env = MessageEnvelope(self._next_seq(), sender, recipient, path, payload, False, tick, via)
        return self.deliver(env)

    def deliver(self, env: MessageEnvelope) -> MessageEnvelope:
        deliver(self.counters, env)
        self.audit.append(env)
        return env

    def _next_seq(self) -> int:
        self._seq += 1
        return self._seq

    def _envelope(self, sender, recipient, path, payload, tick, policy, via):
        policy = self.policy if policy is None else policy
        cross = (
            policy is RoutingPolicy.CROSSLAYER
            and path.kind is PathKind.DIRECT
            and path.hops[0] not in self.graph
            and self.whitelist.allows(self.roster.group_of(sender), self.roster.group_of(recipient))
        )
        return MessageEnvelope(self._next_seq(), sender, recipient, path, payload, cross, tick, via)


def route(graph: HierarchyGraph, wl: Whitelist, policy: RoutingPolicy, sender: str,
          recipient: str, *, roster: Roster, emergency: bool = False) -> Path:
    if sender == recipient:
        raise RoutingError(f"identity route {sender}->{recipient}")
    if sender not in roster or recipient not in roster:
        raise RoutingError(f"unknown endpoint in {sender}->{recipient}")
    edge = (sender, recipient)
    if edge in graph:
        return Path((edge,), PathKind.DIRECT)
    if RoutingPolicy(policy) is RoutingPolicy.CROSSLAYER and wl.allows(
        roster.group_of(sender), roster.group_of(recipient)
    ):
        return Path((edge,), PathKind.DIRECT)
    hub = select_hub(sender, recipient, emergency)
    return Path(((sender, hub), (hub, recipient)), PathKind.HUB_FORWARDED, hub)


def deliver(counters: TrafficCounters, env: MessageEnvelope) -> TrafficCounters:
    counters.n_msg += env.path.n_hops
    counters.n_envelopes += 1
    if env.is_cross_layer:
        counters.n_cross += 1
    return counters


def cross_layer_ratio(counters: TrafficCounters) -> float:
    if counters.n_msg <= 0:
        return 0.0
    return counters.n_cross / counters.n_msg


def write_audit_log(envelopes: Iterable[MessageEnvelope], path: str | pathlib.Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for env in envelopes:
            fh.write(json.dumps(env.record(), sort_keys=True) + "\n")
