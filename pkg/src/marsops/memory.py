"""Per-agent short/long memory buffers and an optional shared pool."""
from __future__ import annotations

import json
from collections import defaultdict, deque
from dataclasses import asdict, dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence, Union

DEFAULT_K = 8
SUMMARY_BUDGET = 512


class MemoryMode(str, Enum):
    OFF = "off"
    BASIC = "basic"
    SHARED = "shared"


@dataclass(frozen=True)
class TurnRecord:
    tick: int
    speaker: str
    text: str
    scenario: str
    audience: tuple[str, ...] = ()


ContextItem = Union[TurnRecord, str]


@dataclass
class MemoryState:
    k: int = DEFAULT_K
    budget: int = SUMMARY_BUDGET
    shared_members: frozenset[str] | None = None
    short: dict[str, deque] = field(default_factory=dict)
    long: dict[str, list[str]] = field(default_factory=lambda: defaultdict(list))
    shared: list[TurnRecord] = field(default_factory=list)
    _since_distill: dict[str, int] = field(default_factory=lambda: defaultdict(int))

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("memory window k must be >= 1")

    def window(self, agent: str) -> deque:
        buf = self.short.get(agent)
        if buf is None:
            buf = self.short[agent] = deque(maxlen=self.k)
        return buf

    def is_empty(self) -> bool:
        return not any(self.short.values()) and not any(self.long.values()) and not self.shared


def distill(turns: Sequence[TurnRecord], budget: int = SUMMARY_BUDGET) -> str:
    """Extractive summary: scenario, speakers, then the first clause of each turn."""
    if not turns:
        raise ValueError("distill needs at least one turn")
    scenarios = sorted({t.scenario for t in turns})
    speakers = sorted({t.speaker for t in turns})
    clauses = []
    for t in turns:
        head = t.text.strip()
        for sep in (";", ".", "\n"):
            head = head.split(sep, 1)[0]
        clauses.append(f"{t.speaker}: {head.strip()}")
    text = f"[{','.join(scenarios)}] speakers={','.join(speakers)} | " + " | ".join(clauses)
    return text[:budget]


def append_turn(state: MemoryState, mode: MemoryMode, turn: TurnRecord) -> MemoryState:
    """Record a turn in the speaker's and audience's windows.

    Each agent distils its window into the long store every ``k`` appended turns.
    """
    mode = MemoryMode(mode)
    if mode is MemoryMode.OFF:
        return state
    for agent in dict.fromkeys((turn.speaker, *turn.audience)):
        buf = state.window(agent)
        buf.append(turn)
        state._since_distill[agent] += 1
        if state._since_distill[agent] >= state.k:
            state.long[agent].append(distill(list(buf), state.budget))
            state._since_distill[agent] = 0
    if mode is MemoryMode.SHARED and (
        state.shared_members is None or turn.speaker in state.shared_members
    ):
        state.shared.append(turn)
    return state


def build_context(state: MemoryState, mode: MemoryMode, agent: str, t: int | None = None) -> list[ContextItem]:
    mode = MemoryMode(mode)
    if mode is MemoryMode.OFF:
        return []
    ctx: list[ContextItem] = [r for r in state.short.get(agent, ()) if t is None or r.tick <= t]
    ctx.extend(state.long.get(agent, ()))
    if mode is MemoryMode.SHARED and (state.shared_members is None or agent in state.shared_members):
        ctx.extend(r for r in state.shared if t is None or r.tick <= t)
    return ctx


def context_mentions(context: Iterable[ContextItem], needle: str) -> bool:
    for item in context:
        text = item.text if isinstance(item, TurnRecord) else item
        if needle in text:
            return True
    return False


def snapshot(state: MemoryState) -> dict:
    return {
        "k": state.k,
        "budget": state.budget,
        "short": {a: [asdict(t) for t in buf] for a, buf in sorted(state.short.items())},
        "long": {a: list(v) for a, v in sorted(state.long.items()) if v},
        "shared": [asdict(t) for t in state.shared],
    }


def dump_snapshot(state: MemoryState, path: str | Path) -> None:
    Path(path).write_text(json.dumps(snapshot(state), indent=1, sort_keys=True), encoding="utf-8")
