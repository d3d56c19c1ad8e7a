"""Run-leader selection from scenario phase and leadership mode."""
from __future__ import annotations

from enum import Enum
from typing import TYPE_CHECKING

from .errors import RosterError
from .roster import Kind, Roster, id_number

if TYPE_CHECKING:
    from .scenarios import ScenarioScript


class LeadershipMode(str, Enum):
    SINGLE = "single"
    FUNCTIONAL = "functional"


class ScenarioPhase(str, Enum):
    DAILY_OPS = "DailyOps"
    EMERGENCY = "Emergency"
    SCIENCE = "Science"
    OTHER = "Other"


PHASE_FALLBACK = {
    ScenarioPhase.DAILY_OPS: "OPS",
    ScenarioPhase.EMERGENCY: "CMD",
    ScenarioPhase.SCIENCE: "GEO",
    ScenarioPhase.OTHER: "CMD",
}


def resolve_group(roster: Roster, group: str) -> str:
    """Decision-capable agent for a group tag.

    Human groups resolve to their lowest-numbered member; asset groups resolve
    to the primary owner of their lowest-numbered asset.
    """
    members = roster.members(group)
    if not members:
        raise RosterError(f"unknown group {group!r}")
    head = members[0]
    if roster[head].kind is Kind.ASSET:
        return roster.ownership[min(members, key=id_number)].primary
    return head


def select_leader(scenario: "ScenarioScript", mode: LeadershipMode, roster: Roster) -> str:
    mode = LeadershipMode(mode)
    if mode is LeadershipMode.SINGLE:
        return "CMD_01"
    if scenario.leader_order:
        return resolve_group(roster, scenario.leader_order[0])
    return resolve_group(roster, PHASE_FALLBACK[ScenarioPhase(scenario.phase)])
