"""Controller availability, primary/backup resolution and role-switch accounting."""
from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Iterable, Mapping

from .roster import OwnershipRecord, Roster


@dataclass(frozen=True)
class AvailabilityMap:
    online: Mapping[str, bool]
    outage_rate_p: float

    def is_online(self, agent_id: str) -> bool:
        # Agents not referenced by any ownership record are never sampled.
        return self.online.get(agent_id, True)

    def offline(self) -> list[str]:
        return [a for a, up in self.online.items() if not up]


@dataclass(frozen=True)
class ControlResolution:
    asset: str
    controller: str | None
    was_switch: bool
    primary: str = ""

    @property
    def unserviceable(self) -> bool:
        return self.controller is None


def _check_probability(p: float, name: str = "p") -> float:
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {p}")
    return p


def sample_availability(roster: Roster, p: float, rng: random.Random) -> AvailabilityMap:
    """Each ownership-table controller is independently offline with probability ``p``.

    Draw order is the roster order, one draw per controller, so the result is a
    pure function of the generator state.
    """
    p = _check_probability(p)
    online = {c: not (rng.random() < p) for c in roster.controllers()}
    return AvailabilityMap(online, p)


def resolve_controller(rec: OwnershipRecord, avail: AvailabilityMap,
                       switching_enabled: bool = True) -> ControlResolution:
    if avail.is_online(rec.primary):
        return ControlResolution(rec.asset, rec.primary, False, rec.primary)
    if switching_enabled:
        for backup in rec.backups:
            if avail.is_online(backup):
                return ControlResolution(rec.asset, backup, True, rec.primary)
    return ControlResolution(rec.asset, None, False, rec.primary)


def resolve_all(roster: Roster, avail: AvailabilityMap, switching_enabled: bool = True,
                assets: Iterable[str] | None = None) -> list[ControlResolution]:
    ids = list(roster.ownership) if assets is None else list(assets)
    return [resolve_controller(roster.ownership[a], avail, switching_enabled) for a in ids]


def count_switches(resolutions: Iterable[ControlResolution]) -> int:
    return sum(r.was_switch for r in resolutions)


def count_unserviceable(resolutions: Iterable[ControlResolution]) -> int:
    return len({r.asset for r in resolutions if r.controller is None})


def expected_switches(n_assets: int, p_o: float, p_b: float) -> float:
    """Expected role switches: assets whose primary is down while the backup is up."""
    p_o = _check_probability(p_o, "p_o")
    p_b = _check_probability(p_b, "p_b")
    return n_assets * p_o * (1.0 - p_b)


def serviceability(p_o: float, p_b: float) -> float:
    """Probability an asset keeps a controller, assuming independent outages."""
    return 1.0 - _check_probability(p_o, "p_o") * _check_probability(p_b, "p_b")


def expected_unserviceable(n_assets: int, p_o: float, p_b: float) -> float:
    return n_assets * (1.0 - serviceability(p_o, p_b))
