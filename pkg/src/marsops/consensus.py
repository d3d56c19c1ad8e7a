"""Propose-vote consensus with quorum, entropy/margin diagnostics and checklist score."""
from __future__ import annotations

import math
import random
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .errors import ConsensusError
from .rng import stable_hash

EPS = 1e-12


@dataclass(frozen=True)
class ConsensusConfig:
    enabled: bool = False
    rounds_R: int = 2
    quorum_theta: float = 0.6

    def __post_init__(self):
        if self.rounds_R < 1:
            raise ConsensusError(f"rounds must be positive, got {self.rounds_R}")
        if not 0.0 < self.quorum_theta <= 1.0:
            raise ConsensusError(f"quorum must lie in (0, 1], got {self.quorum_theta}")


@dataclass(frozen=True)
class Proposal:
    id: str
    proposer: str
    text: str = ""


@dataclass(frozen=True)
class RoundTally:
    round: int
    shares: dict[str, float]
    entropy_D: float
    margin_delta: float
    votes: dict[str, str] = field(default_factory=dict, compare=False)

    def top(self) -> tuple[str, float]:
        """Leading proposal id and share; ties go to the lexicographically smallest id."""
        pid = min(self.shares, key=lambda p: (-self.shares[p], p))
        return pid, self.shares[pid]

    def record(self) -> dict:
        return {"type": "consensus_round", "round": self.round,
                "shares": dict(sorted(self.shares.items())),
                "D": round(self.entropy_D, 12), "delta": round(self.margin_delta, 12)}


@dataclass(frozen=True)
class ConsensusOutcome:
    winner: Proposal | None
    r_star: int
    tallies: tuple[RoundTally, ...]
    by_fiat: bool = False


def vote_entropy(shares: Sequence[float]) -> float:
    """Normalised vote entropy over all proposals (zero-share ones included)."""
    n = len(shares)
    if n <= 1:
        return 0.0
    h = -sum(s * math.log(s + EPS) for s in shares) / math.log(n)
    # The epsilon pushes unanimity a hair below zero and uniform a hair below one.
    return min(1.0, max(0.0, h))


def top_margin(shares: Sequence[float]) -> float:
    ordered = sorted(shares, reverse=True)
    if not ordered:
        return 0.0
    second = ordered[1] if len(ordered) > 1 else 0.0
    return ordered[0] - second


def tally(votes: Mapping[str, str], proposal_ids: Sequence[str], r: int = 1) -> RoundTally:
    """Turn a voter -> proposal-id mapping into shares and diagnostics."""
    if not proposal_ids:
        raise ConsensusError("no proposals")
    if not votes:
        raise ConsensusError("no voters")
    unknown = set(votes.values()) - set(proposal_ids)
    if unknown:
        raise ConsensusError(f"votes for unknown proposals: {sorted(unknown)}")
    n = len(votes)
    counts = Counter(votes.values())
    shares = {pid: counts.get(pid, 0) / n for pid in proposal_ids}
    values = list(shares.values())
    return RoundTally(r, shares, vote_entropy(values), top_margin(values), dict(votes))


def _preference(voter: str, pid: str, salt: int, r: int, bias: Mapping[str, float]) -> float:
    u = stable_hash(voter, pid, salt, r) / 2**64
    return u + bias.get(pid, 0.0)


def run_round(proposals: Iterable[Proposal], voters: Iterable[str], r: int, rng: random.Random, *,
              bias: Mapping[str, float] | None = None,
              fixed_votes: Mapping[str, str] | None = None) -> RoundTally:
    """One voting round.

    Each voter ranks proposals by a keyed hash of (voter, proposal, salt, round),
    where the salt is one draw from ``rng``; ``bias`` adds per-proposal weight and
    ``fixed_votes`` pins individual voters, which lets playbooks stage contested votes.
    """
    props = sorted(proposals, key=lambda p: p.id)
    voter_list = list(dict.fromkeys(voters))
    if not props:
        raise ConsensusError("no proposals")
    if not voter_list:
        raise ConsensusError("no voters")
    ids = [p.id for p in props]
    if len(set(ids)) != len(ids):
        raise ConsensusError("duplicate proposal ids")
    salt = rng.getrandbits(64)
    bias = bias or {}
    fixed = fixed_votes or {}
    votes = {}
    for v in voter_list:
        if v in fixed:
            votes[v] = fixed[v]
        else:
            votes[v] = max(ids, key=lambda pid: (_preference(v, pid, salt, r, bias), pid))
    return tally(votes, ids, r)


def run_consensus(cfg: ConsensusConfig, proposals: Iterable[Proposal], voters: Iterable[str],
                  rng: random.Random, *, bias: Mapping[str, float] | None = None,
                  fixed_votes: Mapping[str, str] | Sequence[Mapping[str, str]] | None = None,
                  ) -> ConsensusOutcome:
    """Vote for up to ``R`` rounds, stopping at the first that reaches quorum.

    ``fixed_votes`` may be one mapping for every round or a per-round sequence.
    When no round reaches quorum the outcome carries ``r_star = R + 1`` and no
    winner; the caller's leader then decides by fiat.
    """
    if not cfg.enabled:
        raise ConsensusError("consensus is disabled in this configuration")
    props = sorted(proposals, key=lambda p: p.id)
    voters = list(voters)
    by_id = {p.id: p for p in props}
    tallies = []
    for r in range(1, cfg.rounds_R + 1):
        if isinstance(fixed_votes, Sequence):
            fixed = fixed_votes[min(r, len(fixed_votes)) - 1] if fixed_votes else None
        else:
            fixed = fixed_votes
        t = run_round(props, voters, r, rng, bias=bias, fixed_votes=fixed)
        tallies.append(t)
        pid, share = t.top()
        if share >= cfg.quorum_theta:
            return ConsensusOutcome(by_id[pid], r, tuple(tallies))
    return ConsensusOutcome(None, cfg.rounds_R + 1, tuple(tallies))


def checklist_score(deliverable_flags: Sequence[bool], n_viol: int = 0, lam: float = 0.0) -> float:
    if not deliverable_flags:
        raise ValueError("need at least one deliverable flag")
    if lam < 0:
        raise ValueError("penalty weight must be non-negative")
    return sum(bool(f) for f in deliverable_flags) / len(deliverable_flags) - lam * n_viol
