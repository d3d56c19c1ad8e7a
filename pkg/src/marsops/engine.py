"""Tick-based scenario execution.

A run resolves the leader, samples controller availability, then plays the
scenario's playbook tick by tick. Every agent invocation is logged as a
``step`` record, every routed message as a ``msg`` record, and all metrics can
be rebuilt from the log alone (:func:`recount`).
"""
from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping, Protocol, Sequence, Union

from .consensus import ConsensusConfig, ConsensusOutcome, Proposal, run_consensus
from .errors import InconsistentLogError, ScenarioError
from .failures import FailureBreakdown, count_failures, evaluate_rules
from .handover import ControlResolution, resolve_all, sample_availability
from .leadership import LeadershipMode, ScenarioPhase, resolve_group, select_leader
from .memory import (ContextItem, MemoryMode, MemoryState, TurnRecord, append_turn,
                     build_context, context_mentions, snapshot)
from .metrics import AmpiConfig, RunMetrics, compute_ampi
from .protocols import TRANSLATOR, Lexicon, ProtocolMode, TranslationRecord, Translator, default_lexicons
from .rng import AVAILABILITY, JITTER, VOTING, substream
from .roster import Kind, Roster, build_default_roster
from .routing import MessageEnvelope, Router, RoutingPolicy, Whitelist
from .scenarios import (ACT, COMMAND, REPORT, SEND, ScenarioScript, Step, check_deliverables,
                        load_scenario, render_report)

FAULTS = ("redline", "interlock_bypass", "seo_rejection", "misread")


@dataclass(frozen=True)
class RunConfig:
    scenario: str = "DailyOperations"
    routing: RoutingPolicy = RoutingPolicy.STRICT
    leadership: LeadershipMode = LeadershipMode.FUNCTIONAL
    switching: bool = True
    memory: MemoryMode = MemoryMode.SHARED
    consensus: ConsensusConfig = ConsensusConfig()
    protocols: ProtocolMode = ProtocolMode.OFF
    outage_p: float = 0.05
    seed: int = 0
    ampi: AmpiConfig = AmpiConfig()
    faults: frozenset[str] = frozenset()
    memory_k: int = 8
    gate_shortcuts_in_emergency: bool = False

    def __post_init__(self):
        object.__setattr__(self, "routing", RoutingPolicy(self.routing))
        object.__setattr__(self, "leadership", LeadershipMode(self.leadership))
        object.__setattr__(self, "memory", MemoryMode(self.memory))
        object.__setattr__(self, "protocols", ProtocolMode(self.protocols))
        object.__setattr__(self, "faults", frozenset(self.faults))
        unknown = self.faults - set(FAULTS)
        if unknown:
            raise ValueError(f"unknown faults: {sorted(unknown)}")
        if not 0.0 <= self.outage_p <= 1.0:
            raise ValueError(f"outage_p must lie in [0, 1], got {self.outage_p}")

    def with_(self, **changes) -> "RunConfig":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "routing": self.routing.value,
            "leadership": self.leadership.value,
            "switching": self.switching,
            "memory": self.memory.value,
            "consensus": {"enabled": self.consensus.enabled, "rounds_R": self.consensus.rounds_R,
                          "quorum_theta": self.consensus.quorum_theta},
            "protocols": self.protocols.value,
            "outage_p": self.outage_p,
            "seed": self.seed,
            "ampi_include_crosslayer": self.ampi.include_crosslayer,
            "faults": sorted(self.faults),
            "memory_k": self.memory_k,
        }


# Actions an agent takes in one invocation. Targets are already resolved ids.

@dataclass(frozen=True)
class SendAction:
    to: str
    text: str
    fact: str | None = None
    recall: str | None = None
    misread: bool = False


@dataclass(frozen=True)
class CommandAction:
    asset: str
    op: str


@dataclass(frozen=True)
class ActAction:
    op: str


@dataclass(frozen=True)
class ReportAction:
    tag: str
    content: str = ""


Action = Union[SendAction, CommandAction, ActAction, ReportAction]


class AgentBehavior(Protocol):
    """Turns an agent's planned actions into the actions it actually takes."""

    def decide(self, agent: str, tick: int, inbox: Sequence[MessageEnvelope],
               context: Sequence[ContextItem], planned: Sequence[Action]) -> list[Action]:
        ...


class ScriptedBehavior:
    """Plays the playbook verbatim."""

    def decide(self, agent, tick, inbox, context, planned):
        return list(planned)


@dataclass
class RunResult:
    config: RunConfig
    scenario: ScenarioScript
    leader: str
    metrics: RunMetrics
    breakdown: FailureBreakdown
    ampi: float
    event_log: list[dict]
    report_text: str
    deliverable_flags: list[bool]
    resolutions: list[ControlResolution]
    translations: list[TranslationRecord] = field(default_factory=list)
    consensus: list[ConsensusOutcome] = field(default_factory=list)
    memory: dict = field(default_factory=dict)

    @property
    def final_report(self) -> dict:
        from .scenarios import parse_report
        return parse_report(self.report_text)

    def log_lines(self) -> list[str]:
        return [json.dumps(rec, sort_keys=True, separators=(",", ":")) for rec in self.event_log]

    def digest(self) -> str:
        return log_digest(self.event_log)

    def write_log(self, path: str | Path) -> None:
        Path(path).write_text("\n".join(self.log_lines()) + "\n", encoding="utf-8")


def log_digest(records: Iterable[Mapping]) -> str:
    h = hashlib.sha256()
    for rec in records:
        h.update(json.dumps(rec, sort_keys=True, separators=(",", ":")).encode())
        h.update(b"\n")
    return h.hexdigest()


def read_log(path: str | Path) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


class _Run:
    """Mutable state of one run; discarded after :func:`run_scenario` returns."""

    def __init__(self, cfg: RunConfig, script: ScenarioScript, roster: Roster,
                 behavior: AgentBehavior, whitelist: Whitelist | None,
                 lexicons: Mapping[str, Lexicon] | None):
        self.cfg = cfg
        self.script = script
        self.roster = roster
        self.behavior = behavior
        self.log: list[dict] = []
        self.emergency = script.phase is ScenarioPhase.EMERGENCY
        self.router = Router(roster, whitelist=whitelist, policy=cfg.routing,
                             gate_shortcuts_in_emergency=cfg.gate_shortcuts_in_emergency)
        self.translator = Translator(lexicons if lexicons is not None else default_lexicons())
        self.jitter = substream(cfg.seed, JITTER)
        self.voting = substream(cfg.seed, VOTING)
        self.leader = select_leader(script, cfg.leadership, roster)
        members = {m for g in script.participants for m in roster.members(g)
                   if roster[m].kind is Kind.HUMAN}
        self.memory = MemoryState(k=cfg.memory_k, shared_members=frozenset(members | {self.leader}))
        self.inbox: dict[str, list[MessageEnvelope]] = {}
        self.facts: dict[str, str] = {}
        self.controllers: dict[str, str | None] = {}
        self.translations: list[TranslationRecord] = []
        self.outcomes: list[ConsensusOutcome] = []
        self.sections: dict[str, dict[str, str]] = {}
        self.tick_events: list[dict] = []

    # -- resolution ---------------------------------------------------------

    def resolve(self, spec: str | None) -> str | None:
        if spec is None:
            return None
        if spec == "@leader":
            return self.leader
        if spec.startswith("@controller:"):
            asset = spec.split(":", 1)[1]
            if asset not in self.controllers:
                raise ScenarioError(f"{self.script.id}: {asset} is not a scenario asset")
            return self.controllers[asset]
        if spec in self.roster:
            return spec
        return resolve_group(self.roster, spec)

    # -- primitives ---------------------------------------------------------

    def step(self, tick: int, actor: str, reason: str) -> None:
        self.log.append({"type": "step", "tick": tick, "actor": actor, "reason": reason})

    def route(self, sender: str, recipient: str, text: str, tick: int, *,
              policy: RoutingPolicy | None = None, via: str | None = None) -> MessageEnvelope:
        payload = f"{text} (ref {self.jitter.randrange(10000):04d})"
        env = self.router.send(sender, recipient, payload, tick, emergency=self.emergency,
                               policy=policy, via=via)
        self.log.append({**env.record(), "payload": payload})
        if env.path.hub is not None:
            self.step(tick, env.path.hub, "relay")
        self.inbox.setdefault(recipient, []).append(env)
        return env

    def remember(self, tick: int, speaker: str, text: str, audience: str) -> None:
        append_turn(self.memory, self.cfg.memory,
                    TurnRecord(tick, speaker, text, self.script.id, (audience,)))

    def event(self, rec: dict) -> None:
        self.log.append(rec)
        self.tick_events.append(rec)

    # -- actions ------------------------------------------------------------

    def recall(self, tick: int, actor: str, key: str) -> None:
        owner = self.facts.get(key)
        if owner is None or owner == actor:
            return
        ctx = build_context(self.memory, self.cfg.memory, actor, tick)
        if context_mentions(ctx, f"[fact:{key}]"):
            return
        self.log.append({"type": "recall_miss", "tick": tick, "actor": actor, "fact": key})
        self.route(actor, owner, f"re-ask: please restate {key}", tick)
        self.remember(tick, actor, f"re-ask {key}", owner)
        self.step(tick, owner, "reask")
        answer = f"[fact:{key}] restated for {actor}"
        self.route(owner, actor, answer, tick)
        self.remember(tick, owner, answer, actor)

    def send(self, tick: int, actor: str, act: SendAction) -> None:
        if act.to is None:
            self.log.append({"type": "msg_dropped", "tick": tick, "sender": actor,
                             "reason": "no controller"})
            return
        if act.to == actor:
            return
        if act.recall:
            self.recall(tick, actor, act.recall)
        text = f"[fact:{act.fact}] {act.text}" if act.fact else act.text
        if act.fact:
            self.facts[act.fact] = actor
        self.route(actor, act.to, text, tick)
        self.remember(tick, actor, text, act.to)
        src, dst = self.roster.group_of(actor), self.roster.group_of(act.to)
        translated = False
        if (self.cfg.protocols is ProtocolMode.HETERO and src != dst
                and TRANSLATOR not in (actor, act.to)
                and self.translator.covers(src) and self.translator.covers(dst)):
            out, rec = self.translator.translate(act.text, src, dst)
            self.translations.append(rec)
            self.log.append({**rec.record(), "tick": tick, "sender": actor, "recipient": act.to})
            self.step(tick, TRANSLATOR, "translate")
            self.router.relay(TRANSLATOR, act.to, out, tick, via="translator")
            env = self.router.audit[-1]
            self.log.append({**env.record(), "payload": out})
            translated = True
        if (act.misread and not translated and self.cfg.protocols is ProtocolMode.OFF
                and "misread" in self.cfg.faults):
            self.event({"type": "action", "tick": tick, "actor": act.to, "op": "act_on_misread"})

    def command(self, tick: int, actor: str, act: CommandAction) -> None:
        self.route(actor, act.asset, f"command {act.op}", tick)
        self.event({"type": "command", "tick": tick, "actor": actor, "asset": act.asset, "op": act.op})

    def report(self, tick: int, actor: str, act: ReportAction) -> None:
        spec = next((d for d in self.script.deliverables if d.section_tag == act.tag), None)
        content = act.content or (spec.title if spec else act.tag)
        fields = {"owner": actor, "time_tag": f"T+{tick}", "content": content}
        self.sections[act.tag] = fields
        self.log.append({"type": "report_section", "tick": tick, "actor": actor, "tag": act.tag,
                         "fields": fields})

    def planned(self, s: Step) -> Action:
        if s.action == SEND:
            return SendAction(self.resolve(s.target), s.text, s.fact, s.recall, s.misread)
        if s.action == COMMAND:
            return CommandAction(s.target, s.text)
        if s.action == ACT:
            return ActAction(s.text)
        if s.action == REPORT:
            return ReportAction(s.target)
        raise ScenarioError(f"unknown action {s.action!r}")

    def invoke(self, tick: int, actor: str, steps: list[Step]) -> None:
        self.step(tick, actor, "playbook")
        ctx = build_context(self.memory, self.cfg.memory, actor, tick)
        inbox = self.inbox.pop(actor, [])
        planned = [self.planned(s) for s in steps]
        for act in self.behavior.decide(actor, tick, inbox, ctx, planned):
            if isinstance(act, SendAction):
                self.send(tick, actor, act)
            elif isinstance(act, CommandAction):
                self.command(tick, actor, act)
            elif isinstance(act, ActAction):
                self.event({"type": "action", "tick": tick, "actor": actor, "op": act.op})
            elif isinstance(act, ReportAction):
                self.report(tick, actor, act)

    def consensus(self, tick: int) -> None:
        hook = self.script.consensus_hook
        leader = self.leader
        strict = RoutingPolicy.STRICT
        proposals = []
        for pid, proposer_spec, text in hook.proposals:
            proposer = self.resolve(proposer_spec)
            proposals.append(Proposal(pid, proposer, text))
            self.step(tick, proposer, "propose")
            if proposer != leader:
                self.route(proposer, leader, f"proposal {pid}: {text}", tick, policy=strict)
        voters = [self.resolve(v) for v in hook.voters]
        outcome = run_consensus(self.cfg.consensus, proposals, voters, self.voting, bias=hook.bias)
        for t in outcome.tallies:
            for v in voters:
                self.step(tick, v, "vote")
                if v != leader:
                    self.route(v, leader, f"vote r{t.round}: {t.votes[v]}", tick, policy=strict)
            self.log.append({**t.record(), "tick": tick})
        if outcome.winner is None:
            self.step(tick, leader, "fiat")
            target = next((v for v in voters if v != leader), None) or next(
                p.proposer for p in proposals if p.proposer != leader)
            chosen = min(p.id for p in proposals)
            self.route(leader, target, f"decision by leader: {chosen}", tick, policy=strict)
        self.outcomes.append(outcome)
        self.log.append({"type": "consensus_outcome", "tick": tick,
                         "winner": outcome.winner.id if outcome.winner else None,
                         "r_star": outcome.r_star, "by_fiat": outcome.winner is None})

    # -- driver -------------------------------------------------------------

    def run(self) -> list[ControlResolution]:
        cfg, script, roster = self.cfg, self.script, self.roster
        self.log.append({
            "type": "header", "scenario": script.id, "leader": self.leader, "config": cfg.to_dict(),
            "deliverables": [{"tag": d.section_tag, "required": list(d.required_fields)}
                             for d in script.deliverables],
        })
        avail = sample_availability(roster, cfg.outage_p, substream(cfg.seed, AVAILABILITY))
        self.log.append({"type": "availability", "offline": avail.offline()})
        resolutions = resolve_all(roster, avail, cfg.switching, script.assets)
        for r in resolutions:
            self.controllers[r.asset] = r.controller
            if r.was_switch:
                self.log.append({"type": "role_switch", "tick": 0, "asset": r.asset,
                                 "from": r.primary, "to": r.controller})
            elif r.controller is None:
                self.log.append({"type": "unserviceable", "tick": 0, "asset": r.asset,
                                 "primary": r.primary})

        by_tick: dict[int, list[Step]] = {}
        for s in script.playbook:
            if s.fault is None or s.fault in cfg.faults:
                by_tick.setdefault(s.tick, []).append(s)
        hook_tick = script.consensus_hook.tick if (
            script.consensus_hook is not None and cfg.consensus.enabled) else None
        ticks = sorted(set(by_tick) | ({hook_tick} if hook_tick is not None else set()))

        for tick in ticks:
            self.tick_events = []
            per_actor: dict[str, list[Step]] = {}
            for s in by_tick.get(tick, []):
                actor = self.resolve(s.actor)
                if actor is None:
                    asset = s.actor.split(":", 1)[1]
                    kind = "command_dropped" if s.action == COMMAND else "msg_dropped"
                    self.log.append({"type": kind, "tick": tick, "asset": asset,
                                     "op": s.text, "reason": "no controller"})
                    continue
                per_actor.setdefault(actor, []).append(s)
            for actor in sorted(per_actor, key=roster.order):
                self.invoke(tick, actor, per_actor[actor])
            if tick == hook_tick:
                self.consensus(tick)
            for v in evaluate_rules(script.constraints, self.tick_events):
                self.log.append(v.record())
        return resolutions


def run_scenario(cfg: RunConfig, roster: Roster | None = None, *,
                 scenario: ScenarioScript | None = None, behavior: AgentBehavior | None = None,
                 whitelist: Whitelist | None = None,
                 lexicons: Mapping[str, Lexicon] | None = None) -> RunResult:
    """Run one scenario under ``cfg``; identical inputs give a byte-identical log."""
    started = time.perf_counter()
    roster = roster if roster is not None else build_default_roster()
    script = scenario if scenario is not None else load_scenario(cfg.scenario)
    run = _Run(cfg, script, roster, behavior or ScriptedBehavior(), whitelist, lexicons)
    resolutions = run.run()

    report_text = render_report(script.id, run.sections)
    flags = check_deliverables(report_text, script)
    breakdown = count_failures(run.log, resolutions, flags)
    counters = run.router.counters
    cross = counters.n_cross / counters.n_msg if counters.n_msg else 0.0
    metrics = RunMetrics(
        time_T=sum(1 for r in run.log if r["type"] == "step"),
        msgs_M=counters.n_msg,
        cross_C=cross,
        failures_F=breakdown.f_total,
        switches_S=sum(1 for r in resolutions if r.was_switch),
        wall_clock_s=time.perf_counter() - started,
    )
    return RunResult(
        config=cfg, scenario=script, leader=run.leader, metrics=metrics, breakdown=breakdown,
        ampi=compute_ampi(metrics, cfg.ampi), event_log=run.log, report_text=report_text,
        deliverable_flags=flags, resolutions=resolutions, translations=run.translations,
        consensus=run.outcomes, memory=snapshot(run.memory),
    )


def recount_log(log: Sequence[Mapping]) -> tuple[RunMetrics, FailureBreakdown]:
    """Rebuild metrics from log records alone."""
    steps = sum(1 for r in log if r.get("type") == "step")
    msgs = [r for r in log if r.get("type") == "msg"]
    n_msg = sum(r["hops"] for r in msgs)
    n_cross = sum(1 for r in msgs if r["is_cross_layer"])
    switches = sum(1 for r in log if r.get("type") == "role_switch")
    header = next((r for r in log if r.get("type") == "header"), None)
    sections = {r["tag"]: r["fields"] for r in log if r.get("type") == "report_section"}
    n_miss = 0
    for d in (header or {}).get("deliverables", []):
        fields = sections.get(d["tag"])
        if not fields or not all(str(fields.get(f, "")).strip() for f in d["required"]):
            n_miss += 1
    n_asset = len({r["asset"] for r in log if r.get("type") == "unserviceable"})
    n_viol = sum(1 for r in log if r.get("type") == "violation")
    breakdown = FailureBreakdown(n_asset, n_viol, n_miss)
    metrics = RunMetrics(steps, n_msg, n_cross / n_msg if n_msg else 0.0, breakdown.f_total, switches)
    return metrics, breakdown


def recount(result: RunResult | Sequence[Mapping]) -> RunMetrics:
    """Recount a run from its log; for a :class:`RunResult`, cross-check the stored metrics."""
    if not isinstance(result, RunResult):
        return recount_log(result)[0]
    metrics, breakdown = recount_log(result.event_log)
    if metrics != result.metrics or breakdown != result.breakdown:
        raise InconsistentLogError(
            f"log recount {metrics}/{breakdown} disagrees with run {result.metrics}/{result.breakdown}")
    return metrics
