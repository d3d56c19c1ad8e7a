"""Built-in scenario scripts and their deliverable checkers.

Playbooks are fixed action scripts. Actor and target specs are resolved at run
time:

* ``"@leader"`` -- the run leader,
* ``"@controller:ASSET"`` -- whoever currently controls ``ASSET`` (may be nobody),
* a group tag such as ``"GEO"`` -- that group's lowest-numbered member,
* anything else -- a literal agent id.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import ScenarioError
from .failures import ConstraintRule, RuleKind
from .leadership import ScenarioPhase

REQUIRED_FIELDS = ("owner", "time_tag", "content")

SEND, COMMAND, ACT, REPORT = "send", "command", "act", "report"


@dataclass(frozen=True)
class DeliverableSpec:
    index: int
    section_tag: str
    title: str = ""
    required_fields: tuple[str, ...] = REQUIRED_FIELDS


@dataclass(frozen=True)
class Step:
    tick: int
    actor: str
    action: str
    target: str | None = None
    text: str = ""
    fact: str | None = None      # key this message establishes
    recall: str | None = None    # key the actor must remember before acting
    misread: bool = False
    fault: str | None = None     # only played when this fault is injected

    def to_dict(self) -> dict:
        d = {"tick": self.tick, "actor": self.actor, "action": self.action}
        for name in ("target", "text", "fact", "recall", "fault"):
            value = getattr(self, name)
            if value:
                d[name] = value
        if self.misread:
            d["misread"] = True
        return d


@dataclass(frozen=True)
class ConsensusHook:
    tick: int
    proposals: tuple[tuple[str, str, str], ...]  # (id, proposer spec, text)
    voters: tuple[str, ...]
    bias: Mapping[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"tick": self.tick, "proposals": [list(p) for p in self.proposals],
                "voters": list(self.voters), "bias": dict(self.bias)}


@dataclass(frozen=True)
class ScenarioScript:
    id: str
    phase: ScenarioPhase
    seed_prompt: str
    leader_order: tuple[str, ...]
    participants: frozenset[str]
    assets: tuple[str, ...]
    deliverables: tuple[DeliverableSpec, ...]
    constraints: tuple[ConstraintRule, ...]
    playbook: tuple[Step, ...]
    consensus_hook: ConsensusHook | None = None
    title: str = ""

    def __post_init__(self):
        tags = [d.section_tag for d in self.deliverables]
        if len(set(tags)) != len(tags):
            raise ScenarioError(f"{self.id}: duplicate deliverable section tags")

    @property
    def J(self) -> int:
        return len(self.deliverables)

    @property
    def last_tick(self) -> int:
        ticks = [s.tick for s in self.playbook]
        if self.consensus_hook is not None:
            ticks.append(self.consensus_hook.tick)
        return max(ticks, default=0)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "title": self.title,
            "phase": self.phase.value,
            "seed_prompt": self.seed_prompt,
            "leader_order": list(self.leader_order),
            "participants": sorted(self.participants),
            "assets": list(self.assets),
            "deliverables": [
                {"index": d.index, "section_tag": d.section_tag, "title": d.title,
                 "required_fields": list(d.required_fields)} for d in self.deliverables
            ],
            "constraints": [r.to_dict() for r in self.constraints],
            "playbook": [s.to_dict() for s in self.playbook],
            "consensus_hook": self.consensus_hook.to_dict() if self.consensus_hook else None,
        }


def scenario_from_dict(d: Mapping) -> ScenarioScript:
    try:
        hook = d.get("consensus_hook")
        return ScenarioScript(
            id=d["id"],
            title=d.get("title", d["id"]),
            phase=ScenarioPhase(d.get("phase", "Other")),
            seed_prompt=d.get("seed_prompt", ""),
            leader_order=tuple(d.get("leader_order", ())),
            participants=frozenset(d.get("participants", ())),
            assets=tuple(d.get("assets", ())),
            deliverables=tuple(
                DeliverableSpec(x["index"], x["section_tag"], x.get("title", ""),
                                tuple(x.get("required_fields", REQUIRED_FIELDS)))
                for x in d.get("deliverables", ())
            ),
            constraints=tuple(ConstraintRule.from_dict(r) for r in d.get("constraints", ())),
            playbook=tuple(Step(**s) for s in d.get("playbook", ())),
            consensus_hook=None if not hook else ConsensusHook(
                hook["tick"], tuple(tuple(p) for p in hook["proposals"]), tuple(hook["voters"]),
                dict(hook.get("bias", {})),
            ),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ScenarioError(f"invalid scenario document: {exc}") from exc


def load_scenario_file(path: str | Path) -> list[ScenarioScript]:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    items = doc if isinstance(doc, list) else doc.get("scenarios", [doc])
    return [scenario_from_dict(x) for x in items]


# ---------------------------------------------------------------- playbook DSL

def _send(actor, to, text, **kw):
    return (SEND, actor, to, text, kw)


def _alert(asset, text):
    return (SEND, asset, f"@controller:{asset}", text, {})


def _cmd(asset, op, **kw):
    return (COMMAND, f"@controller:{asset}", asset, op, kw)


def _act(actor, op, **kw):
    return (ACT, actor, None, op, kw)


def _ticks(*ticks) -> list[Step]:
    steps = []
    for t, items in enumerate(ticks, 1):
        for action, actor, target, text, kw in items:
            steps.append(Step(t, actor, action, target, text, **kw))
    return steps


def _with_reports(steps: list[Step], deliverables: Sequence[DeliverableSpec], tick: int) -> tuple[Step, ...]:
    reports = [Step(tick, "@leader", REPORT, d.section_tag) for d in deliverables]
    return tuple(steps + reports)


def _deliverables(*items: tuple[str, str]) -> tuple[DeliverableSpec, ...]:
    return tuple(DeliverableSpec(i, tag, title) for i, (tag, title) in enumerate(items, 1))


def _rules(sid: str, *items: tuple[str, RuleKind, dict, str]) -> tuple[ConstraintRule, ...]:
    return tuple(ConstraintRule(f"{sid}.{name}", sid, kind, match, desc) for name, kind, match, desc in items)


@lru_cache(maxsize=1)
def _prompts() -> dict:
    text = resources.files("marsops.data").joinpath("prompts.json").read_text(encoding="utf-8")
    return json.loads(text)


def _misread_rule(sid: str) -> tuple[str, RuleKind, dict, str]:
    return ("misread", RuleKind.REDLINE, {"type": "action", "op": "act_on_misread"},
            "plan step executed on a misread cross-specialty message")


def _build(sid, phase, leader_order, participants, assets, deliverables, rules, ticks, hook=None):
    prompt = _prompts()[sid]
    steps = _ticks(*ticks)
    last = max((s.tick for s in steps), default=0)
    if hook is not None:
        last = max(last, hook.tick)
    return ScenarioScript(
        id=sid,
        title=prompt["title"],
        phase=phase,
        seed_prompt=prompt["prompt"],
        leader_order=tuple(leader_order),
        participants=frozenset(participants),
        assets=tuple(assets),
        deliverables=deliverables,
        constraints=_rules(sid, *rules, _misread_rule(sid)),
        playbook=_with_reports(steps, deliverables, last + 1),
        consensus_hook=hook,
    )


def _daily_operations():
    sid = "DailyOperations"
    groups = ["MED", "NUR", "LSS", "PWR", "ISRU", "AGRI", "GEO", "EVA", "COM", "LOGT", "MNT", "DKM", "PSY"]
    assets = ["HAB_01", "HAB_02", "HAB_03", "SOL_CTRL_01", "NUKE_CTRL_01", "ISRU_PLANT_01",
              "GH_CTRL_01", "GH_CTRL_02", "ROV_SCI_01", "ROV_INSP_01", "ROV_CARGO_01",
              "UAV_MAP_01", "UAV_COM_01", "PRT_CTRL_01", "ARM_CTRL_01"]
    return _build(
        sid, ScenarioPhase.DAILY_OPS, ["OPS", "CMD"], groups + ["OPS", "CMD", "AI"], assets,
        _deliverables(("agenda", "8-h agenda with owners and time tags"),
                      ("resource_allocation", "resource allocation summary"),
                      ("risks_abort_thresholds", "risks & abort thresholds"),
                      ("status_note", "end-of-run status note")),
        [("interlock", RuleKind.INTERLOCK_BYPASS,
          {"type": "command", "asset": "AIRLOCK_CTRL_01", "op": "bypass_interlock"},
          "safety interlock overridden during routine operations"),
         ("battery_reserve", RuleKind.REDLINE,
          {"type": "command", "asset": "SOL_CTRL_01", "op": "drain_battery_reserve"},
          "battery reserve drawn below the stand-up floor")],
        [
            [_send("@leader", g, f"stand-up: report overnight telemetry and priorities for {g}") for g in groups],
            [_send(g, "@leader", f"{g} status nominal, priorities filed", fact=f"{g}_STATUS") for g in groups],
            [_send("GEO", "AI", "plan survey of hydrated silicates along traverse line; need planned slope instability map"),
             _send("PWR", "AI", "forecast power budget and state of charge for the sol"),
             _send("@leader", "CMD", "draft agenda: power/water/crew-time allocation",
                   recall="PWR_STATUS")]
            + [_cmd(a, "confirm_heartbeat") for a in assets],
            [_send("EVA", "@leader", "EVA slot request checked against power plan", recall="PWR_STATUS"),
             _cmd("SOL_CTRL_01", "drain_battery_reserve", fault="redline")],
        ],
        ConsensusHook(3, (("P1", "PWR", "favour ISRU jobs in the power window"),
                          ("P2", "EVA", "favour EVA/ROV jobs in the power window")),
                      ("OPS_01", "CMD_01", "PWR_01", "EVA_01", "LSS_01")),
    )


def _emergency_response():
    sid = "EmergencyResponse"
    assets = ["HAB_01", "HAB_02", "HAB_03", "SOL_CTRL_01", "NUKE_CTRL_01", "ISRU_PLANT_01",
              "GH_CTRL_01", "GH_CTRL_02"]
    teams = ["OPS", "LSS", "PWR", "ISRU", "MNT", "MED", "NUR", "LOGT", "GEO", "DKM"]
    return _build(
        sid, ScenarioPhase.EMERGENCY, ["CMD", "OPS"], teams + ["CMD", "EVA", "AI"], assets,
        _deliverables(("stabilization_plan", "30-min stabilization plan"),
                      ("incident_command", "incident command structure (who leads what)"),
                      ("task_list_timers", "prioritized task list with timers"),
                      ("return_to_nominal", "return-to-nominal criteria & handoff")),
        [("redline_stop", RuleKind.REDLINE,
          {"type": "command", "asset": "NUKE_CTRL_01", "op": "override_redline"},
          "operation continued past a redline instead of stopping"),
         ("seo_reject", RuleKind.SEO_REJECTION, {"type": "action", "op": "restart_suit_uncleared"},
          "suit returned to service after the safety officer rejected it")],
        [
            [_send("@leader", g, f"compound alert: {g} report margins now") for g in teams],
            [_send("PWR", "@leader", "microgrid sag isolated, power budget reduced", fact="PWR_MARGIN"),
             _send("LSS", "@leader", "scrubber load high, pressure drop none", fact="LSS_MARGIN"),
             _send("MED", "@leader", "crew vitals stable", fact="MED_STATUS"),
             _send("PWR", "AI", "forecast power budget and shed trigger"),
             _send("LSS", "AI", "model loop temperature redline margin")],
            [_cmd(a, "auto_protect") for a in assets]
            + [_send("@leader", "OPS", "replan near-term ops around the power margin", recall="PWR_MARGIN"),
               _send("EVA", "@leader", "suit hardware check complete"),
               _cmd("NUKE_CTRL_01", "override_redline", fault="redline"),
               _act("EVA", "restart_suit_uncleared", fault="seo_rejection")],
            [_send("OPS", "LSS", "confirm life support margin before handoff", recall="LSS_MARGIN")],
        ],
        ConsensusHook(2, (("P1", "PWR", "shed ISRU load first"), ("P2", "LSS", "shed greenhouse load first")),
                      ("CMD_01", "OPS_01", "PWR_01", "LSS_01", "ISRU_01")),
    )


def _science_exploration():
    sid = "ScienceExploration"
    return _build(
        sid, ScenarioPhase.SCIENCE, ["GEO", "BIO", "OPS"], ["GEO", "BIO", "OPS", "AI", "COM", "EVA"],
        ["ROV_SCI_01", "UAV_MAP_01"],
        _deliverables(("route_waypoints", "route with waypoints & hazards"),
                      ("sample_list_custody", "sample list with rationale & custody steps"),
                      ("comms_plan", "comms plan"),
                      ("go_no_go", "go/no-go with aborts and a contingency route")),
        [("thermal_limit", RuleKind.REDLINE,
          {"type": "command", "asset": "ROV_SCI_01", "op": "drive_past_thermal_limit"},
          "rover driven beyond sunlight/thermal limits")],
        [
            [_send("GEO", "AI", "survey hydrated silicates at the rim; check traverse line for slope instability",
                   misread=True),
             _send("GEO", "COM", "need contact slot and ridge repeater coverage along traverse line")],
            [_send("@leader", "OPS", "traverse plan ready for approval"),
             _cmd("ROV_SCI_01", "precheck"),
             _cmd("UAV_MAP_01", "mapping_pass"),
             _cmd("ROV_SCI_01", "drive_past_thermal_limit", fault="redline")],
        ],
        ConsensusHook(2, (("P1", "GEO", "rim traverse"), ("P2", "BIO", "plain traverse")),
                      ("GEO_01", "BIO_01", "OPS_01", "AI_02", "COM_01")),
    )


def _gh_bio_outbreak():
    sid = "GH_BioOutbreak"
    return _build(
        sid, ScenarioPhase.OTHER, ["AGRI", "BIO", "OPS"], ["AGRI", "BIO", "LSS", "OPS", "PSY", "LAB", "AI"],
        ["GH_CTRL_01", "GH_CTRL_02"],
        _deliverables(("quarantine_plan", "quarantine plan (zones, PPE, duration)"),
                      ("sampling_lab_tests", "sampling & lab tests using LAB_INSTR"),
                      ("setpoint_changes", "greenhouse setpoint changes"),
                      ("clear_criteria", "success/clear criteria and monitoring cadence")),
        [("cross_contamination", RuleKind.REDLINE,
          {"type": "command", "asset": "GH_CTRL_01", "op": "share_airflow_with_zone2"},
          "zone airflow opened across a quarantine boundary")],
        [
            [_alert("GH_CTRL_02", "leaf spotting, spore counts rising in zone 2"),
             _send("AGRI_03", "AGRI", "pathogen risk in zone 2, blight spread suspected", fact="GH_SPORES")],
            [_send("@leader", "BIO", "diagnose zone 2 spore spread", recall="GH_SPORES"),
             _send("@leader", "LSS", "assess circulation and filter implications"),
             _send("@leader", "OPS", "quarantine under consideration")],
            [_send("BIO", "AI", "model spore loading and containment breach risk"),
             _send("BIO", "@leader", "fungal pathogen likely, sterile swab kit sampling needed", fact="BIO_DX"),
             _send("LSS", "AI", "recompute dust ingress through filter canister stages"),
             _send("BIO", "LAB", "request culture plates on LAB_INSTR", recall="GH_SPORES")],
            [_cmd("GH_CTRL_01", "isolate_zone"), _cmd("GH_CTRL_02", "adjust_setpoints"),
             _send("@leader", "PSY", "crew food-supply reassurance needed"),
             _cmd("GH_CTRL_01", "share_airflow_with_zone2", fault="redline")],
        ],
        ConsensusHook(4, (("P1", "AGRI", "full quarantine"), ("P2", "BIO", "zone 2 quarantine only")),
                      ("AGRI_01", "BIO_01", "OPS_01", "PSY_01")),
    )


def _comms_blackout_eva():
    sid = "CommsBlackoutEVA"
    return _build(
        sid, ScenarioPhase.OTHER, ["OPS", "COM", "GEO"], ["OPS", "COM", "GEO", "AI", "EVA"], ["UAV_COM_01"],
        _deliverables(("eva_timeline", "EVA timeline"),
                      ("comms_plan", "comms plan (waypoints, altitudes, timing)"),
                      ("loss_of_relay_actions", "emergency actions for loss of relay"),
                      ("go_no_go", "go/no-go with abort thresholds")),
        [("consumables", RuleKind.REDLINE,
          {"type": "action", "op": "extend_eva_past_consumables"},
          "EVA extended past suit consumable limits"),
         ("blackout_go", RuleKind.SEO_REJECTION, {"type": "action", "op": "enter_shadow_without_callout"},
          "crew entered the RF shadow without the rejected callout plan")],
        [
            [_send("@leader", "EVA", "EVA route crosses RF shadow; build timeline"),
             _send("@leader", "COM", "link budget and relay plan for the shadow"),
             _send("@leader", "GEO", "hazard review for the EVA route")],
            [_send("GEO", "COM", "traverse line hazards: slope instability near ridge repeater gap",
                   misread=True),
             _send("GEO", "AI", "flag slope instability for keyframe checks"),
             _send("COM", "AI", "relay node loiter plan; link window timing for SLAM keyframes")],
            [_cmd("UAV_COM_01", "loiter_relay"),
             _send("COM", "@leader", "comms plan ready", fact="COMMS_PLAN"),
             _send("EVA", "@leader", "EVA timeline with timed callouts"),
             _act("EVA", "extend_eva_past_consumables", fault="redline")],
        ],
        ConsensusHook(3, (("P1", "COM", "video-first bandwidth split"), ("P2", "AI", "telemetry-first split")),
                      ("OPS_01", "COM_01", "COM_02", "AI_02", "AI_04")),
    )


def _isru_off_nominal():
    sid = "ISRU_OffNominal"
    return _build(
        sid, ScenarioPhase.OTHER, ["ISRU", "PWR", "OPS"], ["ISRU", "PWR", "LAB", "OPS", "AI"],
        ["ISRU_PLANT_01"],
        _deliverables(("root_cause_hypotheses", "root-cause hypotheses and quick tests"),
                      ("derate_schedule", "safe derate schedule"),
                      ("spares_assay_requests", "spares/assay requests to LAB_INSTR"),
                      ("return_to_service", "return-to-service checklist")),
        [("thermal_redline", RuleKind.REDLINE,
          {"type": "command", "asset": "ISRU_PLANT_01", "op": "exceed_thermal_redline"},
          "cell temperature pushed past the thermal redline"),
         ("o2_buffer", RuleKind.REDLINE, {"type": "action", "op": "draw_o2_buffer"},
          "base oxygen buffer drawn down during triage")],
        [
            [_alert("ISRU_PLANT_01", "oxygen throughput 16 kg/day, cell temperature oscillating"),
             _send("ISRU_03", "ISRU", "catalyst fouling or feedstock moisture suspected", fact="ISRU_TRIAGE")],
            [_send("@leader", "PWR", "check supply peaks before derate"),
             _send("ISRU", "AI", "fit oxygen throughput drop against catalyst fouling model")],
            [_cmd("ISRU_PLANT_01", "derate"),
             _cmd("ISRU_PLANT_01", "exceed_thermal_redline", fault="redline")],
        ],
    )


def _cyber_anomaly():
    sid = "CyberAnomaly"
    return _build(
        sid, ScenarioPhase.OTHER, ["COM", "OPS", "DKM"], ["COM", "OPS", "DKM", "AI"],
        ["NET_SEC_CTRL_01", "HAB_02"],
        _deliverables(("incident_timeline", "incident timeline"),
                      ("containment_actions", "containment/segmentation actions"),
                      ("impact_assessment", "impact assessment"),
                      ("recovery_monitoring", "recovery plan & monitoring")),
        [("life_critical", RuleKind.REDLINE,
          {"type": "command", "asset": "HAB_02", "op": "power_off"},
          "life-critical habitat controller taken offline"),
         ("audit_gap", RuleKind.SEO_REJECTION,
          {"type": "command", "asset": "NET_SEC_CTRL_01", "op": "disable_logging"},
          "logging disabled against the audit requirement")],
        [
            [_alert("NET_SEC_CTRL_01", "unusual outbound traffic from HAB_02 at 02:17"),
             _send("COM_04", "COM", "possible exfiltration from HAB_02", fact="CYBER_ALERT")],
            [_send("@leader", "DKM", "threat hypotheses needed"),
             _send("@leader", "OPS", "segmentation may affect habitat telemetry"),
             _send("COM", "AI", "verify relay node integrity and status packet signatures")],
            [_cmd("NET_SEC_CTRL_01", "segment_vlan"), _cmd("HAB_02", "restrict_outbound"),
             _send("DKM", "@leader", "misconfigured allowlist more likely than malware"),
             _cmd("NET_SEC_CTRL_01", "disable_logging", fault="seo_rejection")],
        ],
        ConsensusHook(3, (("P1", "COM", "strict segmentation"), ("P2", "DKM", "targeted segmentation")),
                      ("COM_01", "OPS_01", "AI_02", "DKM_01")),
    )


def _dust_storm():
    sid = "DustStormCurtail"
    return _build(
        sid, ScenarioPhase.OTHER, ["PWR", "OPS"], ["PWR", "OPS", "DKM", "LSS", "COM", "AI"],
        ["SOL_CTRL_01", "NUKE_CTRL_01"],
        _deliverables(("curtailment_schedule", "curtailment schedule & priorities"),
                      ("energy_budget", "energy budget"),
                      ("crew_plan", "crew plan"),
                      ("restart_criteria", "restart criteria post-storm")),
        [("storage_floor", RuleKind.REDLINE,
          {"type": "command", "asset": "NUKE_CTRL_01", "op": "exceed_dispatch_redline"},
          "reactor dispatch pushed past its redline")],
        [
            [_send("DKM", "@leader", "storm in 18 h, optical depth 1.2 to 2.8", fact="STORM")],
            [_send("@leader", "OPS", "staffing and guard plan for the storm"),
             _send("@leader", "LSS", "reserve battery for life support"),
             _send("PWR", "AI", "forecast power budget under panel soiling")],
            [_cmd("SOL_CTRL_01", "stow_and_clean"), _cmd("NUKE_CTRL_01", "reserve_dispatch"),
             _cmd("NUKE_CTRL_01", "exceed_dispatch_redline", fault="redline")],
        ],
    )


def _hab_leak():
    sid = "HAB_LeakReconfig"
    return _build(
        sid, ScenarioPhase.OTHER, ["LSS", "OPS", "MNT"], ["LSS", "OPS", "MNT", "AI"],
        ["HAB_01", "ROV_INSP_01", "AIRLOCK_CTRL_01"],
        _deliverables(("isolation_plan", "isolation plan and commands"),
                      ("leak_locate", "leak-locate procedure"),
                      ("patch_verification", "patch & verification steps"),
                      ("dwell_all_clear", "dwell time limits and all-clear criteria")),
        [("interlock_bypass", RuleKind.INTERLOCK_BYPASS,
          {"type": "command", "asset": "AIRLOCK_CTRL_01", "op": "bypass_interlock"},
          "airlock interlock bypassed during reconfiguration"),
         ("habitable_zone", RuleKind.REDLINE,
          {"type": "command", "asset": "HAB_01", "op": "vent_habitable_zone"},
          "habitable zone depressurised")],
        [
            [_alert("HAB_01", "pressure drop 0.2 kPa/min in ring B"),
             _send("LSS_05", "LSS", "ring B leak, isolation required", fact="LEAK")],
            [_send("@leader", "MNT", "localize leak in ring B"),
             _send("@leader", "OPS", "ring B isolation in progress")],
            [_cmd("ROV_INSP_01", "inspect_ring_b"), _cmd("HAB_01", "isolate_ring_b"),
             _send("MNT", "AI", "localize seal leak from inspection video"),
             _cmd("AIRLOCK_CTRL_01", "bypass_interlock", fault="interlock_bypass")],
        ],
    )


def _medical_outbreak():
    sid = "MedicalOutbreakDrill"
    return _build(
        sid, ScenarioPhase.OTHER, ["MED", "OPS", "NUR"], ["MED", "OPS", "NUR", "PSY", "LOGT"], [],
        _deliverables(("case_definition", "case definition and cohorting"),
                      ("ward_ppe_plan", "ward/PPE plan"),
                      ("treatment_testing", "treatment & testing algorithm"),
                      ("clearance_rules", "clearance & return-to-work rules"),
                      ("comms_to_base", "comms to base")),
        [("clinic_overload", RuleKind.REDLINE, {"type": "action", "op": "admit_beyond_capacity"},
          "clinic admitted beyond capacity"),
         ("early_release", RuleKind.SEO_REJECTION, {"type": "action", "op": "release_isolation_early"},
          "isolation released after the safety officer rejected it")],
        [
            [_send("@leader", "NUR", "ward workflow and PPE for two febrile crew"),
             _send("MED_02", "MED", "infection control: cohort fever/cough cases", fact="COHORT")],
            [_send("@leader", "PSY", "crew support for isolated members"),
             _act("MED", "release_isolation_early", fault="seo_rejection")],
        ],
    )


def _rover_stuck():
    sid = "RoverStuckRecovery"
    return _build(
        sid, ScenarioPhase.OTHER, ["OPS", "GEO", "MNT"], ["OPS", "GEO", "MNT", "AI"],
        ["ROV_SCI_01", "ROV_INSP_01"],
        _deliverables(("recovery_plan", "recovery plan with stepwise commands"),
                      ("abort_assist", "abort/assist criteria"),
                      ("comms_windows", "comms windows"),
                      ("inspection_checklist", "post-recovery inspection checklist")),
        [("trenching", RuleKind.REDLINE,
          {"type": "command", "asset": "ROV_SCI_01", "op": "spin_wheels_past_limit"},
          "wheel spin beyond the time-boxed attempt")],
        [
            [_alert("ROV_SCI_01", "slip ratio 0.8, slope 8 deg, battery 44%"),
             _send("GEO_05", "GEO", "rover bogged in aeolian fines", fact="ROVER_STUCK")],
            [_send("GEO", "AI", "simulate egress over aeolian fines with slope instability"),
             _send("@leader", "MNT", "prepare traction/anchor recovery plan")],
            [_send("MNT", "AI", "check access path for anchor placement"),
             _cmd("ROV_SCI_01", "backdrive"), _cmd("ROV_INSP_01", "inspect_wheels"),
             _cmd("ROV_SCI_01", "spin_wheels_past_limit", fault="redline")],
        ],
    )


def _printer_feedstock():
    sid = "PrinterFeedstockShort"
    return _build(
        sid, ScenarioPhase.OTHER, ["LOGT", "ISRU", "OPS"], ["LOGT", "ISRU", "LAB", "OPS", "AI"],
        ["PRT_CTRL_01", "ARM_CTRL_01"],
        _deliverables(("candidate_ranking", "candidate ranking with pros/cons"),
                      ("bom_print_parameters", "BOM & print parameters"),
                      ("test_protocol", "test protocol (strength, thermal cycle, off-gassing)"),
                      ("production_schedule", "production schedule with risk/mitigations")),
        [("outgassing", RuleKind.SEO_REJECTION, {"type": "action", "op": "skip_outgassing_test"},
          "parts released without the required off-gassing test")],
        [
            [_alert("PRT_CTRL_01", "0.6 kg filament remaining vs 1.8 kg needed"),
             _send("LOGT_02", "LOGT", "filament short for valve clamps", fact="FEEDSTOCK")],
            [_send("@leader", "ISRU", "sintered regolith feed option?"),
             _send("@leader", "LAB", "qualification tests for substitutes")],
            [_send("LAB", "AI", "plan micrograph set and particulate count for candidates"),
             _cmd("PRT_CTRL_01", "queue_test_coupons"), _cmd("ARM_CTRL_01", "stage_feedstock"),
             _act("LOGT", "skip_outgassing_test", fault="seo_rejection")],
        ],
    )


def _atc_resupply():
    sid = "ATC_ResupplyWindow"
    return _build(
        sid, ScenarioPhase.OTHER, ["ATC", "OPS", "COM"], ["ATC", "OPS", "COM", "LOGT", "EVA", "AI"],
        ["ATC_LZ_01", "UAV_COM_01"],
        _deliverables(("slot_schedule", "slot schedule & right-of-way"),
                      ("comms_plan", "comms plan"),
                      ("ground_handling", "ground handling timeline"),
                      ("reserves_abort_windows", "reserves/abort windows and notification script")),
        [("corridor", RuleKind.REDLINE,
          {"type": "command", "asset": "ATC_LZ_01", "op": "clear_outside_corridor"},
          "landing cleared outside the fixed approach corridor")],
        [
            [_alert("ATC_LZ_01", "two vehicles request overlapping landing slots")],
            [_send("@leader", "COM", "air-ground timeslots for both vehicles"),
             _send("@leader", "LOGT", "ground handling flow with limited crew"),
             _send("@leader", "EVA_03", "hold drone ops near the corridor")],
            [_send("COM", "AI", "optimize link window allocation around relay node"),
             _cmd("UAV_COM_01", "no_fly_hold"), _cmd("ATC_LZ_01", "assign_slots"),
             _cmd("ATC_LZ_01", "clear_outside_corridor", fault="redline")],
        ],
        ConsensusHook(3, (("P1", "COM", "vehicle A first"), ("P2", "LOGT", "vehicle B first")),
                      ("OPS_01", "COM_01", "LOGT_01", "EVA_03")),
    )


_BUILDERS = {
    "DailyOperations": _daily_operations,
    "EmergencyResponse": _emergency_response,
    "ScienceExploration": _science_exploration,
    "GH_BioOutbreak": _gh_bio_outbreak,
    "CommsBlackoutEVA": _comms_blackout_eva,
    "ISRU_OffNominal": _isru_off_nominal,
    "CyberAnomaly": _cyber_anomaly,
    "DustStormCurtail": _dust_storm,
    "HAB_LeakReconfig": _hab_leak,
    "MedicalOutbreakDrill": _medical_outbreak,
    "RoverStuckRecovery": _rover_stuck,
    "PrinterFeedstockShort": _printer_feedstock,
    "ATC_ResupplyWindow": _atc_resupply,
}

SCENARIO_IDS = tuple(_BUILDERS)

_CUSTOM: dict[str, ScenarioScript] = {}


@lru_cache(maxsize=None)
def _builtin(sid: str) -> ScenarioScript:
    return _BUILDERS[sid]()


def register_scenario(script: ScenarioScript) -> None:
    """Make a custom script loadable by id (built-in ids cannot be shadowed)."""
    if script.id in _BUILDERS:
        raise ScenarioError(f"{script.id} is a built-in scenario")
    _CUSTOM[script.id] = script


def load_scenario(sid: str) -> ScenarioScript:
    if sid in _BUILDERS:
        return _builtin(sid)
    if sid in _CUSTOM:
        return _CUSTOM[sid]
    raise ScenarioError(f"unknown scenario {sid!r}")


def list_scenarios() -> list[str]:
    return list(SCENARIO_IDS) + sorted(_CUSTOM)


# ----------------------------------------------------------- report checking

_SECTION_RE = re.compile(r"^##\s+(\S+)\s*$")
_FIELD_RE = re.compile(r"^([A-Za-z_][\w-]*)\s*:\s*(.*)$")


def render_report(scenario_id: str, sections: Mapping[str, Mapping[str, str]]) -> str:
    lines = [f"# {scenario_id} final report", ""]
    for tag, fields in sections.items():
        lines.append(f"## {tag}")
        lines.extend(f"{k}: {v}" for k, v in fields.items())
        lines.append("")
    return "\n".join(lines)


def parse_report(text: str) -> dict[str, dict[str, str]]:
    sections: dict[str, dict[str, str]] = {}
    current = None
    for line in text.splitlines():
        m = _SECTION_RE.match(line)
        if m:
            current = sections.setdefault(m.group(1), {})
            continue
        if current is not None:
            f = _FIELD_RE.match(line)
            if f:
                current[f.group(1)] = f.group(2).strip()
    return sections


def check_deliverables(transcript: str | Mapping[str, Mapping[str, str]] | None,
                       scenario: ScenarioScript) -> list[bool]:
    """Flag j is true iff section j exists with every required field non-empty."""
    if transcript is None:
        sections = {}
    elif isinstance(transcript, str):
        sections = parse_report(transcript)
    else:
        sections = transcript
    flags = []
    for d in scenario.deliverables:
        fields = sections.get(d.section_tag)
        flags.append(bool(fields) and all(str(fields.get(f, "")).strip() for f in d.required_fields))
    return flags
