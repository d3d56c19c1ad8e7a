"""The eight acceptance criteria, each at its stated tolerance.

Each test records one ``PASS``/``FAIL`` line, printed in the terminal summary.
"""
import csv
import json
import random
import time
from importlib import resources
from pathlib import Path

import pytest
from hypothesis import given, settings, strategies as st

from marsops.consensus import ConsensusConfig, Proposal, run_consensus, top_margin, vote_entropy
from marsops.engine import RunConfig, run_scenario
from marsops.handover import resolve_all, sample_availability
from marsops.metrics import AmpiConfig, ampi_from_columns
from marsops.protocols import TRANSLATOR, Translator, default_lexicons
from marsops.rng import AVAILABILITY, substream
from marsops.roster import build_default_roster
from marsops.routing import HUBS, PathKind, RoutingPolicy, Whitelist, route, build_hierarchy
from marsops.runner import SweepSpec, export_csv, run_batch
from marsops.scenarios import SCENARIO_IDS, load_scenario

TABLES = Path(__file__).parent / "data" / "ampi_tables.csv"


def record(log, n, ok, detail):
    log.append(f"criterion {n}: {'PASS' if ok else 'FAIL'} - {detail}")


# 1 -------------------------------------------------------------------------

def test_1_ampi_table_reproduction(acceptance_log):
    start = time.perf_counter()
    cfg = AmpiConfig(weights=(0.4, 0.2, 0.0, 0.25, 0.15), K_T=20, K_M=50, K_F=3, K_S=5)
    rows = [r for r in csv.DictReader(TABLES.open()) if r["table"] in {"8", "9", "11", "12"}]
    per_table: dict[str, list[bool]] = {}
    for r in rows:
        got = ampi_from_columns(float(r["time"]), float(r["msgs"]), float(r["failures"]),
                                float(r["rolesw"]), cfg=cfg)
        per_table.setdefault(r["table"], []).append(abs(got - float(r["ampi"])) <= 0.01)
    hits = sum(sum(v) for v in per_table.values())
    frac = hits / len(rows)
    elapsed = time.perf_counter() - start
    breakdown = ", ".join(f"T{t} {sum(v)}/{len(v)}" for t, v in sorted(per_table.items(), key=lambda kv: int(kv[0])))
    ok = frac >= 0.95 and elapsed < 1.0
    record(acceptance_log, 1, ok, f"{hits}/{len(rows)} rows within 0.01 ({frac:.1%}; need 95%) [{breakdown}] in {elapsed:.3f}s")
    assert len(rows) == 116
    assert elapsed < 1.0
    assert frac >= 0.95, f"only {frac:.1%} of printed AMPI values reproduce ({breakdown})"


# 2 -------------------------------------------------------------------------

def _oracle_hierarchy():
    """Chain-of-command edges rebuilt straight from the roster data file."""
    doc = json.loads(resources.files("marsops.data").joinpath("roster.json").read_text())
    humans = [a for a in doc["agents"] if a["kind"] == "Human"]
    groups: dict[str, list[str]] = {}
    for a in humans:
        groups.setdefault(a["group"], []).append(a["id"])
    edges = set()

    def both(a, b):
        edges.add((a, b))
        edges.add((b, a))

    for a in ("OPS_01", "SEO_01", "EARTH_01"):
        both("CMD_01", a)
    for g, ids in groups.items():
        if g in ("CMD", "OPS", "SEO", "EARTH"):
            continue
        ids = sorted(ids, key=lambda i: int(i.rsplit("_", 1)[1]))
        both("OPS_01", ids[0])
        for m in ids[1:]:
            both(ids[0], m)
    for o in doc["ownership"]:
        for c in [o["primary"], *o["backups"]]:
            both(c, o["asset"])
    group_of = {a["id"]: a["group"] for a in doc["agents"]}
    return edges, group_of


def test_2_routing_soundness(acceptance_log):
    start = time.perf_counter()
    roster = build_default_roster()
    graph = build_hierarchy(roster)
    wl = Whitelist.default()
    table4 = {("GEO", "AI"), ("GEO", "COM"), ("GEO", "LAB"), ("BIO", "AI"), ("LAB", "AI"), ("COM", "AI"),
              ("LSS", "AI"), ("PWR", "AI"), ("ISRU", "AI"), ("AGRI", "AI"), ("MNT", "AI")}
    edges, group_of = _oracle_hierarchy()
    ids = list(roster.ids)
    checked = mismatches = 0
    for policy in RoutingPolicy:
        for s in ids:
            for d in ids:
                if s == d:
                    continue
                checked += 1
                legal = (s, d) in edges or (
                    policy is RoutingPolicy.CROSSLAYER and (group_of[s], group_of[d]) in table4)
                p = route(graph, wl, policy, s, d, roster=roster)
                want_hub = None if legal else next(h for h in HUBS if h not in (s, d))
                if (p.kind is PathKind.DIRECT) != legal or p.hub != want_hub:
                    mismatches += 1
    strict_cross = []
    for sid in SCENARIO_IDS:
        for seed in range(3):
            for cons in (False, True):
                for proto in ("off", "hetero"):
                    r = run_scenario(RunConfig(scenario=sid, routing="STRICT", seed=seed, outage_p=0.1,
                                               consensus=ConsensusConfig(cons), protocols=proto))
                    strict_cross.append(r.metrics.cross_C)
    elapsed = time.perf_counter() - start
    ok = checked == 2 * 93 * 92 and mismatches == 0 and max(strict_cross) == 0.0 and elapsed < 5
    record(acceptance_log, 2, ok, f"{checked} routed pairs, {mismatches} oracle mismatches; "
                                  f"{len(strict_cross)} STRICT runs, max cross ratio {max(strict_cross)} in {elapsed:.2f}s")
    assert checked == 2 * 93 * 92 and mismatches == 0
    assert max(strict_cross) == 0.0
    assert elapsed < 5


# 3 -------------------------------------------------------------------------

def test_3_failover_statistics(acceptance_log):
    start = time.perf_counter()
    roster = build_default_roster()
    n = 20_000
    switches = dead = 0
    for i in range(n):
        res = resolve_all(roster, sample_availability(roster, 0.1, substream(i, AVAILABILITY)), True)
        switches += sum(r.was_switch for r in res)
        dead += sum(r.controller is None for r in res)
    mean_sw, mean_dead = switches / n, dead / n
    elapsed = time.perf_counter() - start
    ok = abs(mean_sw - 1.98) <= 0.05 and abs(mean_dead - 0.22) <= 0.02 and elapsed < 10
    record(acceptance_log, 3, ok, f"mean RoleSw {mean_sw:.4f} (1.98±0.05), mean N_asset {mean_dead:.4f} "
                                  f"(0.22±0.02) over {n} runs in {elapsed:.2f}s")
    assert abs(mean_sw - 1.98) <= 0.05
    assert abs(mean_dead - 0.22) <= 0.02
    assert elapsed < 10


# 4 -------------------------------------------------------------------------

_cases = {"n": 0, "fail": 0}


@settings(max_examples=1200, deadline=None, derandomize=True)
@given(st.integers(2, 6), st.integers(1, 11), st.integers(1, 4), st.integers(0, 2**32))
def _consensus_property(n_props, n_voters, rounds, seed):
    _cases["n"] += 1
    props = [Proposal(f"P{i}", f"A{i}") for i in range(n_props)]
    voters = [f"V{i}" for i in range(n_voters)]
    rng = random.Random(seed)
    forced = [{v: f"P{rng.randrange(n_props)}" for v in voters} for _ in range(rounds)]
    prev = 0
    try:
        for theta in (0.3, 0.5, 0.6, 0.75, 1.0):
            out = run_consensus(ConsensusConfig(True, rounds, theta), props, voters, random.Random(seed),
                                fixed_votes=forced)
            for t in out.tallies:
                s = list(t.shares.values())
                assert 0.0 <= t.entropy_D <= 1.0 and 0.0 <= t.margin_delta <= 1.0
                if len(set(s)) == 1:
                    assert t.entropy_D == pytest.approx(1.0)
                if max(s) == 1.0:
                    assert t.entropy_D <= 1e-10 and t.margin_delta == 1.0
            assert out.r_star >= prev
            prev = out.r_star
            reached = any(max(t.shares.values()) >= theta for t in out.tallies)
            assert (out.r_star == rounds + 1) == (not reached)
            assert (out.winner is None) == (not reached)
    except AssertionError:
        _cases["fail"] += 1
        raise


def test_4_consensus_invariants(acceptance_log):
    hand = vote_entropy([0.5, 0.25, 0.25, 0.0])
    try:
        _consensus_property()
        prop_ok = True
    except AssertionError:
        prop_ok = False
    ok = prop_ok and _cases["n"] >= 1000 and abs(hand - 0.75) < 1e-9 and top_margin([0.5, 0.25, 0.25, 0]) == 0.25
    record(acceptance_log, 4, ok, f"{_cases['n']} generated sessions, {_cases['fail']} failing; "
                                  f"D(0.5,0.25,0.25,0) = {hand:.12f}")
    assert prop_ok and _cases["n"] >= 1000
    assert hand == pytest.approx(0.75, abs=1e-9)


# 5 -------------------------------------------------------------------------

def test_5_suite_completion(acceptance_log):
    start = time.perf_counter()
    problems = []
    for sid in SCENARIO_IDS:
        r = run_scenario(RunConfig(scenario=sid, outage_p=0.0))
        if r.breakdown.n_miss or r.breakdown.n_viol or not all(r.deliverable_flags):
            problems.append(sid)
        if set(r.final_report) != {d.section_tag for d in load_scenario(sid).deliverables}:
            problems.append(f"{sid} sections")
    elapsed = time.perf_counter() - start
    ok = not problems and elapsed < 60
    record(acceptance_log, 5, ok, f"13 scenarios, problems: {problems or 'none'}, {elapsed:.2f}s")
    assert not problems
    assert elapsed < 60


# 6 -------------------------------------------------------------------------

def _translatable(roster, lex, rec):
    s, d = rec["sender"], rec["recipient"]
    gs, gd = roster.group_of(s), roster.group_of(d)
    return gs != gd and gs in lex and gd in lex and TRANSLATOR not in (s, d)


def test_6_factor_directions(acceptance_log):
    roster = build_default_roster()
    lex = default_lexicons()
    issues = []
    seeds = range(10)
    for sid in ("ScienceExploration", "CommsBlackoutEVA"):
        for seed in seeds:
            s = run_scenario(RunConfig(scenario=sid, routing="STRICT", seed=seed))
            c = run_scenario(RunConfig(scenario=sid, routing="CROSSLAYER", seed=seed))
            if not (c.metrics.msgs_M < s.metrics.msgs_M and c.metrics.time_T < s.metrics.time_T):
                issues.append(f"crosslayer {sid} seed {seed}")
    hooks = [sid for sid in SCENARIO_IDS if load_scenario(sid).consensus_hook]
    for sid in hooks:
        for seed in seeds:
            off = run_scenario(RunConfig(scenario=sid, seed=seed))
            on = run_scenario(RunConfig(scenario=sid, seed=seed, consensus=ConsensusConfig(True)))
            if not on.metrics.msgs_M > off.metrics.msgs_M:
                issues.append(f"consensus {sid} seed {seed}")
    exchanges = 0
    for sid in SCENARIO_IDS:
        for seed in seeds:
            for routing in ("STRICT", "CROSSLAYER"):
                off = run_scenario(RunConfig(scenario=sid, seed=seed, routing=routing))
                het = run_scenario(RunConfig(scenario=sid, seed=seed, routing=routing, protocols="hetero"))
                n_x = sum(1 for r in off.event_log if r["type"] == "msg" and _translatable(roster, lex, r))
                exchanges += n_x
                if het.metrics.msgs_M - off.metrics.msgs_M < n_x:
                    issues.append(f"hetero {sid} seed {seed}")
    offline_cases = 0
    for sid in SCENARIO_IDS:
        for seed in range(20):
            on = run_scenario(RunConfig(scenario=sid, seed=seed, outage_p=0.1, switching=True))
            off = run_scenario(RunConfig(scenario=sid, seed=seed, outage_p=0.1, switching=False))
            if off.metrics.switches_S != 0:
                issues.append(f"switch-off RoleSw {sid} seed {seed}")
            if any(r.controller != r.primary for r in on.resolutions):
                offline_cases += 1
                if off.metrics.failures_F < on.metrics.failures_F:
                    issues.append(f"switch-off F {sid} seed {seed}")
    ok = not issues and exchanges > 0 and offline_cases > 0
    record(acceptance_log, 6, ok, f"{len(issues)} direction violations; {exchanges} cross-group exchanges, "
                                  f"{offline_cases} paired runs with an offline primary")
    assert not issues, issues[:10]
    assert exchanges > 0 and offline_cases > 0


# 7 -------------------------------------------------------------------------

def test_7_determinism(acceptance_log, tmp_path):
    issues = []
    for sid in SCENARIO_IDS:
        cfg = RunConfig(scenario=sid, seed=1234, outage_p=0.2, consensus=ConsensusConfig(True),
                        protocols="hetero", routing="CROSSLAYER")
        if run_scenario(cfg).log_lines() != run_scenario(cfg).log_lines():
            issues.append(f"log {sid}")
    spec = SweepSpec(RunConfig(scenario="DailyOperations", outage_p=0.1), "memory", ("off", "basic", "shared"), 5, 9)
    export_csv(run_batch(spec), tmp_path / "a.csv")
    export_csv(run_batch(spec), tmp_path / "b.csv")
    if (tmp_path / "a.csv").read_bytes() != (tmp_path / "b.csv").read_bytes():
        issues.append("csv")
    toggles = [dict(routing="CROSSLAYER"), dict(leadership="single"), dict(switching=False), dict(memory="off"),
               dict(consensus=ConsensusConfig(True)), dict(protocols="hetero")]
    for sid in SCENARIO_IDS:
        for seed in range(5):
            base = RunConfig(scenario=sid, seed=seed, outage_p=0.3)
            ref = [r for r in run_scenario(base).event_log if r["type"] == "availability"]
            for t in toggles:
                got = [r for r in run_scenario(base.with_(**t)).event_log if r["type"] == "availability"]
                if got != ref:
                    issues.append(f"availability {sid} {t}")
    ok = not issues
    record(acceptance_log, 7, ok, f"13 repeated logs, repeated CSV, {13 * 5 * len(toggles)} factor toggles; "
                                  f"issues: {issues or 'none'}")
    assert not issues


# 8 -------------------------------------------------------------------------

def test_8_translation_round_trip(acceptance_log):
    roster = build_default_roster()
    lex = default_lexicons()
    tr = Translator(lex)
    rng = random.Random(2024)
    geo_terms = sorted(lex["GEO"].terms.values())
    fillers = ["survey", "near", "the", "ridge", "at", "then", "check", "and", "log", "before"]
    failures = 0
    for _ in range(500):
        words = []
        for _ in range(rng.randint(1, 6)):
            words.append(rng.choice(fillers))
            words.append(rng.choice(geo_terms))
        msg = " ".join(words)
        there, rec = tr.translate(msg, "GEO", "AI")
        back, _ = tr.translate(there, "AI", "GEO")
        if back != msg or rec.unmapped:
            failures += 1
    audit_mismatch = []
    for sid in SCENARIO_IDS:
        for seed in range(3):
            off = run_scenario(RunConfig(scenario=sid, seed=seed))
            het = run_scenario(RunConfig(scenario=sid, seed=seed, protocols="hetero"))
            expected = sum(1 for r in off.event_log if r["type"] == "msg" and _translatable(roster, lex, r))
            audits = sum(1 for r in het.event_log if r["type"] == "translation")
            if audits != expected or len(het.translations) != expected:
                audit_mismatch.append(sid)
    ok = failures == 0 and not audit_mismatch
    record(acceptance_log, 8, ok, f"500 GEO->AI->GEO round trips, {failures} failed; "
                                  f"audit mismatches: {audit_mismatch or 'none'}")
    assert failures == 0
    assert not audit_mismatch
