import json

import pytest
from hypothesis import given, settings, strategies as st

from marsops.errors import RoutingError
from marsops.routing import (CMD_HUB, HUBS, OPS_HUB, PathKind, Router, RoutingPolicy, TrafficCounters,
                             Whitelist, build_hierarchy, cross_layer_ratio, deliver, route,
                             write_audit_log)


@pytest.fixture(scope="module")
def graph(roster):
    return build_hierarchy(roster)


def test_hierarchy_edges(graph):
    assert ("LSS_05", "HAB_01") in graph and ("HAB_01", "LSS_05") in graph
    assert ("CMD_01", "OPS_01") in graph
    assert ("GEO_01", "AI_02") not in graph
    assert ("OPS_01", "AI_02") in graph
    assert ("GEO_01", "GEO_05") in graph


def test_strict_hub_forwarding(roster, graph):
    p = route(graph, Whitelist.default(), RoutingPolicy.STRICT, "GEO_01", "AI_02", roster=roster)
    assert p.kind is PathKind.HUB_FORWARDED and p.hub == OPS_HUB and p.n_hops == 2


def test_crosslayer_shortcut(roster):
    r = Router(roster, policy=RoutingPolicy.CROSSLAYER)
    env = r.send("GEO_01", "AI_02", "x", 1)
    assert env.path.kind is PathKind.DIRECT and env.is_cross_layer


def test_whitelist_is_directional(roster, graph):
    p = route(graph, Whitelist.default(), RoutingPolicy.CROSSLAYER, "AI_02", "GEO_01", roster=roster)
    assert p.kind is PathKind.HUB_FORWARDED and p.hub == OPS_HUB


def test_owner_edge_direct_under_strict(roster, graph):
    p = route(graph, Whitelist.default(), RoutingPolicy.STRICT, "LSS_05", "HAB_01", roster=roster)
    assert p.kind is PathKind.DIRECT


def test_hub_skips_endpoint_and_emergency_order(roster, graph):
    wl = Whitelist.default()
    p = route(graph, wl, RoutingPolicy.STRICT, "OPS_01", "GEO_05", roster=roster)
    assert p.hub == CMD_HUB
    p = route(graph, wl, RoutingPolicy.STRICT, "GEO_01", "AI_02", roster=roster, emergency=True)
    assert p.hub == CMD_HUB
    p = route(graph, wl, RoutingPolicy.STRICT, "CMD_01", "GEO_05", roster=roster, emergency=True)
    assert p.hub == OPS_HUB


def test_hop_counting():
    from marsops.routing import MessageEnvelope, Path
    c = TrafficCounters()
    deliver(c, MessageEnvelope(1, "a", "b", Path((("a", "b"),), PathKind.DIRECT), "", True, 0))
    assert (c.n_msg, c.n_cross) == (1, 1)
    deliver(c, MessageEnvelope(2, "a", "b", Path((("a", "OPS_01"), ("OPS_01", "b")), PathKind.HUB_FORWARDED, "OPS_01"),
                               "", False, 0))
    assert (c.n_msg, c.n_cross) == (3, 1)
    deliver(c, MessageEnvelope(3, "a", "b", Path((("a", "b"),), PathKind.DIRECT), "", False, 0))
    assert (c.n_msg, c.n_cross) == (4, 1)


def test_cross_ratio():
    assert cross_layer_ratio(TrafficCounters(5, 1)) == 0.2
    assert cross_layer_ratio(TrafficCounters(0, 0)) == 0.0


def test_errors(roster, graph):
    with pytest.raises(RoutingError):
        route(graph, Whitelist.default(), RoutingPolicy.STRICT, "GEO_01", "GEO_01", roster=roster)
    with pytest.raises(RoutingError):
        route(graph, Whitelist.default(), RoutingPolicy.STRICT, "GEO_01", "ZZZ_01", roster=roster)


def test_policy_accepts_lowercase():
    assert RoutingPolicy("crosslayer") is RoutingPolicy.CROSSLAYER
    with pytest.raises(ValueError):
        RoutingPolicy("sideways")


def test_whitelist_parse_and_dump():
    wl = Whitelist.parse("# comment\nGEO -> AI\n\nBIO -> AI  # trailing\n")
    assert wl.allows("GEO", "AI") and wl.allows("BIO", "AI") and not wl.allows("AI", "GEO")
    assert Whitelist.parse(wl.dumps()) == wl
    assert Whitelist.parse(Whitelist.default().dumps()) == Whitelist.default()
    with pytest.raises(RoutingError):
        Whitelist.parse("GEO AI")


def test_audit_log_file(roster, tmp_path):
    r = Router(roster)
    r.send("GEO_01", "AI_02", "hello", 3)
    path = tmp_path / "audit.jsonl"
    write_audit_log(r.audit, path)
    rec = json.loads(path.read_text().splitlines()[0])
    assert rec["kind"] == "HubForwarded" and rec["hub"] == OPS_HUB and rec["hops"] == 2


def test_relay_is_single_non_cross_hop(roster):
    r = Router(roster, policy=RoutingPolicy.CROSSLAYER)
    env = r.relay("COM_06", "AI_02", "t", 1, via="translator")
    assert env.path.n_hops == 1 and not env.is_cross_layer and r.counters.n_msg == 1


def test_gate_shortcuts_in_emergency(roster):
    r = Router(roster, policy=RoutingPolicy.CROSSLAYER, gate_shortcuts_in_emergency=True)
    assert r.route("GEO_01", "AI_02", emergency=True).kind is PathKind.HUB_FORWARDED
    assert r.route("GEO_01", "AI_02").kind is PathKind.DIRECT


agent_ids = st.sampled_from(sorted(__import__("marsops.roster", fromlist=["x"]).build_default_roster().ids))
policies = st.sampled_from(list(RoutingPolicy))


@settings(max_examples=300)
@given(agent_ids, agent_ids, policies, st.booleans())
def test_route_properties(s, d, policy, emergency):
    from marsops.roster import build_default_roster
    roster = build_default_roster()
    if s == d:
        return
    r = Router(roster, policy=policy)
    env = r.send(s, d, "", 0, emergency=emergency)
    if env.path.kind is PathKind.HUB_FORWARDED:
        assert env.path.hub in HUBS and env.path.hub not in (s, d)
        assert env.path.n_hops == 2 and not env.is_cross_layer
    if policy is RoutingPolicy.STRICT:
        assert not env.is_cross_layer


pairs = st.sets(st.tuples(st.sampled_from(["GEO", "AI", "COM", "LAB", "BIO", "OPS", "MED", "PWR"]),
                          st.sampled_from(["GEO", "AI", "COM", "LAB", "BIO", "OPS", "MED", "PWR"])),
                max_size=10)


@settings(max_examples=100)
@given(pairs, agent_ids, agent_ids)
def test_enlarging_whitelist_never_loses_direct_paths(extra, s, d):
    from marsops.roster import build_default_roster
    roster = build_default_roster()
    if s == d:
        return
    graph = build_hierarchy(roster)
    base = Whitelist.default()
    bigger = base | Whitelist(frozenset((a, b) for a, b in extra if a != b))
    before = route(graph, base, RoutingPolicy.CROSSLAYER, s, d, roster=roster)
    after = route(graph, bigger, RoutingPolicy.CROSSLAYER, s, d, roster=roster)
    if before.kind is PathKind.DIRECT:
        assert after.kind is PathKind.DIRECT
