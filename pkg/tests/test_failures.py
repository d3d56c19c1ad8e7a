from hypothesis import given, strategies as st

import pytest

from marsops.failures import (ConstraintRule, FailureBreakdown, RuleKind, count_failures, evaluate_rules)
from marsops.handover import ControlResolution

RULE = ConstraintRule("S.r", "S", RuleKind.REDLINE, {"type": "command", "op": "boom"})


def test_sum():
    res = [ControlResolution("HAB_01", None, False, "LSS_05")]
    log = [{"type": "violation"}, {"type": "violation"}]
    b = count_failures(log, res, [True, True, False, True])
    assert (b.n_asset, b.n_viol, b.n_miss, b.f_total) == (1, 2, 1, 4)


def test_clean():
    b = count_failures([], [], [True, True])
    assert (b.n_asset, b.n_viol, b.n_miss, b.f_total) == (0, 0, 0, 0)


def test_asset_counted_once():
    log = [{"type": "unserviceable", "asset": "HAB_01", "tick": 3},
           {"type": "unserviceable", "asset": "HAB_01", "tick": 9}]
    assert count_failures(log, [], []).n_asset == 1


def test_repeated_violations_count():
    events = [{"type": "command", "op": "boom", "tick": 1, "actor": "A"},
              {"type": "command", "op": "boom", "tick": 5, "actor": "A"},
              {"type": "command", "op": "fine", "tick": 6, "actor": "A"}]
    v = evaluate_rules([RULE], events)
    assert [e.tick for e in v] == [1, 5]
    assert v[0].record()["type"] == "violation"


def test_rule_round_trip():
    assert ConstraintRule.from_dict(RULE.to_dict()) == RULE


def test_negative_rejected():
    with pytest.raises(ValueError):
        FailureBreakdown(-1, 0, 0)


@given(st.integers(0, 5), st.integers(0, 5), st.lists(st.booleans(), max_size=6))
def test_zero_iff_components_zero(n_dead, n_viol, flags):
    res = [ControlResolution(f"X_{i:02d}", None, False) for i in range(n_dead)]
    b = count_failures([{"type": "violation"}] * n_viol, res, flags)
    assert (b.f_total == 0) == (b.n_asset == b.n_viol == b.n_miss == 0)
    assert b.n_miss <= len(flags)
