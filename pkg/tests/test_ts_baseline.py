"""Transition-system baseline: abstractions, annotations, fallback chain."""

import csv

import pytest

from textppm.errors import ConfigError
from textppm.log_model import END_ACTIVITY, EventLog, prefix_log
from textppm.ts_baseline import (Abstraction, AnnotatedTS, abstract_state,
                                 build, dump_states_csv)

from conftest import make_log, make_trace


def test_abstraction_validation():
    with pytest.raises(ConfigError, match="unknown abstraction"):
        Abstraction("multiset")
    with pytest.raises(ConfigError, match="horizon"):
        Abstraction("set", 0)


def test_abstract_state_kinds():
    acts = ["a", "b", "a", "c"]
    assert abstract_state(acts, Abstraction("sequence")) == ("a", "b", "a", "c")
    assert abstract_state(acts, Abstraction("bag")) == (("a", 2), ("b", 1), ("c", 1))
    assert abstract_state(acts, Abstraction("set")) == ("a", "b", "c")


def test_abstract_state_horizon_trims_left():
    acts = ["a", "b", "a", "c"]
    assert abstract_state(acts, Abstraction("sequence", 2)) == ("a", "c")
    assert abstract_state(acts, Abstraction("bag", 3)) == (("a", 1), ("b", 1), ("c", 1))
    assert abstract_state(acts, Abstraction("set", 1)) == ("c",)


@pytest.fixture(scope="module")
def trained_ts():
    # after <a>: next is b in 3 of 5 traces, c in 2; lex tie never needed
    rows = [("c1", ["a", "b", "x"]), ("c2", ["a", "b", "x"]),
            ("c3", ["a", "b", "y"]), ("c4", ["a", "c", "y"]),
            ("c5", ["a", "c", "y"])]
    log = make_log(rows, stagger=60.0)
    return log, build(log, Abstraction("sequence"))


def test_modal_classification_targets(trained_ts):
    _, ts = trained_ts
    pred = ts.predict_activities(["a"])
    assert pred.source == "state"
    assert pred.next_activity == "b"  # 3-of-5 majority
    assert pred.outcome == "y"  # y wins 3 to 2


def test_modal_tie_breaks_lexicographically():
    rows = [("c1", ["a", "b"]), ("c2", ["a", "c"])]
    ts = build(make_log(rows), Abstraction("sequence"))
    assert ts.predict_activities(["a"]).next_activity == "b"


def test_mean_time_targets(trained_ts):
    _, ts = trained_ts
    pred = ts.predict_activities(["a"])
    assert pred.next_delta_seconds == pytest.approx(3600.0)
    assert pred.cycle_seconds == pytest.approx(7200.0)
    done = ts.predict_activities(["a", "b", "x"])
    assert done.next_activity == END_ACTIVITY
    assert done.next_delta_seconds == 0.0


def test_fallback_chain_sources(trained_ts):
    _, ts = trained_ts
    # unseen sequence <b, a> shares the set {a, b} with seen prefixes
    pred = ts.predict_activities(["b", "a"])
    assert pred.source == "set:8"
    # unseen activity everywhere: only the global annotation is left
    pred = ts.predict_activities(["zzz"])
    assert pred.source == "global"
    assert pred.next_activity in {"b", "c", "x", "y", END_ACTIVITY}


def test_global_annotation_is_all_prefixes(trained_ts):
    log, ts = trained_ts
    assert ts._global.visits == log.event_count


def test_visits_conservation(trained_ts):
    log, ts = trained_ts
    total = sum(ann.visits for ann in ts.states.values())
    assert total == len(prefix_log(log)) == log.event_count
    for table in ts._set_tables.values():
        assert sum(ann.visits for ann in table.values()) == log.event_count


def test_bag_abstraction_merges_orderings():
    rows = [("c1", ["a", "b", "x"]), ("c2", ["b", "a", "x"])]
    ts = build(make_log(rows), Abstraction("bag"))
    p1 = ts.predict_activities(["a", "b"])
    p2 = ts.predict_activities(["b", "a"])
    assert p1.source == p2.source == "state"
    assert p1.next_activity == p2.next_activity == "x"


def test_horizon_limits_state_memory():
    rows = [("c1", ["a", "b", "c"]), ("c2", ["z", "b", "c"])]
    ts = build(make_log(rows), Abstraction("sequence", 2))
    # both traces land in the same <b, c> state after 3 events
    assert ts.predict_activities(["q", "b", "c"]).source == "state"


def test_predict_prefix_uses_event_activities(trained_ts):
    log, ts = trained_ts
    events = log.traces[0].events[:2]
    assert ts.predict_prefix(events) == ts.predict_activities(["a", "b"])


def test_empty_inputs_rejected(trained_ts):
    _, ts = trained_ts
    with pytest.raises(ValueError, match="empty prefix"):
        ts.predict_activities([])
    with pytest.raises(ValueError, match="empty log"):
        build(EventLog(schema={}, traces=()), Abstraction("set"))


def test_dump_states_csv(tmp_path, trained_ts):
    _, ts = trained_ts
    path = tmp_path / "states.csv"
    dump_states_csv(ts, path)
    with open(path, newline="") as handle:
        rows = list(csv.DictReader(handle))
    assert len(rows) == len(ts.states)
    byname = {r["state"]: r for r in rows}
    assert byname["a"]["visits"] == "5"
    assert byname["a"]["modal_next_activity"] == "b"
    assert float(byname["a"]["mean_cycle_s"]) == pytest.approx(7200.0)
