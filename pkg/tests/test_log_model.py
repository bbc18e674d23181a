"""Event/trace/log model, CSV ingestion, prefixes, splitting, statistics."""

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from textppm.errors import LogParseError, SchemaError, SplitError
from textppm.log_model import (
    END_ACTIVITY,
    AttributeKind,
    Event,
    EventLog,
    LogStats,
    Trace,
    chronological_split,
    format_timestamp,
    head,
    log_stats,
    parse_csv,
    parse_timestamp,
    prefix_log,
    trace_prefix_samples,
    write_csv,
)

from conftest import CJ_SCHEMA, DATA_DIR, make_log, make_trace


# ---------------------------------------------------------------------------
# Timestamps
# ---------------------------------------------------------------------------

def test_parse_timestamp_iso_and_slash_agree():
    iso = parse_timestamp("2015-12-15 12:24:42")
    slash = parse_timestamp("2015/12/15 12:24:42.000")
    assert iso == slash


def test_parse_timestamp_treats_naive_as_utc():
    assert parse_timestamp("1970-01-01 00:00:00") == 0.0
    assert parse_timestamp("1970-01-02T00:00:00Z") == 86400.0


def test_parse_timestamp_fractional_seconds():
    assert parse_timestamp("1970/01/01 00:00:01.500") == 1.5


def test_parse_timestamp_rejects_garbage():
    with pytest.raises(ValueError):
        parse_timestamp("not a time")


def test_format_timestamp_round_trips():
    for value in (0.0, 1_600_000_000.0, 1_600_000_000.25):
        assert parse_timestamp(format_timestamp(value)) == value


# ---------------------------------------------------------------------------
# Model invariants
# ---------------------------------------------------------------------------

def test_event_rejects_reserved_label_and_empty_activity():
    with pytest.raises(ValueError):
        Event(END_ACTIVITY, 0.0)
    with pytest.raises(ValueError):
        Event("", 0.0)


def test_event_rejects_non_finite_values():
    with pytest.raises(ValueError):
        Event("a", float("nan"))
    with pytest.raises(ValueError):
        Event("a", 0.0, numericals={"x": float("inf")})


def test_trace_rejects_empty_and_decreasing():
    with pytest.raises(ValueError):
        Trace("c", ())
    with pytest.raises(ValueError):
        Trace("c", (Event("a", 10.0), Event("b", 5.0)))


def test_log_rejects_schema_mismatch():
    trace = make_trace("c", ["a"], texts={"note": ["hi"]})
    with pytest.raises(SchemaError):
        EventLog(schema={}, traces=(trace,))


def test_log_activity_universe_sorted():
    log = make_log([("c1", ["b", "a"]), ("c2", ["c"])])
    assert log.activities == ("a", "b", "c")
    assert log.event_count == 3


# ---------------------------------------------------------------------------
# CSV ingestion
# ---------------------------------------------------------------------------

def test_parse_customer_journey_fixture(cj_log):
    assert len(cj_log) == 5
    assert cj_log.event_count == 24
    case_ids = {t.case_id for t in cj_log.traces}
    assert "40154127" in case_ids and "53244594" in case_ids
    messages = [e.textuals["Message"] for t in cj_log for e in t.events]
    assert sum(1 for m in messages if m) == 10


def test_parse_hospital_fixture(ha_log):
    assert len(ha_log) == 10
    assert ha_log.event_count == 22
    by_id = {t.case_id: t for t in ha_log.traces}
    assert by_id["17"].activities == (
        "PHYS REFERRAL/NORMAL DELI", "HOME HEALTH CARE",
        "EMERGENCY ROOM ADMIT", "HOME HEALTH CARE")
    assert by_id["8"].events[0].categoricals["Insurance"] == "Private"


def test_parse_csv_sorts_within_case(tmp_path):
    p = tmp_path / "log.csv"
    p.write_text(
        "case,activity,timestamp\n"
        "c,second,1970-01-01 01:00:00\n"
        "c,first,1970-01-01 00:00:00\n"
    )
    log = parse_csv(p, {})
    assert log.traces[0].activities == ("first", "second")


def test_parse_csv_stable_on_timestamp_ties(tmp_path):
    p = tmp_path / "log.csv"
    p.write_text(
        "case,activity,timestamp\n"
        "c,x,1970-01-01 00:00:00\n"
        "c,y,1970-01-01 00:00:00\n"
    )
    assert parse_csv(p, {}).traces[0].activities == ("x", "y")


def test_parse_csv_error_carries_line_number(tmp_path):
    p = tmp_path / "log.csv"
    p.write_text(
        "case,activity,timestamp\n"
        "c,a,1970-01-01 00:00:00\n"
        "c,b,broken\n"
    )
    with pytest.raises(LogParseError) as err:
        parse_csv(p, {})
    assert "line 3" in str(err.value)


def test_parse_csv_missing_required_column(tmp_path):
    p = tmp_path / "log.csv"
    p.write_text("case,activity\nc,a\n")
    with pytest.raises(LogParseError):
        parse_csv(p, {})


def test_parse_csv_schema_column_mismatch(tmp_path):
    p = tmp_path / "log.csv"
    p.write_text("case,activity,timestamp,extra\nc,a,1970-01-01 00:00:00,1\n")
    with pytest.raises(SchemaError):
        parse_csv(p, {})
    with pytest.raises(SchemaError):
        parse_csv(p, {"extra": AttributeKind.NUMERICAL,
                      "missing": AttributeKind.NUMERICAL})


def test_parse_csv_non_numeric_cell(tmp_path):
    p = tmp_path / "log.csv"
    p.write_text("case,activity,timestamp,x\nc,a,1970-01-01 00:00:00,abc\n")
    with pytest.raises(LogParseError):
        parse_csv(p, {"x": AttributeKind.NUMERICAL})


def test_parse_csv_empty_file(tmp_path):
    p = tmp_path / "log.csv"
    p.write_text("")
    with pytest.raises(LogParseError):
        parse_csv(p, {})


def test_csv_round_trip(tmp_path, cj_log):
    out = tmp_path / "copy.csv"
    write_csv(cj_log, out)
    again = parse_csv(out, CJ_SCHEMA)
    assert again == cj_log


# ---------------------------------------------------------------------------
# Prefixes and targets
# ---------------------------------------------------------------------------

def test_head_bounds():
    trace = make_trace("c", ["a", "b", "c"])
    assert head(trace, 0) == ()
    assert head(trace, 2).activities == ("a", "b")
    with pytest.raises(IndexError):
        head(trace, 4)


def test_trace_prefix_samples_targets():
    trace = make_trace("c", ["a", "b", "c"], start=0.0, gap=60.0)
    samples = trace_prefix_samples(trace)
    assert [s.k for s in samples] == [1, 2, 3]
    assert [s.next_activity for s in samples] == ["b", "c", END_ACTIVITY]
    assert [s.next_delta for s in samples] == [60.0, 60.0, 0.0]
    assert all(s.outcome == "c" for s in samples)
    assert all(s.cycle_time == 120.0 for s in samples)


def test_prefix_log_size_equals_event_count(cj_log):
    assert len(prefix_log(cj_log)) == cj_log.event_count


@settings(max_examples=25, deadline=None)
@given(st.lists(st.integers(min_value=1, max_value=6), min_size=1, max_size=8))
def test_prefix_log_size_property(lengths):
    rows = [(f"c{i}", ["a"] * n) for i, n in enumerate(lengths)]
    log = make_log(rows)
    assert len(prefix_log(log)) == sum(lengths)


# ---------------------------------------------------------------------------
# Splitting
# ---------------------------------------------------------------------------

def test_chronological_split_orders_by_start():
    log = make_log([("late", ["a"]), ("early", ["a"]), ("mid", ["a"])],
                   stagger=0.0)
    # give distinct start times out of declaration order
    t = {tr.case_id: tr for tr in log.traces}
    log = EventLog({}, (
        make_trace("late", ["a"], start=3000.0),
        make_trace("early", ["a"], start=1000.0),
        make_trace("mid", ["a"], start=2000.0),
    ))
    train, test = chronological_split(log, 2 / 3)
    assert [tr.case_id for tr in train.traces] == ["early", "mid"]
    assert [tr.case_id for tr in test.traces] == ["late"]


def test_chronological_split_keeps_test_non_empty():
    log = make_log([("a", ["x"]), ("b", ["x"])], stagger=100.0)
    train, test = chronological_split(log, 0.99)
    assert len(train) == 1 and len(test) == 1


def test_chronological_split_rejects_bad_input():
    log = make_log([("a", ["x"])])
    with pytest.raises(SplitError):
        chronological_split(log, 0.5)
    two = make_log([("a", ["x"]), ("b", ["x"])])
    with pytest.raises(SplitError):
        chronological_split(two, 1.5)


def test_chronological_split_partitions(cj_log):
    train, test = chronological_split(cj_log, 2 / 3)
    assert len(train) + len(test) == len(cj_log)
    assert max(t.start for t in train.traces) <= min(t.start for t in test.traces)


# ---------------------------------------------------------------------------
# Statistics
# ---------------------------------------------------------------------------

def test_log_stats_counts(cj_log):
    stats = log_stats(cj_log)
    assert stats.cases == 5
    assert stats.events == 24
    assert stats.activities == len(cj_log.activities)
    assert stats.mean_events_per_case == pytest.approx(24 / 5)
    assert stats.words_after <= stats.words_before
    assert stats.vocabulary_after <= stats.vocabulary_before
    assert len(stats.lines()) == 11


def test_log_stats_durations():
    log = make_log([("c1", ["a", "b"]), ("c2", ["a", "b", "c"])], gap=43200.0)
    stats = log_stats(log)
    assert stats.median_case_duration_days == pytest.approx(0.75)
    assert stats.mean_case_duration_days == pytest.approx(0.75)
    assert stats.variants == 2
