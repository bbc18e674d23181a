"""Encoder layout, normalization bounds, target encoding, persistence."""

from datetime import datetime, timezone

import numpy as np
import pytest

from textppm.errors import EncodingError, FitError
from textppm.feature_encoder import (EncoderSpec, denorm, denormalize_time,
                                     encode_event, encode_log, encode_prefix,
                                     encode_sample, encode_targets, fit_encoder,
                                     load_encoder, minmax, save_encoder,
                                     time_features)
from textppm.log_model import (END_ACTIVITY, AttributeKind, Event, EventLog,
                               PrefixSample, Trace, trace_prefix_samples)
from textppm.text_models import TextModelKind

from conftest import make_log, make_trace


def rich_log():
    """Two traces with one categorical, one numeric, one textual attribute."""
    schema = {
        "team": AttributeKind.CATEGORICAL,
        "amount": AttributeKind.NUMERICAL,
        "note": AttributeKind.TEXTUAL,
    }
    t1 = make_trace("c1", ["a", "b", "c"],
                    cats={"team": ["x", "x", "y"]},
                    nums={"amount": [10.0, 20.0, 30.0]},
                    texts={"note": ["alpha beta", "beta", "gamma gamma"]})
    t2 = make_trace("c2", ["a", "c"], start=1_600_010_000.0,
                    cats={"team": ["y", "x"]},
                    nums={"amount": [15.0, 25.0]},
                    texts={"note": ["alpha", ""]})
    return EventLog(schema=schema, traces=(t1, t2))


# ---------------------------------------------------------------------------
# scaling and time features
# ---------------------------------------------------------------------------

def test_minmax_and_denorm():
    assert minmax(5.0, 0.0, 10.0) == 0.5
    assert minmax(-2.0, 0.0, 10.0) == -0.2  # no clamping
    assert minmax(7.0, 3.0, 3.0) == 0.0  # degenerate bounds
    assert denorm(0.5, 0.0, 10.0) == 5.0
    assert denorm(0.9, 3.0, 3.0) == 3.0
    x = 123.456
    assert denorm(minmax(x, 50.0, 200.0), 50.0, 200.0) == pytest.approx(x)


def test_time_features_calendar_components():
    # 2021-01-05 is a Tuesday; 01:00 UTC
    ts = datetime(2021, 1, 5, 1, 0, 0, tzinfo=timezone.utc).timestamp()
    ev = Event("a", ts)
    feats = time_features(ev, prev=None, case_start=ts - 100.0, log_start=ts - 500.0)
    assert feats[0] == 0.0  # no previous event
    assert feats[1] == 100.0
    assert feats[2] == 500.0
    assert feats[3] == 3600.0  # since midnight
    assert feats[4] == 86400.0 + 3600.0  # since Monday 00:00
    assert feats[5] == 4 * 86400.0 + 3600.0  # since January 1


def test_time_features_use_previous_event():
    ev1 = Event("a", 1_600_000_000.0)
    ev2 = Event("b", 1_600_000_750.0)
    feats = time_features(ev2, ev1, ev1.timestamp, ev1.timestamp)
    assert feats[0] == 750.0
    assert feats[1] == 750.0


# ---------------------------------------------------------------------------
# fitting
# ---------------------------------------------------------------------------

def test_fit_learns_bounds_and_layout():
    spec = fit_encoder(rich_log(), TextModelKind.bow(4), seed=0)
    assert spec.activities == ("a", "b", "c")
    assert spec.n_classes == 4
    assert spec.activity_index[END_ACTIVITY] == 3  # end label sits last
    assert spec.categorical_levels["team"] == ("x", "y")
    assert spec.numeric_bounds["amount"] == (10.0, 30.0)
    assert spec.delta_bounds == (0.0, 3600.0)  # completed prefixes pin the 0
    assert spec.cycle_bounds == (3600.0, 7200.0)
    # activity one-hot + 6 time + 2 team levels + 1 numeric + 4 text
    assert [s for _, s in spec.layout()] == [4, 6, 2, 1, 4]
    assert spec.total_dim == 17


def test_fit_without_text_kind_drops_text_block():
    spec = fit_encoder(rich_log(), None, seed=0)
    assert spec.text == {}
    assert spec.total_dim == 13
    names = [n for n, _ in spec.layout()]
    assert "note" not in names


def test_fit_rejects_empty_log():
    with pytest.raises(FitError):
        fit_encoder(EventLog(schema={}, traces=()), None, seed=0)


# ---------------------------------------------------------------------------
# event and prefix encoding
# ---------------------------------------------------------------------------

def test_encode_prefix_shape_and_activity_block():
    log = rich_log()
    spec = fit_encoder(log, TextModelKind.bow(4), seed=0)
    mat = encode_prefix(spec, log.traces[0].events)
    assert mat.shape == (3, spec.total_dim)
    # rows carry the right activity one-hot; END stays unused
    assert np.array_equal(mat[:, :4], [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0]])
    # first event of the earliest case: every raw time feature is the minimum
    assert mat[0, 4:10] == pytest.approx(np.zeros(6))


def test_encode_unseen_categorical_level_is_zero_block():
    log = rich_log()
    spec = fit_encoder(log, None, seed=0)
    ev = Event("a", 1_600_000_000.0, categoricals={"team": "z"},
               numericals={"amount": 12.0}, textuals={"note": "alpha"})
    vec = encode_event(spec, ev, None, ev.timestamp)
    team_block = vec[10:12]
    assert np.array_equal(team_block, np.zeros(2))


def test_encode_unseen_activity_raises():
    spec = fit_encoder(rich_log(), None, seed=0)
    ev = Event("mystery", 1_600_000_000.0, categoricals={"team": "x"},
               numericals={"amount": 12.0}, textuals={"note": ""})
    with pytest.raises(EncodingError, match="not seen during training"):
        encode_event(spec, ev, None, ev.timestamp)


def test_encode_empty_prefix_raises():
    spec = fit_encoder(rich_log(), None, seed=0)
    with pytest.raises(EncodingError, match="empty prefix"):
        encode_prefix(spec, [])


# ---------------------------------------------------------------------------
# targets
# ---------------------------------------------------------------------------

def test_encode_targets_for_running_and_complete_prefixes():
    log = rich_log()
    spec = fit_encoder(log, None, seed=0)
    samples = trace_prefix_samples(log.traces[0])

    y_a, y_t, y_o, y_c = encode_targets(spec, samples[0])  # after <a>
    assert np.array_equal(y_a, [0, 1, 0, 0])  # next is b
    assert y_t == 1.0  # 3600 s at the upper delta bound
    assert np.array_equal(y_o, [0, 0, 1])  # outcome c, over activities only
    assert y_c == 1.0  # 7200 s at the upper cycle bound

    y_a, y_t, _, _ = encode_targets(spec, samples[-1])  # complete case
    assert np.array_equal(y_a, [0, 0, 0, 1])  # end label
    assert y_t == 0.0


def test_encode_targets_rejects_unknown_labels():
    log = rich_log()
    spec = fit_encoder(log, None, seed=0)
    base = trace_prefix_samples(log.traces[0])[0]
    bad_next = PrefixSample(base.case_id, base.prefix, "mystery",
                            base.next_delta, base.outcome, base.cycle_time)
    with pytest.raises(EncodingError, match="next activity"):
        encode_targets(spec, bad_next)
    bad_out = PrefixSample(base.case_id, base.prefix, base.next_activity,
                           base.next_delta, "mystery", base.cycle_time)
    with pytest.raises(EncodingError, match="outcome"):
        encode_targets(spec, bad_out)


def test_denormalize_time_round_trip():
    spec = fit_encoder(rich_log(), None, seed=0)
    assert denormalize_time(spec, minmax(1800.0, *spec.delta_bounds),
                            "next_delta") == pytest.approx(1800.0)
    assert denormalize_time(spec, minmax(5400.0, *spec.cycle_bounds),
                            "cycle") == pytest.approx(5400.0)
    with pytest.raises(ValueError):
        denormalize_time(spec, 0.5, "phase")


# ---------------------------------------------------------------------------
# whole-log encoding
# ---------------------------------------------------------------------------

def test_encode_log_covers_every_prefix():
    log = rich_log()
    spec = fit_encoder(log, TextModelKind.bow(4), seed=0)
    encoded = encode_log(spec, log)
    assert len(encoded) == 5  # one sample per event
    assert [e.inputs.shape[0] for e in encoded] == [1, 2, 3, 1, 2]
    for enc in encoded:
        assert enc.inputs.shape[1] == spec.total_dim
        direct = encode_sample(spec, enc.source)
        assert np.array_equal(enc.inputs, direct.inputs)
        assert np.array_equal(enc.y_activity, direct.y_activity)
        assert enc.y_delta == direct.y_delta
        assert enc.y_cycle == direct.y_cycle


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("kind", [None, TextModelKind.bow(4),
                                  TextModelKind.pv(3), TextModelKind.lda(2)])
def test_save_load_round_trip(tmp_path, kind):
    log = rich_log()
    spec = fit_encoder(log, kind, seed=0)
    path = tmp_path / "encoder.bin"
    save_encoder(spec, path)
    loaded = load_encoder(path)
    assert loaded.activities == spec.activities
    assert loaded.attr_order == spec.attr_order
    assert loaded.categorical_levels == dict(spec.categorical_levels)
    assert loaded.numeric_bounds == dict(spec.numeric_bounds)
    assert loaded.delta_bounds == spec.delta_bounds
    assert loaded.cycle_bounds == spec.cycle_bounds
    assert np.array_equal(loaded.time_bounds, spec.time_bounds)
    for trace in log:
        assert np.array_equal(encode_prefix(loaded, trace.events),
                              encode_prefix(spec, trace.events))


def test_save_is_byte_stable(tmp_path):
    spec = fit_encoder(rich_log(), TextModelKind.bow(4), seed=0)
    a, b = tmp_path / "a.bin", tmp_path / "b.bin"
    save_encoder(spec, a)
    save_encoder(spec, b)
    assert a.read_bytes() == b.read_bytes()
