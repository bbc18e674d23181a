import pathlib

import pytest

from textppm.log_model import AttributeKind, Event, EventLog, Trace

DATA_DIR = pathlib.Path(__file__).parent / "data"

CJ_SCHEMA = {
    "Age": AttributeKind.CATEGORICAL,
    "Gender": AttributeKind.CATEGORICAL,
    "Message": AttributeKind.TEXTUAL,
}
HA_SCHEMA = {
    "Admission Type": AttributeKind.CATEGORICAL,
    "Insurance": AttributeKind.CATEGORICAL,
    "Diagnosis": AttributeKind.TEXTUAL,
}


def make_trace(case_id, activities, start=1_600_000_000.0, gap=3600.0,
               texts=None, cats=None, nums=None):
    """Trace with evenly spaced events; per-event attrs optional.

    texts/cats/nums: {name: [value per event]}.
    """
    events = []
    for i, act in enumerate(activities):
        events.append(Event(
            activity=act,
            timestamp=start + i * gap,
            categoricals={n: v[i] for n, v in (cats or {}).items()},
            numericals={n: v[i] for n, v in (nums or {}).items()},
            textuals={n: v[i] for n, v in (texts or {}).items()},
        ))
    return Trace(case_id, tuple(events))


def make_log(rows, schema=None, start=1_600_000_000.0, gap=3600.0, stagger=0.0):
    """Log from [(case_id, activities), ...] with bare events."""
    traces = [
        make_trace(cid, acts, start=start + i * stagger, gap=gap)
        for i, (cid, acts) in enumerate(rows)
    ]
    return EventLog(schema=dict(schema or {}), traces=tuple(traces))


@pytest.fixture(scope="session")
def cj_log():
    from textppm.log_model import parse_csv
    return parse_csv(DATA_DIR / "customer_journey_sample.csv", CJ_SCHEMA)


@pytest.fixture(scope="session")
def ha_log():
    from textppm.log_model import parse_csv
    return parse_csv(DATA_DIR / "hospital_admission_sample.csv", HA_SCHEMA)
