"""Event-log data model, CSV ingestion, chronological splitting, prefix generation.

An event log is a multiset of traces; a trace is the time-ordered sequence of
events belonging to one case. Events carry an activity label, a timestamp
(stored as float seconds since the epoch, UTC), and additional attributes that
are declared categorical, numerical, or textual in the log schema.
"""

from __future__ import annotations

import csv
import math
import statistics
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from typing import Iterable, Iterator, Mapping

from .errors import LogParseError, SchemaError, SplitError

#: Reserved label marking "case is complete"; never a legal activity in a log.
END_ACTIVITY = "<END>"

SECONDS_PER_DAY = 86400.0


class AttributeKind(str, Enum):
    CATEGORICAL = "categorical"
    NUMERICAL = "numerical"
    TEXTUAL = "textual"


@dataclass(frozen=True)
class Event:
    """One timestamped activity execution with typed additional attributes."""

    activity: str
    timestamp: float  # seconds since epoch, UTC
    categoricals: Mapping[str, str] = field(default_factory=dict)
    numericals: Mapping[str, float] = field(default_factory=dict)
    textuals: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if not self.activity:
            raise ValueError("event activity must be non-empty")
        if self.activity == END_ACTIVITY:
            raise ValueError(f"activity label {END_ACTIVITY!r} is reserved")
        if not math.isfinite(self.timestamp):
            raise ValueError("event timestamp must be finite")
        for name, value in self.numericals.items():
            if not math.isfinite(value):
                raise ValueError(f"numerical attribute {name!r} must be finite")


@dataclass(frozen=True)
class Trace:
    """Non-empty event sequence of one case; timestamps non-decreasing."""

    case_id: str
    events: tuple[Event, ...]

    def __post_init__(self):
        if not self.events:
            raise ValueError(f"trace {self.case_id!r} has no events")
        times = [e.timestamp for e in self.events]
        if any(a > b for a, b in zip(times, times[1:])):
            raise ValueError(f"trace {self.case_id!r} has decreasing timestamps")

    def __len__(self) -> int:
        return len(self.events)

    @property
    def start(self) -> float:
        return self.events[0].timestamp

    @property
    def end(self) -> float:
        return self.events[-1].timestamp

    @property
    def activities(self) -> tuple[str, ...]:
        return tuple(e.activity for e in self.events)


@dataclass(frozen=True)
class EventLog:
    """Multiset of traces plus the attribute schema they conform to."""

    schema: Mapping[str, AttributeKind]
    traces: tuple[Trace, ...]

    def __post_init__(self):
        cat = {n for n, k in self.schema.items() if k == AttributeKind.CATEGORICAL}
        num = {n for n, k in self.schema.items() if k == AttributeKind.NUMERICAL}
        txt = {n for n, k in self.schema.items() if k == AttributeKind.TEXTUAL}
        for trace in self.traces:
            for event in trace.events:
                if set(event.categoricals) != cat or set(event.numericals) != num \
                        or set(event.textuals) != txt:
                    raise SchemaError(
                        f"event in case {trace.case_id!r} does not match the log schema"
                    )

    def __len__(self) -> int:
        return len(self.traces)

    def __iter__(self) -> Iterator[Trace]:
        return iter(self.traces)

    @property
    def activities(self) -> tuple[str, ...]:
        """Sorted universe of activity labels observed in the log."""
        return tuple(sorted({e.activity for t in self.traces for e in t.events}))

    @property
    def event_count(self) -> int:
        return sum(len(t) for t in self.traces)

    @property
    def start(self) -> float:
        """Timestamp of the first event of the whole log."""
        if not self.traces:
            raise ValueError("empty log has no start time")
        return min(t.start for t in self.traces)

    def textual_attributes(self) -> list[str]:
        return [n for n, k in self.schema.items() if k == AttributeKind.TEXTUAL]


@dataclass(frozen=True)
class PrefixSample:
    """A trace head of length k together with the four prediction targets."""

    case_id: str
    prefix: tuple[Event, ...]
    next_activity: str  # label in A, or END_ACTIVITY when the case is complete
    next_delta: float  # seconds until the next event; 0 when complete
    outcome: str  # last activity of the full source trace
    cycle_time: float  # full-trace duration in seconds

    @property
    def k(self) -> int:
        return len(self.prefix)


# ---------------------------------------------------------------------------
# Timestamp parsing
# ---------------------------------------------------------------------------

_SLASH_FORMATS = ("%Y/%m/%d %H:%M:%S.%f", "%Y/%m/%d %H:%M:%S")


def parse_timestamp(text: str) -> float:
    """Parse an ISO-8601 or ``YYYY/MM/DD HH:MM:SS.fff`` timestamp to epoch seconds.

    Naive timestamps are interpreted as UTC so that calendar-based time
    features are reproducible across machines.
    """
    text = text.strip()
    dt = None
    try:
        dt = datetime.fromisoformat(text.replace("Z", "+00:00"))
    except ValueError:
        for fmt in _SLASH_FORMATS:
            try:
                dt = datetime.strptime(text, fmt)
                break
            except ValueError:
                continue
    if dt is None:
        raise ValueError(f"unparseable timestamp {text!r}")
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.timestamp()


def format_timestamp(seconds: float) -> str:
    """Canonical ISO form used by :func:`write_csv`; microsecond resolution."""
    dt = datetime.fromtimestamp(seconds, tz=timezone.utc)
    if dt.microsecond:
        return dt.strftime("%Y-%m-%d %H:%M:%S.%f")
    return dt.strftime("%Y-%m-%d %H:%M:%S")


# ---------------------------------------------------------------------------
# CSV ingestion
# ---------------------------------------------------------------------------

RESERVED_COLUMNS = ("case", "activity", "timestamp")


def parse_csv(path, schema: Mapping[str, AttributeKind]) -> EventLog:
    """Read an event log from CSV.

    The header must contain ``case``, ``activity`` and ``timestamp`` columns;
    every further column must be declared in ``schema`` (and vice versa). Rows
    are grouped by case id and sorted by timestamp within each case, stable on
    ties. Empty textual cells become empty documents; empty categorical cells
    are kept as the value ``""``.
    """
    schema = dict(schema)
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise LogParseError("file is empty, expected a header row") from None
        header = [h.strip() for h in header]
        for required in RESERVED_COLUMNS:
            if required not in header:
                raise LogParseError(f"header is missing required column {required!r}")
        attr_columns = [h for h in header if h not in RESERVED_COLUMNS]
        unknown = [c for c in attr_columns if c not in schema]
        if unknown:
            raise SchemaError(f"columns {unknown} not declared in schema")
        missing = [c for c in schema if c not in attr_columns]
        if missing:
            raise SchemaError(f"schema attributes {missing} not present in header")

        idx = {name: header.index(name) for name in header}
        rows_by_case: dict[str, list[Event]] = {}
        for line_no, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise LogParseError(
                    f"expected {len(header)} cells, found {len(row)}", line=line_no
                )
            case_id = row[idx["case"]].strip()
            activity = row[idx["activity"]].strip()
            if not case_id:
                raise LogParseError("empty case id", line=line_no)
            if not activity:
                raise LogParseError("empty activity", line=line_no)
            try:
                timestamp = parse_timestamp(row[idx["timestamp"]])
            except ValueError as exc:
                raise LogParseError(str(exc), line=line_no) from None

            categoricals, numericals, textuals = {}, {}, {}
            for name in attr_columns:
                cell = row[idx[name]]
                kind = schema[name]
                if kind == AttributeKind.CATEGORICAL:
                    categoricals[name] = cell.strip()
                elif kind == AttributeKind.NUMERICAL:
                    try:
                        numericals[name] = float(cell)
                    except ValueError:
                        raise LogParseError(
                            f"non-numeric value {cell!r} for attribute {name!r}",
                            line=line_no,
                        ) from None
                else:
                    textuals[name] = cell
            try:
                event = Event(activity, timestamp, categoricals, numericals, textuals)
            except ValueError as exc:
                raise LogParseError(str(exc), line=line_no) from None
            rows_by_case.setdefault(case_id, []).append(event)

    traces = []
    for case_id, events in rows_by_case.items():
        ordered = sorted(enumerate(events), key=lambda pair: (pair[1].timestamp, pair[0]))
        traces.append(Trace(case_id, tuple(e for _, e in ordered)))
    return EventLog(schema=schema, traces=tuple(traces))


def write_csv(log: EventLog, path) -> None:
    """Write a log back to CSV in the same column layout `parse_csv` accepts."""
    attr_names = list(log.schema)
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(list(RESERVED_COLUMNS) + attr_names)
        for trace in log.traces:
            for event in trace.events:
                row = [trace.case_id, event.activity, format_timestamp(event.timestamp)]
                for name in attr_names:
                    kind = log.schema[name]
                    if kind == AttributeKind.CATEGORICAL:
                        row.append(event.categoricals[name])
                    elif kind == AttributeKind.NUMERICAL:
                        row.append(repr(event.numericals[name]))
                    else:
                        row.append(event.textuals[name])
                writer.writerow(row)


# ---------------------------------------------------------------------------
# Prefixes and targets
# ---------------------------------------------------------------------------

def head(trace: Trace, k: int) -> Trace:
    """First ``k`` events of a trace (0 <= k <= len); k=0 yields an empty tuple.

    Returns a Trace for k >= 1; for k == 0 the event tuple alone is returned
    since Trace forbids emptiness.
    """
    if k < 0 or k > len(trace):
        raise IndexError(f"prefix length {k} out of range for trace of length {len(trace)}")
    if k == 0:
        return ()
    return Trace(trace.case_id, trace.events[:k])


def trace_prefix_samples(trace: Trace) -> list[PrefixSample]:
    """All (prefix, targets) samples of one trace, k = 1..len(trace)."""
    n = len(trace)
    outcome = trace.events[-1].activity
    cycle = trace.end - trace.start
    samples = []
    for k in range(1, n + 1):
        if k == n:
            nxt, delta = END_ACTIVITY, 0.0
        else:
            nxt = trace.events[k].activity
            delta = trace.events[k].timestamp - trace.events[k - 1].timestamp
        samples.append(
            PrefixSample(trace.case_id, trace.events[:k], nxt, delta, outcome, cycle)
        )
    return samples


def prefix_log(log: EventLog) -> list[PrefixSample]:
    """Prefix log of ``log``: one sample per (trace, k); |result| = event count."""
    samples = []
    for trace in log.traces:
        samples.extend(trace_prefix_samples(trace))
    return samples


# ---------------------------------------------------------------------------
# Splitting and statistics
# ---------------------------------------------------------------------------

def chronological_split(log: EventLog, train_fraction: float) -> tuple[EventLog, EventLog]:
    """Split traces chronologically by first-event time, ties on case id.

    The first ceil(fraction * n) traces form the training log.
    """
    if not 0.0 < train_fraction < 1.0:
        raise SplitError(f"train fraction must be in (0, 1), got {train_fraction}")
    if len(log.traces) < 2:
        raise SplitError("cannot split a log with fewer than 2 traces")
    ordered = sorted(log.traces, key=lambda t: (t.start, t.case_id))
    n_train = math.ceil(train_fraction * len(ordered))
    n_train = min(n_train, len(ordered) - 1)  # keep the test side non-empty
    train = EventLog(log.schema, tuple(ordered[:n_train]))
    test = EventLog(log.schema, tuple(ordered[n_train:]))
    return train, test


@dataclass(frozen=True)
class LogStats:
    cases: int
    variants: int
    events: int
    mean_events_per_case: float
    median_case_duration_days: float
    mean_case_duration_days: float
    activities: int
    words_before: int
    words_after: int
    vocabulary_before: int
    vocabulary_after: int

    def lines(self) -> list[str]:
        return [
            f"cases                      {self.cases}",
            f"trace variants             {self.variants}",
            f"events                     {self.events}",
            f"events per case (mean)     {self.mean_events_per_case:.3f}",
            f"median case duration (d)   {self.median_case_duration_days:.3f}",
            f"mean case duration (d)     {self.mean_case_duration_days:.3f}",
            f"activities                 {self.activities}",
            f"words before preprocessing {self.words_before}",
            f"words after preprocessing  {self.words_after}",
            f"vocabulary before          {self.vocabulary_before}",
            f"vocabulary after           {self.vocabulary_after}",
        ]


def log_stats(log: EventLog) -> LogStats:
    """Summary statistics of a log; word counts cover all textual attributes.

    Variants are counted over activity sequences only, ignoring attributes.
    """
    from .text_pipeline import preprocess  # deferred to avoid an import cycle

    durations = [(t.end - t.start) / SECONDS_PER_DAY for t in log.traces]
    raw_words: list[str] = []
    clean_words: list[str] = []
    for trace in log.traces:
        for event in trace.events:
            for doc in event.textuals.values():
                raw_words.extend(doc.split())
                clean_words.extend(preprocess(doc))
    return LogStats(
        cases=len(log.traces),
        variants=len({t.activities for t in log.traces}),
        events=log.event_count,
        mean_events_per_case=(log.event_count / len(log.traces)) if log.traces else 0.0,
        median_case_duration_days=statistics.median(durations) if durations else 0.0,
        mean_case_duration_days=statistics.fmean(durations) if durations else 0.0,
        activities=len(log.activities),
        words_before=len(raw_words),
        words_after=len(clean_words),
        vocabulary_before=len(set(raw_words)),
        vocabulary_after=len(set(clean_words)),
    )


def build_log(traces: Iterable[Trace], schema: Mapping[str, AttributeKind] | None = None) -> EventLog:
    """Convenience constructor used by tests and the synthetic generator."""
    return EventLog(schema=dict(schema or {}), traces=tuple(traces))
