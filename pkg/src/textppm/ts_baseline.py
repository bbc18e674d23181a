"""Annotated-transition-system baseline predictor.

States are abstractions (sequence, bag, or set) of the most recent
min(k, horizon) activities of a prefix. Each state collects the target
measurements of every training prefix that reaches it; prediction then takes
the modal class for the classification targets and the mean for the time
targets. Prefixes whose state was never seen in training fall back to the
set abstraction at shrinking windows and finally to the global annotation,
so a prediction always exists.
"""

from collections import Counter
from dataclasses import dataclass, field
from statistics import fmean
from typing import Sequence

from .errors import ConfigError
from .log_model import Event, EventLog, PrefixSample, prefix_log

ABSTRACTION_KINDS = ("sequence", "bag", "set")
DEFAULT_HORIZON = 8


@dataclass(frozen=True)
class Abstraction:
    kind: str
    horizon: int = DEFAULT_HORIZON

    def __post_init__(self):
        if self.kind not in ABSTRACTION_KINDS:
            raise ConfigError(
                f"unknown abstraction {self.kind!r}, expected one of {ABSTRACTION_KINDS}")
        if self.horizon < 1:
            raise ConfigError(f"horizon must be >= 1, got {self.horizon}")


def abstract_state(activities: Sequence[str], abstraction: Abstraction):
    """Hashable state key of a prefix's activity sequence."""
    window = tuple(activities[-abstraction.horizon:])
    if abstraction.kind == "sequence":
        return window
    if abstraction.kind == "bag":
        return tuple(sorted(Counter(window).items()))
    return tuple(sorted(set(window)))


@dataclass
class Annotation:
    """Target measurements of all training prefixes mapped to one state."""

    next_activity_counts: Counter = field(default_factory=Counter)
    next_deltas: list[float] = field(default_factory=list)
    outcome_counts: Counter = field(default_factory=Counter)
    cycle_times: list[float] = field(default_factory=list)

    def add(self, sample: PrefixSample) -> None:
        self.next_activity_counts[sample.next_activity] += 1
        self.next_deltas.append(sample.next_delta)
        self.outcome_counts[sample.outcome] += 1
        self.cycle_times.append(sample.cycle_time)

    @property
    def visits(self) -> int:
        return len(self.next_deltas)


def _modal(counts: Counter) -> str:
    # highest count, ties broken by the lexicographically smallest label
    return min(counts.items(), key=lambda kv: (-kv[1], kv[0]))[0]


@dataclass(frozen=True)
class TsPrediction:
    next_activity: str
    next_delta_seconds: float
    outcome: str
    cycle_seconds: float
    source: str  # which lookup level resolved: "state", "set:<h>" or "global"


class AnnotatedTS:
    """Transition system over one abstraction, with set-abstraction shadow
    tables at every window length for the fallback chain."""

    def __init__(self, abstraction: Abstraction):
        self.abstraction = abstraction
        self.states: dict[object, Annotation] = {}
        self._set_tables: dict[int, dict[object, Annotation]] = {
            h: {} for h in range(1, abstraction.horizon + 1)}
        self._global = Annotation()

    def _add(self, sample: PrefixSample) -> None:
        acts = tuple(e.activity for e in sample.prefix)
        key = abstract_state(acts, self.abstraction)
        self.states.setdefault(key, Annotation()).add(sample)
        for h, table in self._set_tables.items():
            skey = abstract_state(acts, Abstraction("set", h))
            table.setdefault(skey, Annotation()).add(sample)
        self._global.add(sample)

    def _resolve(self, activities: Sequence[str]) -> tuple[Annotation, str]:
        key = abstract_state(activities, self.abstraction)
        ann = self.states.get(key)
        if ann is not None:
            return ann, "state"
        for h in range(self.abstraction.horizon, 0, -1):
            skey = abstract_state(activities, Abstraction("set", h))
            ann = self._set_tables[h].get(skey)
            if ann is not None:
                return ann, f"set:{h}"
        return self._global, "global"

    def predict_activities(self, activities: Sequence[str]) -> TsPrediction:
        if not activities:
            raise ValueError("cannot predict from an empty prefix")
        ann, source = self._resolve(activities)
        return TsPrediction(
            next_activity=_modal(ann.next_activity_counts),
            next_delta_seconds=fmean(ann.next_deltas),
            outcome=_modal(ann.outcome_counts),
            cycle_seconds=fmean(ann.cycle_times),
            source=source,
        )

    def predict_prefix(self, events: Sequence[Event]) -> TsPrediction:
        return self.predict_activities([e.activity for e in events])


def build(train_log: EventLog, abstraction: Abstraction) -> AnnotatedTS:
    """Annotate the transition system with every training prefix sample."""
    samples = prefix_log(train_log)
    if not samples:
        raise ValueError("cannot build a transition system from an empty log")
    ts = AnnotatedTS(abstraction)
    for sample in samples:
        ts._add(sample)
    return ts


def dump_states_csv(ts: AnnotatedTS, path) -> None:
    """Write states, visit counts and headline annotations for inspection."""
    import csv

    def fmt_key(key) -> str:
        if ts.abstraction.kind == "bag":
            return "|".join(f"{a}:{c}" for a, c in key)
        return "|".join(key)

    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["state", "visits", "modal_next_activity",
                         "mean_next_delta_s", "modal_outcome", "mean_cycle_s"])
        for key in sorted(ts.states, key=fmt_key):
            ann = ts.states[key]
            writer.writerow([
                fmt_key(key), ann.visits, _modal(ann.next_activity_counts),
                f"{fmean(ann.next_deltas):.6f}", _modal(ann.outcome_counts),
                f"{fmean(ann.cycle_times):.6f}",
            ])
