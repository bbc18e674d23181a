"""Event and prefix encoding: one-hot blocks, time features, min-max scaling.

All normalization state (activity universe, categorical domains, numeric and
time-feature bounds, regression-target bounds, fitted text models) is learned
from the training split once and frozen in an :class:`EncoderSpec`. Encoding
is then a pure function of the spec, so train and test prefixes go through
the identical layout.
"""

from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import text_models
from .errors import EncodingError, FitError, ModelIOError
from .log_model import (END_ACTIVITY, AttributeKind, Event, EventLog,
                        PrefixSample, trace_prefix_samples)
from .serialize import load_state, save_state
from .text_pipeline import preprocess

N_TIME_FEATURES = 6


# ---------------------------------------------------------------------------
# Scaling helpers
# ---------------------------------------------------------------------------

def minmax(x: float, lo: float, hi: float) -> float:
    """(x - lo) / (hi - lo); degenerate bounds map to 0. No clamping, so
    out-of-range test values keep their ordering."""
    if hi <= lo:
        return 0.0
    return (x - lo) / (hi - lo)


def denorm(y: float, lo: float, hi: float) -> float:
    if hi <= lo:
        return lo
    return lo + y * (hi - lo)


# ---------------------------------------------------------------------------
# Time features
# ---------------------------------------------------------------------------

def time_features(event: Event, prev: Event | None, case_start: float,
                  log_start: float) -> np.ndarray:
    """Raw 6-vector of second-scale time features for one event.

    Components: time since the previous event of the case (0 for the first),
    since the case start, since the log start, since midnight, since Monday
    00:00, and since January 1. Calendar components use UTC.
    """
    ts = event.timestamp
    dt = datetime.fromtimestamp(ts, tz=timezone.utc)
    midnight = dt.replace(hour=0, minute=0, second=0, microsecond=0)
    t4 = ts - midnight.timestamp()
    t5 = dt.weekday() * 86400.0 + t4
    t6 = ts - datetime(dt.year, 1, 1, tzinfo=timezone.utc).timestamp()
    return np.array([
        ts - prev.timestamp if prev is not None else 0.0,
        ts - case_start,
        ts - log_start,
        t4,
        t5,
        t6,
    ])


# ---------------------------------------------------------------------------
# Encoder spec
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EncoderSpec:
    """Frozen encoding layout and normalization state.

    Vector layout per event: activity one-hot over the training activities
    plus the end label (end last), then the six normalized time features,
    then one block per schema attribute in declaration order (categorical
    one-hot, single normalized numeric, or text-model vector).
    """

    activities: tuple[str, ...]  # training activity labels, sorted
    attr_order: tuple[tuple[str, AttributeKind], ...]
    categorical_levels: Mapping[str, tuple[str, ...]]
    numeric_bounds: Mapping[str, tuple[float, float]]
    time_bounds: np.ndarray  # (6, 2) min/max per time feature
    delta_bounds: tuple[float, float]  # seconds-to-next-event target
    cycle_bounds: tuple[float, float]  # case-duration target
    log_start: float
    text: Mapping[str, text_models.FittedTextModel]
    activity_index: Mapping[str, int] = field(repr=False, compare=False,
                                              default_factory=dict)

    def __post_init__(self):
        index = {a: i for i, a in enumerate(self.activities)}
        index[END_ACTIVITY] = len(self.activities)
        object.__setattr__(self, "activity_index", index)
        self.time_bounds.setflags(write=False)

    @property
    def n_classes(self) -> int:
        """Prediction classes for the next-activity head (activities + end)."""
        return len(self.activities) + 1

    def layout(self) -> list[tuple[str, int]]:
        blocks = [("activity", self.n_classes), ("time", N_TIME_FEATURES)]
        for name, kind in self.attr_order:
            if kind == AttributeKind.CATEGORICAL:
                blocks.append((name, len(self.categorical_levels[name])))
            elif kind == AttributeKind.NUMERICAL:
                blocks.append((name, 1))
            elif name in self.text:
                blocks.append((name, self.text[name].kind.vector_size))
        return blocks

    @property
    def total_dim(self) -> int:
        return sum(size for _, size in self.layout())


def fit_encoder(train_log: EventLog, text_kind: text_models.TextModelKind | None,
                seed: int) -> EncoderSpec:
    """Learn the full encoding state from the training split.

    `text_kind` None drops the textual attributes from the layout entirely
    (the text-blind configuration); otherwise one model per textual attribute
    is fitted on that attribute's training documents.
    """
    if len(train_log) == 0:
        raise FitError("cannot fit an encoder on an empty log")

    cat_values: dict[str, set[str]] = {}
    num_lo: dict[str, float] = {}
    num_hi: dict[str, float] = {}
    tmin = np.full(N_TIME_FEATURES, np.inf)
    tmax = np.full(N_TIME_FEATURES, -np.inf)
    log_start = train_log.start

    deltas = [0.0]  # completed-case prefixes always contribute a zero target
    cycles = []
    for trace in train_log:
        cycles.append(trace.end - trace.start)
        prev = None
        for event in trace.events:
            feats = time_features(event, prev, trace.start, log_start)
            np.minimum(tmin, feats, out=tmin)
            np.maximum(tmax, feats, out=tmax)
            if prev is not None:
                deltas.append(event.timestamp - prev.timestamp)
            prev = event
            for name, value in event.categoricals.items():
                cat_values.setdefault(name, set()).add(value)
            for name, value in event.numericals.items():
                num_lo[name] = min(num_lo.get(name, value), value)
                num_hi[name] = max(num_hi.get(name, value), value)

    fitted: dict[str, text_models.FittedTextModel] = {}
    if text_kind is not None:
        from .text_pipeline import build_corpus
        for offset, name in enumerate(train_log.textual_attributes()):
            corpus = build_corpus(train_log, name)
            fitted[name] = text_models.fit(text_kind, corpus, seed + offset)

    return EncoderSpec(
        activities=train_log.activities,
        attr_order=tuple(train_log.schema.items()),
        categorical_levels={n: tuple(sorted(v)) for n, v in cat_values.items()},
        numeric_bounds={n: (num_lo[n], num_hi[n]) for n in num_lo},
        time_bounds=np.stack([tmin, tmax], axis=1),
        delta_bounds=(min(deltas), max(deltas)),
        cycle_bounds=(min(cycles), max(cycles)),
        log_start=log_start,
        text=fitted,
    )


# ---------------------------------------------------------------------------
# Encoding
# ---------------------------------------------------------------------------

def encode_event(spec: EncoderSpec, event: Event, prev: Event | None,
                 case_start: float) -> np.ndarray:
    """Encode one event in its trace context into a total_dim vector."""
    idx = spec.activity_index.get(event.activity)
    if idx is None or event.activity == END_ACTIVITY:
        raise EncodingError(f"activity {event.activity!r} not seen during training")
    parts = [np.zeros(spec.n_classes)]
    parts[0][idx] = 1.0

    raw = time_features(event, prev, case_start, spec.log_start)
    parts.append(np.array([minmax(raw[i], spec.time_bounds[i, 0],
                                  spec.time_bounds[i, 1])
                           for i in range(N_TIME_FEATURES)]))

    for name, kind in spec.attr_order:
        if kind == AttributeKind.CATEGORICAL:
            block = np.zeros(len(spec.categorical_levels[name]))
            value = event.categoricals[name]
            try:
                block[spec.categorical_levels[name].index(value)] = 1.0
            except ValueError:
                pass  # unseen level at prediction time: leave the block zero
            parts.append(block)
        elif kind == AttributeKind.NUMERICAL:
            lo, hi = spec.numeric_bounds[name]
            parts.append(np.array([minmax(event.numericals[name], lo, hi)]))
        elif name in spec.text:
            model = spec.text[name]
            parts.append(model.encode(preprocess(event.textuals[name])))
    return np.concatenate(parts)


def encode_prefix(spec: EncoderSpec, events: Sequence[Event]) -> np.ndarray:
    """Encode a prefix (or whole trace) into a (k, total_dim) matrix."""
    if not events:
        raise EncodingError("cannot encode an empty prefix")
    case_start = events[0].timestamp
    rows = []
    prev = None
    for event in events:
        rows.append(encode_event(spec, event, prev, case_start))
        prev = event
    return np.stack(rows)


@dataclass(frozen=True)
class EncodedSample:
    """Network-ready prefix: input matrix plus the four encoded targets."""

    inputs: np.ndarray  # (k, total_dim)
    y_activity: np.ndarray  # one-hot over activities + end
    y_delta: float  # normalized seconds-to-next-event
    y_outcome: np.ndarray  # one-hot over activities
    y_cycle: float  # normalized case duration
    source: PrefixSample


def encode_targets(spec: EncoderSpec, sample: PrefixSample
                   ) -> tuple[np.ndarray, float, np.ndarray, float]:
    y_a = np.zeros(spec.n_classes)
    idx = spec.activity_index.get(sample.next_activity)
    if idx is None:
        raise EncodingError(
            f"next activity {sample.next_activity!r} not seen during training")
    y_a[idx] = 1.0
    y_o = np.zeros(len(spec.activities))
    try:
        y_o[spec.activities.index(sample.outcome)] = 1.0
    except ValueError:
        raise EncodingError(
            f"outcome {sample.outcome!r} not seen during training") from None
    y_t = minmax(sample.next_delta, *spec.delta_bounds)
    y_c = minmax(sample.cycle_time, *spec.cycle_bounds)
    return y_a, y_t, y_o, y_c


def denormalize_time(spec: EncoderSpec, y: float, which: str) -> float:
    """Map a normalized regression output back to seconds."""
    if which == "next_delta":
        return denorm(y, *spec.delta_bounds)
    if which == "cycle":
        return denorm(y, *spec.cycle_bounds)
    raise ValueError(f"unknown target {which!r}")


def encode_sample(spec: EncoderSpec, sample: PrefixSample) -> EncodedSample:
    y_a, y_t, y_o, y_c = encode_targets(spec, sample)
    return EncodedSample(encode_prefix(spec, sample.prefix), y_a, y_t, y_o, y_c, sample)


def encode_log(spec: EncoderSpec, log: EventLog) -> list[EncodedSample]:
    """Encode every prefix of every trace.

    Events are encoded once per trace and the prefix matrices are slices of
    the trace matrix, which matters when text encoding is expensive.
    """
    out = []
    for trace in log:
        matrix = encode_prefix(spec, trace.events)
        for sample in trace_prefix_samples(trace):
            y_a, y_t, y_o, y_c = encode_targets(spec, sample)
            out.append(EncodedSample(matrix[:sample.k], y_a, y_t, y_o, y_c, sample))
    return out


def encode_samples(spec: EncoderSpec, samples: Iterable[PrefixSample]
                   ) -> list[EncodedSample]:
    return [encode_sample(spec, s) for s in samples]


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------

def save_encoder(spec: EncoderSpec, path) -> None:
    meta = {
        "activities": list(spec.activities),
        "attr_order": [[n, k.value] for n, k in spec.attr_order],
        "categorical_levels": {n: list(v) for n, v in spec.categorical_levels.items()},
        "numeric_bounds": {n: list(v) for n, v in spec.numeric_bounds.items()},
        "delta_bounds": list(spec.delta_bounds),
        "cycle_bounds": list(spec.cycle_bounds),
        "log_start": spec.log_start,
        "text": {},
    }
    arrays = {"time_bounds": spec.time_bounds}
    for name, model in spec.text.items():
        meta["text"][name] = {
            "model": type(model).__name__,
            "kind": {"name": model.kind.name, "vector_size": model.kind.vector_size,
                     "ngram": model.kind.ngram},
            "seed": model.seed,
            "vocabulary": list(model.vocabulary),
        }
        if isinstance(model, text_models.TfidfModel):
            arrays[f"text/{name}/idf"] = model.idf
        elif isinstance(model, text_models.PvModel):
            arrays[f"text/{name}/w_words"] = model.w_words
            arrays[f"text/{name}/w_docs"] = model.w_docs
            arrays[f"text/{name}/w_out"] = model.w_out
        else:
            arrays[f"text/{name}/n_wk"] = model.n_wk
            arrays[f"text/{name}/n_k"] = model.n_k
    save_state(path, meta, arrays)


def load_encoder(path) -> EncoderSpec:
    meta, arrays = load_state(path)
    try:
        fitted: dict[str, text_models.FittedTextModel] = {}
        for name, entry in meta["text"].items():
            kind = text_models.TextModelKind(**entry["kind"])
            seed = int(entry["seed"])
            vocab = tuple(entry["vocabulary"])
            tag = entry["model"]
            if tag == "TfidfModel":
                fitted[name] = text_models.TfidfModel(
                    kind, seed, vocab, arrays[f"text/{name}/idf"])
            elif tag == "PvModel":
                fitted[name] = text_models.PvModel(
                    kind, seed, vocab, arrays[f"text/{name}/w_words"],
                    arrays[f"text/{name}/w_docs"], arrays[f"text/{name}/w_out"])
            elif tag == "LdaModel":
                fitted[name] = text_models.LdaModel(
                    kind, seed, vocab, arrays[f"text/{name}/n_wk"],
                    arrays[f"text/{name}/n_k"])
            else:
                raise ModelIOError(f"{path}: unknown text model tag {tag!r}")
        return EncoderSpec(
            activities=tuple(meta["activities"]),
            attr_order=tuple((n, AttributeKind(k)) for n, k in meta["attr_order"]),
            categorical_levels={n: tuple(v) for n, v in
                                meta["categorical_levels"].items()},
            numeric_bounds={n: (float(v[0]), float(v[1])) for n, v in
                            meta["numeric_bounds"].items()},
            time_bounds=arrays["time_bounds"],
            delta_bounds=(float(meta["delta_bounds"][0]), float(meta["delta_bounds"][1])),
            cycle_bounds=(float(meta["cycle_bounds"][0]), float(meta["cycle_bounds"][1])),
            log_start=float(meta["log_start"]),
            text=fitted,
        )
    except KeyError as exc:
        raise ModelIOError(f"{path}: missing encoder state ({exc})") from exc
