"""Evaluation: weighted class-wise F1, MAE in days, per-prefix-length report.

Any predictor exposing ``predict_prefix(events) -> object`` with attributes
`next_activity`, `next_delta_seconds`, `outcome` and `cycle_seconds` can be
evaluated; `predict_log(log)` is used instead when available (the network
implements it to batch by prefix length). All compared models see the exact
same prefix enumeration: traces in log order, k ascending.
"""

import csv
from dataclasses import dataclass
from typing import Mapping, Sequence

from .errors import EvaluationError
from .log_model import SECONDS_PER_DAY, EventLog, prefix_log

#: Fig.-4-style reports bucket prefix lengths 1..8; longer prefixes still
#: count toward the overall scores.
MAX_REPORT_K = 8


def weighted_f1(preds: Sequence[str], truths: Sequence[str]) -> float:
    """Class-wise F1 averaged with true-class support weights.

    Per class: F1 = 2PR/(P+R), taken as 0 when P+R = 0. Classes never
    appearing in `truths` carry zero weight (they still hurt precision of
    the classes they were predicted instead of).
    """
    if len(preds) != len(truths):
        raise ValueError(f"length mismatch: {len(preds)} predictions, {len(truths)} truths")
    if not truths:
        raise ValueError("cannot score empty label sequences")
    score = 0.0
    n = len(truths)
    for cls in set(truths):
        tp = sum(1 for p, t in zip(preds, truths) if p == cls and t == cls)
        fp = sum(1 for p, t in zip(preds, truths) if p == cls and t != cls)
        fn = sum(1 for p, t in zip(preds, truths) if p != cls and t == cls)
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        score += (tp + fn) / n * f1
    return score


def mae_days(pred_seconds: Sequence[float], truth_seconds: Sequence[float]) -> float:
    """Mean absolute error of second-scale values, reported in days."""
    if len(pred_seconds) != len(truth_seconds):
        raise ValueError(
            f"length mismatch: {len(pred_seconds)} predictions, {len(truth_seconds)} truths")
    if not truth_seconds:
        raise ValueError("cannot score empty value sequences")
    total = sum(abs(p - t) for p, t in zip(pred_seconds, truth_seconds))
    return total / len(truth_seconds) / SECONDS_PER_DAY


@dataclass(frozen=True)
class TaskScores:
    next_activity_f1: float
    next_delta_mae_days: float
    outcome_f1: float
    cycle_mae_days: float


@dataclass(frozen=True)
class ModelReport:
    """Scores of one model: overall plus per prefix length k = 1..8."""

    overall: TaskScores
    per_k: Mapping[int, TaskScores]
    n_samples: int


@dataclass(frozen=True)
class EvalReport:
    """Joint report over models evaluated on the identical prefix log."""

    models: Mapping[str, ModelReport]
    counts_per_k: Mapping[int, int]
    n_samples: int
    metadata: Mapping[str, object]


def _scores(preds, samples) -> TaskScores:
    return TaskScores(
        next_activity_f1=weighted_f1([p.next_activity for p in preds],
                                     [s.next_activity for s in samples]),
        next_delta_mae_days=mae_days([p.next_delta_seconds for p in preds],
                                     [s.next_delta for s in samples]),
        outcome_f1=weighted_f1([p.outcome for p in preds],
                               [s.outcome for s in samples]),
        cycle_mae_days=mae_days([p.cycle_seconds for p in preds],
                                [s.cycle_time for s in samples]),
    )


def evaluate(model, test_log: EventLog) -> ModelReport:
    """Score one model over every prefix of the test log."""
    samples = prefix_log(test_log)
    if not samples:
        raise EvaluationError("test log has no prefixes")
    if hasattr(model, "predict_log"):
        preds = model.predict_log(test_log)
        if len(preds) != len(samples):
            raise EvaluationError(
                f"model returned {len(preds)} predictions for {len(samples)} prefixes")
    else:
        preds = []
        for sample in samples:
            try:
                preds.append(model.predict_prefix(sample.prefix))
            except Exception as exc:
                raise EvaluationError(
                    f"model failed on case {sample.case_id!r}, k={sample.k}: {exc}"
                ) from exc
    per_k = {}
    for k in range(1, MAX_REPORT_K + 1):
        idx = [i for i, s in enumerate(samples) if s.k == k]
        if idx:
            per_k[k] = _scores([preds[i] for i in idx], [samples[i] for i in idx])
    return ModelReport(_scores(preds, samples), per_k, len(samples))


def evaluate_models(models: Mapping[str, object], test_log: EventLog) -> EvalReport:
    samples = prefix_log(test_log)
    counts = {}
    for k in range(1, MAX_REPORT_K + 1):
        c = sum(1 for s in samples if s.k == k)
        if c:
            counts[k] = c
    reports = {name: evaluate(model, test_log) for name, model in models.items()}
    return EvalReport(
        models=reports,
        counts_per_k=counts,
        n_samples=len(samples),
        metadata={"end_label_in_next_activity_f1": True,
                  "regression_unit": "days"},
    )


# ---------------------------------------------------------------------------
# Emission
# ---------------------------------------------------------------------------

_TASK_FIELDS = (
    ("next_activity_f1", "f1"),
    ("next_delta_mae_days", "mae_days"),
    ("outcome_f1", "f1"),
    ("cycle_mae_days", "mae_days"),
)


def report_to_csv(report: EvalReport, path) -> None:
    """One row per model, task and k bucket; k = "overall" rows included."""
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["model", "task", "k", "metric", "score", "n"])
        for name, mr in report.models.items():
            for task, metric in _TASK_FIELDS:
                writer.writerow([name, task, "overall", metric,
                                 f"{getattr(mr.overall, task):.6f}", mr.n_samples])
                for k in sorted(mr.per_k):
                    writer.writerow([name, task, k, metric,
                                     f"{getattr(mr.per_k[k], task):.6f}",
                                     report.counts_per_k[k]])


def summary_table(report: EvalReport) -> str:
    """Plain-text overall table: one row per model, one column per task."""
    header = f"{'model':<24} {'next act F1':>12} {'next time MAE':>14} " \
             f"{'outcome F1':>12} {'cycle MAE':>12}"
    lines = [header, "-" * len(header)]
    for name, mr in report.models.items():
        o = mr.overall
        lines.append(f"{name:<24} {o.next_activity_f1:>12.4f} "
                     f"{o.next_delta_mae_days:>14.4f} {o.outcome_f1:>12.4f} "
                     f"{o.cycle_mae_days:>12.4f}")
    lines.append(f"(n = {report.n_samples} prefix samples; MAE in days)")
    return "\n".join(lines)
