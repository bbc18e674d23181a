"""Synthetic message-driven logs and their built-in optimal predictors."""

import math

import pytest

from textppm.errors import ConfigError
from textppm.log_model import END_ACTIVITY, AttributeKind, prefix_log
from textppm.metrics import evaluate
from textppm.synth_gen import (DOWN, N_STEPS, POOLS, START_ACTIVITY, UP,
                               SynthSpec, _median_tables, _mixture_median,
                               generate, make_oracle, step_activity)
from textppm.ts_baseline import Abstraction, build


@pytest.fixture(scope="module")
def small_run():
    spec = SynthSpec(n_cases=60, seed=11)
    log, oracle = generate(spec)
    return spec, log, oracle


def test_spec_validation():
    with pytest.raises(ConfigError, match="n_cases"):
        SynthSpec(n_cases=0, seed=1)
    with pytest.raises(ConfigError, match="emission"):
        SynthSpec(n_cases=1, seed=1, text_emission_prob=1.5)
    with pytest.raises(ConfigError, match="positive"):
        SynthSpec(n_cases=1, seed=1, slow_mean_s=0.0)
    with pytest.raises(ConfigError, match="words_per_coin"):
        SynthSpec(n_cases=1, seed=1, words_per_coin=0)


def test_generation_is_deterministic():
    spec = SynthSpec(n_cases=25, seed=7)
    log1, _ = generate(spec)
    log2, _ = generate(spec)
    assert log1 == log2


def test_seed_changes_the_log():
    log1, _ = generate(SynthSpec(n_cases=25, seed=7))
    log2, _ = generate(SynthSpec(n_cases=25, seed=8))
    assert log1 != log2


def test_trace_shape(small_run):
    spec, log, _ = small_run
    assert len(log) == spec.n_cases
    assert log.schema == {"message": AttributeKind.TEXTUAL}
    for trace in log:
        acts = [e.activity for e in trace.events]
        assert len(acts) == N_STEPS + 1
        assert acts[0] == START_ACTIVITY
        for step, act in enumerate(acts[1:], start=1):
            assert act in (step_activity(step, UP), step_activity(step, DOWN))
        times = [e.timestamp for e in trace.events]
        assert all(b > a for a, b in zip(times, times[1:]))


def test_messages_spell_out_future_coins(small_run):
    spec, log, _ = small_run
    for trace in log:
        branches = [e.activity.split("_")[1] for e in trace.events[1:]]
        for i, event in enumerate(trace.events):
            words = event.textuals["message"].split()
            if i == N_STEPS:
                assert words == []
                continue
            assert len(words) == spec.words_per_coin * (N_STEPS - i)
            for g, word in enumerate(words):
                step = i + 1 + g // spec.words_per_coin
                assert word in POOLS[(step, branches[step - 1])]


def test_words_per_coin_scales_messages():
    log, _ = generate(SynthSpec(n_cases=10, seed=3, words_per_coin=2))
    first = log.traces[0].events[0]
    assert len(first.textuals["message"].split()) == 2 * N_STEPS


def test_emission_zero_silences_messages_and_blinds_the_oracle():
    spec = SynthSpec(n_cases=40, seed=5, text_emission_prob=0.0)
    log, oracle = generate(spec)
    assert all(e.textuals["message"] == "" for t in log for e in t.events)
    blind = make_oracle(spec, text_aware=False)
    for sample in prefix_log(log):
        assert oracle.predict_prefix(sample.prefix) == \
            blind.predict_prefix(sample.prefix)


def test_oracle_classification_is_exact_with_full_text(small_run):
    _, log, oracle = small_run
    report = evaluate(oracle, log)
    assert report.overall.next_activity_f1 == 1.0
    assert report.overall.outcome_f1 == 1.0


def test_oracle_on_complete_case_reads_off_the_trace(small_run):
    _, log, oracle = small_run
    trace = log.traces[0]
    pred = oracle.predict_prefix(trace.events)
    assert pred.next_activity == END_ACTIVITY
    assert pred.next_delta_seconds == 0.0
    assert pred.outcome == trace.events[-1].activity
    assert pred.cycle_seconds == trace.events[-1].timestamp - trace.events[0].timestamp


def test_blind_oracle_guesses_branches_at_chance_level():
    spec = SynthSpec(n_cases=600, seed=21)
    log, _ = generate(spec)
    blind = make_oracle(spec, text_aware=False)
    hits = 0
    for trace in log:
        pred = blind.predict_prefix(trace.events[:1])
        assert pred.next_activity == step_activity(1, DOWN)  # lexicographic tie
        hits += pred.next_activity == trace.events[1].activity
    assert hits / len(log) == pytest.approx(0.5, abs=0.08)


def test_median_tables_single_steps_are_analytic():
    spec = SynthSpec(n_cases=1, seed=0)
    delta, sums = _median_tables(spec.step_means())
    assert delta[(3, "f")] == pytest.approx(spec.fast_mean_s * math.log(2.0))
    assert delta[(3, "s")] == pytest.approx(spec.slow_mean_s * math.log(2.0))
    assert delta[(1, "f")] == pytest.approx(spec.early_fast_s * math.log(2.0))
    # length-1 sums cover exactly the final step
    for sym in "fs?":
        assert sums[(sym,)] == delta[(3, sym)]


def test_mixture_median_solves_the_survival_equation():
    fast, slow = 1800.0, 345600.0
    m = _mixture_median(fast, slow)
    assert math.log(2.0) * fast < m < math.log(2.0) * slow
    surv = 0.5 * math.exp(-m / fast) + 0.5 * math.exp(-m / slow)
    assert surv == pytest.approx(0.5, abs=1e-9)


def test_median_tables_sums_are_monotone_in_revealed_slowness():
    spec = SynthSpec(n_cases=1, seed=0)
    _, sums = _median_tables(spec.step_means())
    # revealing a slow final step must raise the remaining-time median
    assert sums[("f", "s")] > sums[("f", "f")]
    assert sums[("f", "f")] < sums[("f", "?")] < sums[("f", "s")]
    # an extra pending step can only add time
    assert sums[("?", "?", "?")] > sums[("?", "?")] > sums[("?",)]


def test_oracle_beats_history_only_baseline_on_time_targets():
    spec = SynthSpec(n_cases=300, seed=4)
    log, oracle = generate(spec)
    train, test = log.traces[:200], log.traces[200:]
    from textppm.log_model import build_log
    train_log = build_log(train, log.schema)
    test_log = build_log(test, log.schema)
    ats = build(train_log, Abstraction("sequence"))
    r_oracle = evaluate(oracle, test_log)
    r_ats = evaluate(ats, test_log)
    assert r_oracle.overall.next_activity_f1 >= r_ats.overall.next_activity_f1
    assert r_oracle.overall.outcome_f1 >= r_ats.overall.outcome_f1
    assert r_oracle.overall.cycle_mae_days < r_ats.overall.cycle_mae_days
    assert r_oracle.overall.next_delta_mae_days <= r_ats.overall.next_delta_mae_days
