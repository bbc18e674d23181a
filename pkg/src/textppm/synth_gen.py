"""Synthetic logs whose control flow is driven by message text.

Each case is ⟨start, s1_x, s2_y, s3_z⟩ where the branch of step si is "up"
or "down" by an independent fair coin and the activity label carries both
the step index and the branch. Step durations are exponential with branch-specific
means, so the time targets depend on the coins as well. The first two steps
are short on either branch (minutes); the final step carries the dominant
contrast (half an hour up, days down), so remaining-time uncertainty is
ruled by a single revealed-or-hidden coin at every prefix length rather
than washed out by a sum of comparable mixtures.

The message of an event spells out every not-yet-executed coin, one keyword
per future step, drawn from pools that are disjoint across both steps and
branches. The activities and timestamps alone carry no information about
future coins, so the messages are the only source of look-ahead signal and
their value can be quantified exactly.

`generate` also hands back the Bayes-optimal predictor derived from the
generator's own rules (classification: posterior mode, time targets:
posterior median), in a text-aware and a text-blind variant. The gap between
the two variants is the ceiling for what any model can gain from the text.
"""

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConfigError
from .log_model import END_ACTIVITY, AttributeKind, Event, EventLog, Trace

START_ACTIVITY = "start"
UP, DOWN = "up", "down"
N_STEPS = 3


def step_activity(step: int, branch: str) -> str:
    """Activity label of a step: position and branch are both explicit."""
    return f"s{step}_{branch}"

#: Keyword pools per (step, branch); all 12 words are distinct, none is a
#: stop word, and all are dictionary base forms (stable under lemmatization).
#: Small pools keep the per-word sample count high, so learners see each
#: keyword often enough to estimate its weight.
POOLS = {
    (1, UP): ("approve", "accept"),
    (1, DOWN): ("reject", "refuse"),
    (2, UP): ("advance", "green"),
    (2, DOWN): ("halt", "red"),
    (3, UP): ("positive", "smooth"),
    (3, DOWN): ("negative", "overdue"),
}

_ORACLE_MC_SEED = 202203  # fixed stream for the posterior-median tables
_ORACLE_MC_DRAWS = 400_000

#: posterior-median tables are pure functions of the step means; cache them
#: so oracles for repeated runs (e.g. one per seed) pay for one Monte Carlo
_MEDIAN_CACHE: dict[tuple, tuple[dict, dict]] = {}


@dataclass(frozen=True)
class SynthSpec:
    """Generator settings; the branch rules themselves are fixed."""

    n_cases: int
    seed: int
    text_emission_prob: float = 1.0
    early_fast_s: float = 240.0      # steps 1..2 "up" duration mean
    early_slow_s: float = 900.0      # steps 1..2 "down" duration mean
    fast_mean_s: float = 1800.0      # final step "up" duration mean
    slow_mean_s: float = 345600.0    # final step "down" duration mean (4 days)
    words_per_coin: int = 1
    start_time: float = 1640995200.0  # 2022-01-01 00:00:00 UTC
    case_stagger_s: float = 3600.0

    def __post_init__(self):
        if self.n_cases < 1:
            raise ConfigError("n_cases must be >= 1")
        if not 0.0 <= self.text_emission_prob <= 1.0:
            raise ConfigError("text_emission_prob must be in [0, 1]")
        if min(self.early_fast_s, self.early_slow_s,
               self.fast_mean_s, self.slow_mean_s) <= 0:
            raise ConfigError("duration means must be positive")
        if self.words_per_coin < 1:
            raise ConfigError("words_per_coin must be >= 1")

    def step_means(self) -> tuple[tuple[float, float], ...]:
        """Per-step (up mean, down mean) duration parameters."""
        early = (self.early_fast_s, self.early_slow_s)
        return (early,) * (N_STEPS - 1) + ((self.fast_mean_s, self.slow_mean_s),)


def generate(spec: SynthSpec) -> tuple[EventLog, "SynthOracle"]:
    """Build the log and its text-aware oracle (see :func:`make_oracle`)."""
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    means = spec.step_means()
    traces = []
    for case in range(spec.n_cases):
        coins = rng.random(N_STEPS) < 0.5  # True = up
        gaps = [rng.exponential(means[i][0] if c else means[i][1])
                for i, c in enumerate(coins)]
        emit = rng.random(N_STEPS + 1) < spec.text_emission_prob
        messages = []
        for i in range(N_STEPS + 1):
            if i == N_STEPS or not emit[i]:
                messages.append("")  # nothing left to reveal, or not emitted
                continue
            words = []
            for step in range(i + 1, N_STEPS + 1):
                pool = POOLS[(step, UP if coins[step - 1] else DOWN)]
                words.extend(rng.choice(np.array(pool),
                                        size=spec.words_per_coin))
            messages.append(" ".join(words))

        t = spec.start_time + case * spec.case_stagger_s
        activities = [START_ACTIVITY] + [
            step_activity(i + 1, UP if c else DOWN) for i, c in enumerate(coins)]
        events = []
        for i, act in enumerate(activities):
            if i > 0:
                t += gaps[i - 1]
            events.append(Event(act, t, textuals={"message": messages[i]}))
        traces.append(Trace(f"case_{case:05d}", tuple(events)))
    log = EventLog(schema={"message": AttributeKind.TEXTUAL}, traces=tuple(traces))
    return log, make_oracle(spec, text_aware=True)


# ---------------------------------------------------------------------------
# Oracle
# ---------------------------------------------------------------------------

def _mixture_median(fast: float, slow: float) -> float:
    """Median of the 50/50 mixture of two exponentials, by bisection."""
    lo, hi = 0.0, 100.0 * max(fast, slow)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        surv = 0.5 * math.exp(-mid / fast) + 0.5 * math.exp(-mid / slow)
        if surv > 0.5:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _median_tables(means: tuple[tuple[float, float], ...]) -> tuple[dict, dict]:
    """Posterior-median lookup tables for the given per-step means.

    Returns (delta, sums): delta maps (step, symbol) to the median of that
    step's duration, sums maps a step-ordered symbol tuple for the trailing
    steps (length L covers steps N-L+1..N) to the median of their total.
    Sums of exponentials have no closed-form median, hence the fixed-seed
    Monte Carlo (single-step entries stay analytic).
    """
    if means in _MEDIAN_CACHE:
        return _MEDIAN_CACHE[means]
    delta: dict[tuple[int, str], float] = {}
    for step in range(1, N_STEPS + 1):
        fast, slow = means[step - 1]
        delta[(step, "f")] = fast * math.log(2.0)
        delta[(step, "s")] = slow * math.log(2.0)
        delta[(step, "?")] = _mixture_median(fast, slow)

    rng = np.random.Generator(np.random.PCG64(_ORACLE_MC_SEED))
    sums: dict[tuple[str, ...], float] = {}
    for length in range(1, N_STEPS + 1):
        steps = range(N_STEPS - length + 1, N_STEPS + 1)
        for symbols in itertools.product("fs?", repeat=length):
            if length == 1:
                sums[symbols] = delta[(N_STEPS, symbols[0])]
                continue
            total = np.zeros(_ORACLE_MC_DRAWS)
            for step, sym in zip(steps, symbols):
                fast, slow = means[step - 1]
                if sym == "f":
                    total += rng.exponential(fast, _ORACLE_MC_DRAWS)
                elif sym == "s":
                    total += rng.exponential(slow, _ORACLE_MC_DRAWS)
                else:
                    total += np.where(
                        rng.random(_ORACLE_MC_DRAWS) < 0.5,
                        rng.exponential(fast, _ORACLE_MC_DRAWS),
                        rng.exponential(slow, _ORACLE_MC_DRAWS))
            sums[symbols] = float(np.median(total))
    _MEDIAN_CACHE[means] = (delta, sums)
    return delta, sums


@dataclass(frozen=True)
class OraclePrediction:
    next_activity: str
    next_delta_seconds: float
    outcome: str
    cycle_seconds: float


class SynthOracle:
    """Bayes-optimal predictor for logs from :func:`generate`.

    Classification targets use the posterior mode (ties broken by the
    lexicographically smallest label, matching the tie rule of the
    baselines); time targets use the posterior median, which minimizes
    absolute error. The blind variant ignores every message and is the
    text-free optimum on the same log.
    """

    #: remaining-gap symbols: branch known fast / known slow / unrevealed
    _F, _S, _M = "f", "s", "?"

    def __init__(self, spec: SynthSpec, text_aware: bool = True):
        self.spec = spec
        self.text_aware = text_aware
        self._word_branch = {}
        for (step, branch), words in POOLS.items():
            for word in words:
                self._word_branch[word] = (step, branch)
        self._delta_median, self._sum_median = _median_tables(spec.step_means())

    def _known_coins(self, events: Sequence[Event]) -> dict[int, str]:
        """Branches revealed by the messages seen so far: step -> up/down."""
        known: dict[int, str] = {}
        if not self.text_aware:
            return known
        for event in events:
            for word in event.textuals.get("message", "").split():
                hit = self._word_branch.get(word)
                if hit is not None:
                    known[hit[0]] = hit[1]
        return known

    def _symbol(self, known: dict[int, str], step: int) -> str:
        branch = known.get(step)
        if branch == UP:
            return self._F
        if branch == DOWN:
            return self._S
        return self._M

    def predict_prefix(self, events: Sequence[Event]) -> OraclePrediction:
        k = len(events)
        if k >= N_STEPS + 1:
            # complete case: everything is observed
            return OraclePrediction(
                next_activity=END_ACTIVITY,
                next_delta_seconds=0.0,
                outcome=events[-1].activity,
                cycle_seconds=events[-1].timestamp - events[0].timestamp,
            )
        known = self._known_coins(events)
        # posterior mode; an unrevealed coin is 50/50 and the lexicographic
        # tie-break picks "down" ("sK_down" < "sK_up")
        next_act = step_activity(k, known.get(k, DOWN))
        outcome = step_activity(N_STEPS, known.get(N_STEPS, DOWN))
        elapsed = events[-1].timestamp - events[0].timestamp
        symbols = tuple(self._symbol(known, step)
                        for step in range(k, N_STEPS + 1))
        return OraclePrediction(
            next_activity=next_act,
            next_delta_seconds=self._delta_median[(k, self._symbol(known, k))],
            outcome=outcome,
            cycle_seconds=elapsed + self._sum_median[symbols],
        )


def make_oracle(spec: SynthSpec, text_aware: bool = True) -> SynthOracle:
    return SynthOracle(spec, text_aware)
