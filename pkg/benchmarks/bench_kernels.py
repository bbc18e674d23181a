"""Benchmark the jitted kernels against their pure-Python fallbacks.

Runs each hot kernel on a representative workload through both execution
paths in one process (the fallback is reached via ``accel.python_impl``) and
prints per-kernel timings and speedups. Run with ``--quick`` to shrink the
workloads; the plain interpreter path of the Gibbs sweep is the slow one.

Usage:
    python3 benchmarks/bench_kernels.py [--quick] [--repeats N]
"""

import argparse
import time

import numpy as np

from textppm import kernels
from textppm.accel import NUMBA_ENABLED, python_impl


def _time(func, args, repeats):
    best = float("inf")
    for _ in range(repeats):
        copied = [np.copy(a) if isinstance(a, np.ndarray) else a for a in args]
        t0 = time.perf_counter()
        func(*copied)
        best = min(best, time.perf_counter() - t0)
    return best


def _lstm_case(rng, batch, steps, dim, hidden):
    x = rng.standard_normal((batch, steps, dim))
    wx = rng.standard_normal((dim, 4 * hidden)) * 0.1
    wh = rng.standard_normal((hidden, 4 * hidden)) * 0.1
    b = np.zeros(4 * hidden)
    fwd = (x, wx, wh, b)
    hs, cs, gi, gf, gg, go = kernels.lstm_layer_forward(*fwd)
    dh = rng.standard_normal((batch, steps, hidden))
    bwd = (x, hs, cs, gi, gf, gg, go, wx, wh, dh)
    return fwd, bwd

def _lda_case(rng, n_docs, doc_len, vocab, topics):
    n = n_docs * doc_len
    doc_ids = np.repeat(np.arange(n_docs, dtype=np.int64), doc_len)
    word_ids = rng.integers(0, vocab, n).astype(np.int64)
    n_dk = np.zeros((n_docs, topics), np.int64)
    n_wk = np.zeros((vocab, topics), np.int64)
    n_k = np.zeros(topics, np.int64)
    z = kernels.lda_init_assign(doc_ids, word_ids, n_dk, n_wk, n_k, rng.random(n))
    return (doc_ids, word_ids, z, n_dk, n_wk, n_k, 50.0 / topics, 0.01,
            rng.random(n))

def _pv_case(rng, n_docs, doc_len, vocab, size):
    tokens = rng.integers(0, vocab, n_docs * doc_len).astype(np.int64)
    pos_doc = np.repeat(np.arange(n_docs, dtype=np.int64), doc_len)
    bounds = np.arange(0, n_docs * doc_len + 1, doc_len, dtype=np.int64)
    order = rng.permutation(n_docs * doc_len).astype(np.int64)
    w_words = (rng.random((vocab, size)) - 0.5) / size
    w_docs = (rng.random((n_docs, size)) - 0.5) / size
    w_out = np.zeros((size, vocab))
    return (tokens, pos_doc, bounds, order, w_words, w_docs, w_out,
            2, 0.025, 1e-4, 0, order.shape[0])


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--quick", action="store_true", help="smaller workloads")
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    rng = np.random.default_rng(7)
    scale = 4 if args.quick else 1
    fwd, bwd = _lstm_case(rng, 256 // scale, 8, 50, 64)
    cases = [
        ("lstm_layer_forward", kernels.lstm_layer_forward, fwd),
        ("lstm_layer_backward", kernels.lstm_layer_backward, bwd),
        ("lda_gibbs_sweep", kernels.lda_gibbs_sweep,
         _lda_case(rng, 200 // scale, 50, 120, 20)),
        ("pv_train_positions", kernels.pv_train_positions,
         _pv_case(rng, 80 // scale, 30, 150, 20)),
    ]

    if not NUMBA_ENABLED:
        print("note: numba is disabled or unavailable; both columns will "
              "run the Python path")
    print(f"{'kernel':24} {'python':>10} {'jitted':>10} {'speedup':>9}")
    for name, kernel, case in cases:
        kernel(*[np.copy(a) if isinstance(a, np.ndarray) else a
                 for a in case])  # trigger compilation outside timing
        jitted = _time(kernel, case, args.repeats)
        plain = _time(python_impl(kernel), case, args.repeats)
        print(f"{name:24} {plain * 1e3:9.1f}ms {jitted * 1e3:9.1f}ms "
              f"{plain / jitted:8.1f}x")


if __name__ == "__main__":
    main()
