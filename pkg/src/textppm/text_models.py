"""Document-to-vector models: tf-idf over n-grams, paragraph vectors, LDA.

All models share the same contract: ``fit`` learns state from a token corpus,
``encode`` maps any token sequence to a fixed-length float vector, and fitted
state is immutable. Randomized models (PV, LDA) are deterministic under seed;
their sampling noise is drawn outside the numeric kernels so the accelerated
and plain backends consume the same stream.
"""

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .errors import ConfigError, FitError, ModelIOError
from .serialize import load_state, save_state
from .text_pipeline import Corpus, TokenSequence

KIND_NAMES = ("bow", "bong", "pv", "lda")

# Pinned training settings (reported in README as artifact choices).
PV_WINDOW = 2
PV_EPOCHS = 20
PV_LR = 0.025
PV_LR_MIN = 1e-4
LDA_BETA = 0.01
LDA_BURN_IN = 500
LDA_INFER_ITERS = 100

_NGRAM_SEP = " "  # tokens never contain whitespace, so joining is lossless


@dataclass(frozen=True)
class TextModelKind:
    """Which model family to use and the output vector length.

    `ngram` is the n-gram order and only meaningful for "bong"; order 1
    reduces to the plain bag of words.
    """

    name: str
    vector_size: int
    ngram: int = 1

    def __post_init__(self):
        if self.name not in KIND_NAMES:
            raise ConfigError(f"unknown text model {self.name!r}, expected one of {KIND_NAMES}")
        if self.vector_size < 1:
            raise ConfigError(f"vector_size must be >= 1, got {self.vector_size}")
        if self.ngram < 1:
            raise ConfigError(f"ngram order must be >= 1, got {self.ngram}")
        if self.name != "bong" and self.ngram != 1:
            raise ConfigError(f"ngram order applies to 'bong' only, not {self.name!r}")

    @classmethod
    def bow(cls, vector_size: int) -> "TextModelKind":
        return cls("bow", vector_size)

    @classmethod
    def bong(cls, vector_size: int, ngram: int = 2) -> "TextModelKind":
        return cls("bong", vector_size, ngram)

    @classmethod
    def pv(cls, vector_size: int) -> "TextModelKind":
        return cls("pv", vector_size)

    @classmethod
    def lda(cls, vector_size: int) -> "TextModelKind":
        return cls("lda", vector_size)


def _doc_ngrams(doc: Sequence[str], n: int) -> list[str]:
    if n == 1:
        return list(doc)
    return [_NGRAM_SEP.join(doc[i:i + n]) for i in range(len(doc) - n + 1)]


def _token_index(corpus: Iterable[TokenSequence]) -> dict[str, int]:
    """All distinct tokens, lexicographic, mapped to dense ids."""
    seen = set()
    for doc in corpus:
        seen.update(doc)
    return {tok: i for i, tok in enumerate(sorted(seen))}


# ---------------------------------------------------------------------------
# tf-idf over n-grams
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TfidfModel:
    """Bag of n-grams with smoothed idf weighting.

    The vocabulary is capped at `vector_size` terms, keeping the most
    frequent ones (total occurrences across the corpus; ties broken
    lexicographically) and ordering the kept terms lexicographically for
    the vector components. idf(t) = ln((1+N)/(1+df(t))) + 1 with N the
    number of training documents and df the document frequency.
    """

    kind: TextModelKind
    seed: int
    vocabulary: tuple[str, ...]
    idf: np.ndarray  # length vector_size, zero-padded past the vocabulary
    index: dict[str, int] = field(repr=False, compare=False, default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "index", {t: i for i, t in enumerate(self.vocabulary)})
        self.idf.setflags(write=False)

    def encode(self, doc: TokenSequence) -> np.ndarray:
        vec = np.zeros(self.kind.vector_size)
        for term in _doc_ngrams(doc, self.kind.ngram):
            i = self.index.get(term)
            if i is not None:
                vec[i] += self.idf[i]
        return vec


def _fit_tfidf(kind: TextModelKind, corpus: Corpus, seed: int) -> TfidfModel:
    total = Counter()
    df = Counter()
    n_docs = 0
    for doc in corpus:
        n_docs += 1
        grams = _doc_ngrams(doc, kind.ngram)
        total.update(grams)
        df.update(set(grams))
    ranked = sorted(total, key=lambda t: (-total[t], t))
    vocab = tuple(sorted(ranked[:kind.vector_size]))
    idf = np.zeros(kind.vector_size)
    for i, term in enumerate(vocab):
        idf[i] = np.log((1.0 + n_docs) / (1.0 + df[term])) + 1.0
    return TfidfModel(kind, seed, vocab, idf)


# ---------------------------------------------------------------------------
# Paragraph vectors (distributed-memory flavor, full softmax)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PvModel:
    """Document embeddings trained to predict the center word from the
    averaged context-word and document vectors. Unseen documents are encoded
    by rerunning the optimization with the word and output weights frozen.
    """

    kind: TextModelKind
    seed: int
    vocabulary: tuple[str, ...]
    w_words: np.ndarray  # (V, size) context word vectors
    w_docs: np.ndarray   # (D, size) training document vectors
    w_out: np.ndarray    # (size, V) softmax output weights
    index: dict[str, int] = field(repr=False, compare=False, default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "index", {t: i for i, t in enumerate(self.vocabulary)})
        for arr in (self.w_words, self.w_docs, self.w_out):
            arr.setflags(write=False)

    def encode(self, doc: TokenSequence) -> np.ndarray:
        ids = [self.index[t] for t in doc if t in self.index]
        if not ids:
            return np.zeros(self.kind.vector_size)
        size = self.kind.vector_size
        rng = np.random.Generator(np.random.PCG64(self.seed))
        dvec = rng.uniform(-0.5 / size, 0.5 / size, size)
        kernels.pv_infer_doc(np.asarray(ids, np.int64), dvec,
                             self.w_words, self.w_out,
                             PV_WINDOW, PV_EPOCHS, PV_LR, PV_LR_MIN)
        return dvec


def _fit_pv(kind: TextModelKind, corpus: Corpus, seed: int) -> PvModel:
    if len(corpus) == 0:
        raise FitError("paragraph-vector fit needs a non-empty corpus")
    index = _token_index(corpus)
    vocab = tuple(index)
    size = kind.vector_size
    n_docs = len(corpus)

    tokens: list[int] = []
    pos_doc: list[int] = []
    bounds = np.zeros(n_docs + 1, np.int64)
    for d, doc in enumerate(corpus):
        for tok in doc:
            tokens.append(index[tok])
            pos_doc.append(d)
        bounds[d + 1] = len(tokens)
    token_arr = np.asarray(tokens, np.int64)
    pos_doc_arr = np.asarray(pos_doc, np.int64)

    rng = np.random.Generator(np.random.PCG64(seed))
    w_words = rng.uniform(-0.5 / size, 0.5 / size, (len(vocab), size))
    w_docs = rng.uniform(-0.5 / size, 0.5 / size, (n_docs, size))
    w_out = np.zeros((size, len(vocab)))

    n_pos = len(token_arr)
    total_steps = max(1, PV_EPOCHS * n_pos)
    for epoch in range(PV_EPOCHS):
        order = rng.permutation(n_pos).astype(np.int64)
        kernels.pv_train_positions(token_arr, pos_doc_arr, bounds, order,
                                   w_words, w_docs, w_out,
                                   PV_WINDOW, PV_LR, PV_LR_MIN,
                                   epoch * n_pos, total_steps)
    return PvModel(kind, seed, vocab, w_words, w_docs, w_out)


# ---------------------------------------------------------------------------
# LDA via collapsed Gibbs sampling
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LdaModel:
    """Topic model with K = vector_size topics, symmetric priors
    alpha = 50/K and beta = 0.01. encode returns the smoothed posterior
    topic distribution of the document (a probability vector).
    """

    kind: TextModelKind
    seed: int
    vocabulary: tuple[str, ...]
    n_wk: np.ndarray  # (V, K) topic-word counts after burn-in
    n_k: np.ndarray   # (K,) topic totals
    loglik: tuple[float, ...] = ()  # sampled every 10 sweeps during fit
    index: dict[str, int] = field(repr=False, compare=False, default_factory=dict)
    phi: np.ndarray = field(repr=False, compare=False, default=None)

    def __post_init__(self):
        object.__setattr__(self, "index", {t: i for i, t in enumerate(self.vocabulary)})
        V = len(self.vocabulary)
        beta = LDA_BETA
        phi = (self.n_wk + beta) / (self.n_k + V * beta)
        phi.setflags(write=False)
        object.__setattr__(self, "phi", phi)
        self.n_wk.setflags(write=False)
        self.n_k.setflags(write=False)

    @property
    def alpha(self) -> float:
        return 50.0 / self.kind.vector_size

    def encode(self, doc: TokenSequence) -> np.ndarray:
        K = self.kind.vector_size
        ids = [self.index[t] for t in doc if t in self.index]
        if not ids:
            return np.full(K, 1.0 / K)
        word_ids = np.asarray(ids, np.int64)
        n = len(ids)
        rng = np.random.Generator(np.random.PCG64(self.seed))
        init_u = rng.random(n)
        sweep_u = rng.random((LDA_INFER_ITERS, n))
        m_k = kernels.lda_infer_doc(word_ids, self.phi, self.alpha, init_u, sweep_u)
        return (m_k + self.alpha) / (n + K * self.alpha)


def _lda_point_loglik(doc_ids, word_ids, n_dk, n_wk, n_k, doc_len, alpha, beta):
    """Token log-likelihood under the current point estimates of the
    document-topic and topic-word distributions. Used to watch the burn-in
    trend; not part of the sampler."""
    V = n_wk.shape[0]
    theta = (n_dk + alpha) / (doc_len[:, None] + n_dk.shape[1] * alpha)
    phi = (n_wk + beta) / (n_k + V * beta)
    per_token = np.einsum("ik,ik->i", theta[doc_ids], phi[word_ids])
    return float(np.log(per_token).sum())


def _fit_lda(kind: TextModelKind, corpus: Corpus, seed: int,
             track_loglik: bool = False) -> LdaModel:
    if len(corpus) == 0:
        raise FitError("topic-model fit needs a non-empty corpus")
    index = _token_index(corpus)
    vocab = tuple(index)
    K = kind.vector_size
    alpha = 50.0 / K

    doc_ids: list[int] = []
    word_ids: list[int] = []
    for d, doc in enumerate(corpus):
        for tok in doc:
            doc_ids.append(d)
            word_ids.append(index[tok])
    doc_arr = np.asarray(doc_ids, np.int64)
    word_arr = np.asarray(word_ids, np.int64)
    n = len(doc_arr)

    n_dk = np.zeros((len(corpus), K), np.int64)
    n_wk = np.zeros((len(vocab), K), np.int64)
    n_k = np.zeros(K, np.int64)
    rng = np.random.Generator(np.random.PCG64(seed))
    z = kernels.lda_init_assign(doc_arr, word_arr, n_dk, n_wk, n_k, rng.random(n))

    doc_len = n_dk.sum(axis=1)
    history: list[float] = []
    for sweep in range(LDA_BURN_IN):
        kernels.lda_gibbs_sweep(doc_arr, word_arr, z, n_dk, n_wk, n_k,
                                alpha, LDA_BETA, rng.random(n))
        if track_loglik and n > 0 and sweep % 10 == 0:
            history.append(_lda_point_loglik(doc_arr, word_arr, n_dk, n_wk,
                                             n_k, doc_len, alpha, LDA_BETA))
    return LdaModel(kind, seed, vocab, n_wk, n_k, tuple(history))


# ---------------------------------------------------------------------------
# Dispatch and persistence
# ---------------------------------------------------------------------------

FittedTextModel = TfidfModel | PvModel | LdaModel


def fit(kind: TextModelKind, corpus: Corpus, seed: int, **kwargs) -> FittedTextModel:
    """Train a text model of the requested kind on the corpus."""
    if kind.name in ("bow", "bong"):
        return _fit_tfidf(kind, corpus, seed)
    if kind.name == "pv":
        return _fit_pv(kind, corpus, seed)
    return _fit_lda(kind, corpus, seed, **kwargs)


def encode_corpus(model: FittedTextModel, docs: Iterable[TokenSequence]) -> np.ndarray:
    """Stack encode() over documents into an (n_docs, vector_size) matrix."""
    rows = [model.encode(doc) for doc in docs]
    if not rows:
        return np.zeros((0, model.kind.vector_size))
    return np.stack(rows)


def save_model(model: FittedTextModel, path) -> None:
    meta = {
        "model": type(model).__name__,
        "kind": {"name": model.kind.name, "vector_size": model.kind.vector_size,
                 "ngram": model.kind.ngram},
        "seed": model.seed,
        "vocabulary": list(model.vocabulary),
    }
    if isinstance(model, TfidfModel):
        arrays = {"idf": model.idf}
    elif isinstance(model, PvModel):
        arrays = {"w_words": model.w_words, "w_docs": model.w_docs, "w_out": model.w_out}
    else:
        arrays = {"n_wk": model.n_wk, "n_k": model.n_k,
                  "loglik": np.asarray(model.loglik)}
    save_state(path, meta, arrays)


def load_model(path) -> FittedTextModel:
    meta, arrays = load_state(path)
    try:
        kind = TextModelKind(**meta["kind"])
        seed = int(meta["seed"])
        vocab = tuple(meta["vocabulary"])
        name = meta["model"]
    except (KeyError, TypeError) as exc:
        raise ModelIOError(f"{path}: missing model metadata ({exc})") from exc
    if name == "TfidfModel":
        return TfidfModel(kind, seed, vocab, arrays["idf"])
    if name == "PvModel":
        return PvModel(kind, seed, vocab, arrays["w_words"], arrays["w_docs"],
                       arrays["w_out"])
    if name == "LdaModel":
        return LdaModel(kind, seed, vocab, arrays["n_wk"], arrays["n_k"],
                        tuple(arrays["loglik"].tolist()))
    raise ModelIOError(f"{path}: unknown model tag {name!r}")
