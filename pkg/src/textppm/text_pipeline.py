"""Document normalization: lowercase, tokenize, lemmatize, drop stop words.

The lemmatizer is a bundled dictionary of inflected form -> lemma with
identity fallback for unknown words; no POS tagging is attempted, which keeps
the pipeline deterministic and dependency-free. Both resource files live in
``textppm/resources`` as plain text.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from importlib.resources import files

from .errors import SchemaError
from .log_model import AttributeKind, EventLog

TokenSequence = tuple[str, ...]

# Unicode word characters minus the underscore; digits are kept as tokens,
# punctuation-only runs disappear.
_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


def _resource_lines(name: str) -> list[str]:
    text = files("textppm").joinpath("resources", name).read_text(encoding="utf-8")
    return [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]


@lru_cache(maxsize=1)
def stop_words() -> frozenset[str]:
    return frozenset(_resource_lines("stopwords.txt"))


@lru_cache(maxsize=1)
def lemma_table() -> dict[str, str]:
    table = {}
    for line in _resource_lines("lemmas.tsv"):
        form, _, lemma = line.partition("\t")
        table[form] = lemma
    return table


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text)


def lemmatize(token: str) -> str:
    return lemma_table().get(token, token)


def preprocess(document: str) -> TokenSequence:
    """Normalize one raw document to its token sequence.

    Steps, in order: lowercase, tokenize, lemmatize, remove stop words.
    The empty document maps to the empty sequence.
    """
    stops = stop_words()
    tokens = tokenize(document.lower())
    return tuple(
        lemma for lemma in (lemmatize(t) for t in tokens) if lemma not in stops
    )


@dataclass(frozen=True)
class Corpus:
    """All instances of one textual attribute, one document per event."""

    attribute: str
    documents: tuple[TokenSequence, ...]

    def __len__(self) -> int:
        return len(self.documents)

    def __iter__(self):
        return iter(self.documents)


def build_corpus(log: EventLog, attribute: str) -> Corpus:
    """Preprocessed corpus of ``attribute`` over every event, in log order.

    Empty documents are preserved as empty token sequences so corpus indices
    line up with event positions.
    """
    kind = log.schema.get(attribute)
    if kind != AttributeKind.TEXTUAL:
        raise SchemaError(f"attribute {attribute!r} is not declared textual (got {kind})")
    docs = [
        preprocess(event.textuals[attribute])
        for trace in log.traces
        for event in trace.events
    ]
    return Corpus(attribute=attribute, documents=tuple(docs))


def vocabulary(corpus: Corpus) -> dict[str, int]:
    """Lexicographically ordered terms with document frequencies.

    df counts documents containing a term at least once, not occurrences.
    """
    df: dict[str, int] = {}
    for doc in corpus.documents:
        for term in set(doc):
            df[term] = df.get(term, 0) + 1
    return {term: df[term] for term in sorted(df)}
