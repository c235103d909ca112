"""Input validation and coercion helpers shared by the estimators."""

from __future__ import annotations

from pathlib import Path
from typing import Any, Iterable

import numpy as np

from .corpus import Corpus, load_corpus


def as_corpus(X: Any, subword_input: bool = False) -> Corpus:
    """Coerce estimator input into a :class:`Corpus`.

    Accepts a Corpus, a path to a corpus file, an iterable of pre-tokenized
    sentences (sequences of tokens) or an iterable of whitespace-separated
    sentence strings.
    """
    if isinstance(X, Corpus):
        return X
    if isinstance(X, (str, Path)):
        return load_corpus(X, normalization="none", subword_input=subword_input)
    rows = []
    for sent in X:
        if isinstance(sent, str):
            rows.append(sent.split())
        else:
            rows.append(list(sent))
    return Corpus.from_sentences(rows, subword_input=subword_input)


def check_rng(random_state: Any) -> np.random.Generator:
    """Coerce seeds / generators into a numpy Generator."""
    if isinstance(random_state, np.random.Generator):
        return random_state
    return np.random.default_rng(random_state)


def check_positive(name: str, value: float) -> None:
    if not value > 0:
        raise ValueError(f"{name} must be positive, got {value!r}")


def iter_words(X: Any) -> Iterable[str]:
    """Yield every word token of a corpus-like input, in order."""
    for sent in as_corpus(X):
        yield from sent
