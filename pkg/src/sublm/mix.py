"""Linear interpolation of back-off models.

Mixture weights are tuned by expectation-maximization on a tuning corpus
(the per-event log-likelihood of a linear mixture is concave in the weights,
so EM from the uniform initialization reaches the global optimum).  Static
interpolation bakes the tuned mixture into a single back-off model: the
union of all component n-grams is scored with the weighted sum of the
component back-off chains and every context's back-off weight is recomputed
so the merged model normalizes exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .corpus import Corpus, EOS
from .ngram import BOS, BackoffModel, LOG10_FLOOR, _bow
from .validation import as_corpus


@dataclass(frozen=True)
class MixtureWeights:
    """Non-negative weights on the simplex, one per component model."""

    weights: tuple[float, ...]

    def __post_init__(self) -> None:
        if any(w < 0 for w in self.weights):
            raise ValueError(f"negative mixture weight in {self.weights}")
        if abs(sum(self.weights) - 1.0) > 1e-9:
            raise ValueError(f"weights {self.weights} do not sum to 1")

    def __len__(self) -> int:
        return len(self.weights)

    def __getitem__(self, i: int) -> float:
        return self.weights[i]


def _event_probabilities(components: list[BackoffModel], tuning: Corpus) -> np.ndarray:
    """(n_events, n_components) matrix of per-event probabilities."""
    rows = []
    for sent in tuning:
        histories = [(BOS,) * (m.order - 1) for m in components]
        for tok in tuple(sent) + (EOS,):
            rows.append(
                [10.0 ** m.logprob(h, tok) for m, h in zip(components, histories)]
            )
            histories = [
                (h[1:] + (m.map_token(tok),)) if m.order > 1 else ()
                for m, h in zip(components, histories)
            ]
    return np.asarray(rows, dtype=np.float64)


def optimize_weights(
    components: list[BackoffModel],
    tuning: Corpus,
    tol: float = 1e-6,
    max_iterations: int = 1000,
) -> MixtureWeights:
    """EM on per-event mixture responsibilities, from uniform initialization.

    Stops when the per-event log-likelihood improves by less than ``tol``.
    """
    if len(components) < 2:
        raise ValueError("need at least two component models to interpolate")
    tuning = as_corpus(tuning, subword_input=True)
    if len(tuning) == 0:
        raise ValueError("empty tuning corpus")
    probs = _event_probabilities(components, tuning)
    n_events, k = probs.shape
    lam = np.full(k, 1.0 / k)
    prev_ll = -math.inf
    for _ in range(max_iterations):
        weighted = probs * lam
        mix = weighted.sum(axis=1)
        ll = float(np.log(mix).sum()) / n_events
        if ll - prev_ll < tol:
            break
        prev_ll = ll
        lam = (weighted / mix[:, None]).mean(axis=0)
    lam = lam / lam.sum()
    return MixtureWeights(tuple(float(w) for w in lam))


def interpolate_static(
    components: list[BackoffModel], weights: MixtureWeights
) -> BackoffModel:
    """Merge components into one back-off model scoring the linear mixture.

    Components must share the n-gram order and the vocabulary.  Stored
    n-grams are the union of the component n-grams, each scored with the
    weighted sum of the component chains; back-off weights are recomputed
    bottom-up so every context's full-vocabulary distribution sums to one.
    """
    if len(components) != len(weights):
        raise ValueError(
            f"{len(components)} components but {len(weights)} weights"
        )
    if not components:
        raise ValueError("no components to interpolate")
    order = components[0].order
    if any(m.order != order for m in components):
        raise ValueError(
            f"mismatched orders {[m.order for m in components]}; all components "
            "must share one n-gram order"
        )
    vocab = components[0].vocabulary
    if any(m.vocabulary != vocab for m in components):
        raise ValueError(
            "mismatched vocabularies; train all components with a shared vocabulary"
        )

    tables: list[dict] = []
    for n in range(1, order + 1):
        union = set()
        for m in components:
            union.update(m.tables[n - 1])
        table = {}
        for ngram in union:
            h, w = ngram[:-1], ngram[-1]
            p = sum(
                lam * 10.0 ** m.logprob(h, w)
                for lam, m in zip(weights.weights, components)
            )
            table[ngram] = [math.log10(p) if p > 0 else LOG10_FLOOR, None]
        tables.append(table)

    mixed = BackoffModel(
        order,
        vocab,
        tuple(tables),
        {"mixture_weights": list(weights.weights)},
    )
    for n in range(2, order + 1):
        by_context: dict = {}
        for ngram in mixed.tables[n - 1]:
            by_context.setdefault(ngram[:-1], []).append(ngram)
        for h, ngrams in by_context.items():
            stored = sum(10.0 ** mixed.tables[n - 1][ng][0] for ng in ngrams)
            lower = sum(10.0 ** mixed.logprob(h[1:], ng[-1]) for ng in ngrams)
            bow = _bow(1.0 - stored, 1.0 - lower)
            logbow = math.log10(bow) if bow > 0 else LOG10_FLOOR
            mixed.tables[len(h) - 1][h][1] = max(logbow, LOG10_FLOOR)
    return mixed


def dynamic_mixture_perplexity(
    components: list[BackoffModel],
    weights: MixtureWeights,
    corpus: Corpus,
    normalization: str = "per-token",
) -> float:
    """Perplexity of the runtime (non-merged) mixture; reference for tests."""
    from .corpus import CONTINUATION_PREFIX

    corpus = as_corpus(corpus, subword_input=True)
    probs = _event_probabilities(components, corpus)
    mix = probs @ np.asarray(weights.weights)
    total_log10 = float(np.log10(mix).sum())
    if normalization == "per-token":
        denom = probs.shape[0]
    else:
        denom = sum(
            sum(1 for t in sent if not t.startswith(CONTINUATION_PREFIX)) + 1
            for sent in corpus
        )
    return 10.0 ** (-total_log10 / denom)
