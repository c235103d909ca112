"""Back-off n-gram language models with interpolated modified Kneser-Ney.

Counting injects ``order - 1`` leading ``<s>`` markers and one trailing
``</s>`` per sentence and records every sliding window of length 1..order.
Estimation uses raw counts at the highest order and distinct-left-extension
(continuation) counts below, with three count-dependent discounts per order.
The interpolated model is stored in back-off form: because every counted
n-gram's suffix is itself counted, the back-off weight of a context equals
its interpolation mass, and the back-off chain reproduces the interpolated
probabilities exactly.

The unigram level is the undiscounted continuation distribution with one
reserved pseudo-count whose mass goes to ``<unk>`` (shared equally with any
in-vocabulary words that never occurred in training), so every context sums
to one over the full vocabulary and open-vocabulary scoring is total.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .corpus import BOS, CONTINUATION_PREFIX, EOS, UNK, Corpus, WordVocabulary, build_vocabulary
from .errors import ContractViolationError, DataFormatError
from .validation import as_corpus

#: log10 value used for back-off weights that are exactly zero.
LOG10_FLOOR = -99.0

#: Absolute discount applied to every count of an order whose
#: count-of-counts statistics are too sparse for the closed-form estimate.
FALLBACK_DISCOUNT = 0.75


# ---------------------------------------------------------------------------
# Counting


@dataclass(frozen=True)
class NgramCountTable:
    """Raw n-gram counts of a marker-augmented corpus.

    ``tables[n - 1]`` maps each n-gram tuple to its occurrence count.
    """

    order: int
    tables: tuple[dict, ...]
    vocabulary: frozenset

    def total(self, n: int) -> int:
        return sum(self.tables[n - 1].values())


def count_ngrams(
    corpus: Corpus,
    order: int,
    vocab: WordVocabulary | Iterable[str] | None = None,
) -> NgramCountTable:
    """Count all 1..order-grams; tokens outside ``vocab`` become ``<unk>``."""
    if order < 1:
        raise ValueError(f"order must be >= 1, got {order}")
    if vocab is None:
        words: frozenset = frozenset(t for sent in corpus for t in sent)
    elif isinstance(vocab, WordVocabulary):
        words = vocab.words
    else:
        words = frozenset(vocab)
    tables: tuple[dict, ...] = tuple({} for _ in range(order))
    prefix = (BOS,) * (order - 1)
    for sent in corpus:
        padded = prefix + tuple(t if t in words else UNK for t in sent) + (EOS,)
        for n in range(1, order + 1):
            table = tables[n - 1]
            for i in range(len(padded) - n + 1):
                key = padded[i : i + n]
                table[key] = table.get(key, 0) + 1
    return NgramCountTable(order, tables, words | {BOS, EOS, UNK})


# ---------------------------------------------------------------------------
# Discounts


@dataclass(frozen=True)
class OrderDiscounts:
    """The three count-dependent discounts of one n-gram order."""

    d1: float
    d2: float
    d3plus: float
    fallback: bool = False

    def discount(self, count: int) -> float:
        if count <= 0:
            return 0.0
        if count == 1:
            return self.d1
        if count == 2:
            return self.d2
        return self.d3plus


@dataclass(frozen=True)
class DiscountSet:
    """Discounts per order 2..N."""

    per_order: dict[int, OrderDiscounts]

    def for_order(self, n: int) -> OrderDiscounts:
        return self.per_order[n]


def estimate_discounts(counts: NgramCountTable) -> DiscountSet:
    """Closed-form modified Kneser-Ney discounts from counts-of-counts.

    Any order with a zero among n1..n4 falls back to a single absolute
    discount of 0.75 (flagged on the result).
    """
    per_order: dict[int, OrderDiscounts] = {}
    for n in range(2, counts.order + 1):
        coc = Counter()
        for c in counts.tables[n - 1].values():
            if c <= 4:
                coc[c] += 1
        n1, n2, n3, n4 = coc[1], coc[2], coc[3], coc[4]
        if 0 in (n1, n2, n3, n4):
            per_order[n] = OrderDiscounts(
                FALLBACK_DISCOUNT, FALLBACK_DISCOUNT, FALLBACK_DISCOUNT, fallback=True
            )
            continue
        y = n1 / (n1 + 2.0 * n2)
        d1 = max(0.0, 1.0 - 2.0 * y * n2 / n1)
        d2 = max(0.0, 2.0 - 3.0 * y * n3 / n2)
        d3plus = max(0.0, 3.0 - 4.0 * y * n4 / n3)
        per_order[n] = OrderDiscounts(d1, d2, d3plus)
    return DiscountSet(per_order)


# ---------------------------------------------------------------------------
# The back-off model


class BackoffModel:
    """ARPA-style back-off model: log10 probabilities plus back-off weights.

    ``tables[n - 1]`` maps each n-gram tuple to ``[log10prob, log10bow]``
    where the back-off weight is ``None`` for n-grams that are not the
    context of any stored higher-order entry.  Instances are treated as
    immutable after construction.
    """

    def __init__(
        self,
        order: int,
        vocabulary: frozenset,
        tables: tuple[dict, ...],
        metadata: dict | None = None,
    ):
        if len(tables) != order:
            raise ValueError(f"expected {order} tables, got {len(tables)}")
        self.order = order
        self.vocabulary = vocabulary
        self.tables = tables
        self.metadata = dict(metadata or {})

    def entry_count(self, n: int) -> int:
        return len(self.tables[n - 1])

    def map_token(self, token: str) -> str:
        return token if token in self.vocabulary else UNK

    def logprob(self, context: Sequence[str], word: str) -> float:
        """Back-off chain score log10 P(word | context).

        Out-of-vocabulary tokens (in the word or the context) are mapped to
        ``<unk>`` first; the context is truncated to the model order.
        """
        w = self.map_token(word)
        if self.order == 1:
            h: tuple = ()
        else:
            h = tuple(self.map_token(t) for t in context[-(self.order - 1):])
        acc = 0.0
        while True:
            ent = self.tables[len(h)].get(h + (w,))
            if ent is not None:
                return acc + ent[0]
            if not h:
                # Unreachable for in-vocabulary words: every vocabulary
                # member has a unigram entry.
                raise ContractViolationError(f"no unigram entry for {w!r}")
            hent = self.tables[len(h) - 1].get(h)
            if hent is not None and hent[1] is not None:
                acc += hent[1]
            h = h[1:]

    def contexts(self) -> Iterable[tuple]:
        """All contexts over which the model defines a distribution."""
        seen = {()}
        yield ()
        for n in range(2, self.order + 1):
            for ngram in self.tables[n - 1]:
                h = ngram[:-1]
                if h not in seen:
                    seen.add(h)
                    yield h


def sentence_logprob(model: BackoffModel, sentence: Sequence[str]) -> tuple[float, int]:
    """Total log10 probability of a sentence and the scored-event count.

    Every token plus the closing ``</s>`` is a scored event; the context is
    initialized with ``order - 1`` ``<s>`` markers.
    """
    history = (BOS,) * (model.order - 1)
    total = 0.0
    events = 0
    for tok in tuple(sentence) + (EOS,):
        total += model.logprob(history, tok)
        events += 1
        if model.order > 1:
            history = history[1:] + (model.map_token(tok),)
    return total, events


def perplexity(
    model: BackoffModel, corpus: Corpus, normalization: str = "per-token"
) -> float:
    """``10 ** (-total_log10 / M)`` over the corpus.

    ``per-token`` divides by the scored-event count; ``per-word`` divides by
    the source word count (word-initial tokens) plus the sentence count so
    word- and subword-token models are directly comparable.
    """
    if normalization not in ("per-token", "per-word"):
        raise ValueError(f"unknown normalization {normalization!r}")
    if len(corpus) == 0:
        raise ValueError("cannot evaluate perplexity on an empty corpus")
    total = 0.0
    events = 0
    words = 0
    for sent in corpus:
        lp, ev = sentence_logprob(model, sent)
        total += lp
        events += ev
        words += sum(1 for t in sent if not t.startswith(CONTINUATION_PREFIX)) + 1
    denom = events if normalization == "per-token" else words
    return 10.0 ** (-total / denom)


# ---------------------------------------------------------------------------
# Estimation


def _continuation_counts(higher_table: dict) -> dict:
    """Distinct-left-extension counts: kappa(g) = |{v : v+g counted}|."""
    kappa: dict = {}
    for ngram in higher_table:
        g = ngram[1:]
        kappa[g] = kappa.get(g, 0) + 1
    return kappa


def estimate_kn_model(counts: NgramCountTable, discounts: DiscountSet) -> BackoffModel:
    """Interpolated modified Kneser-Ney estimation in back-off form."""
    n_order = counts.order
    if not counts.tables[0]:
        raise ValueError("cannot estimate a model from empty counts")
    vocab = counts.vocabulary

    # Level 1: continuation unigrams plus the reserved floor pseudo-count.
    if n_order == 1:
        kappa1 = dict(counts.tables[0])
        kappa1 = {k[0]: v for k, v in kappa1.items()}
    else:
        kappa1 = {k[0]: v for k, v in _continuation_counts(counts.tables[1]).items()}
    t1 = sum(kappa1.values()) + 1
    floored = [w for w in vocab if w != UNK and kappa1.get(w, 0) == 0]
    floor_share = 1.0 / (t1 * (len(floored) + 1))
    probs_prev: dict[tuple, float] = {}
    for w in vocab:
        p = kappa1.get(w, 0) / t1
        if w == UNK or w in floored:
            p += floor_share
        probs_prev[(w,)] = p

    prob_tables: list[dict] = [dict(probs_prev)]
    bow_tables: list[dict] = [{} for _ in range(n_order)]  # context -> gamma

    for n in range(2, n_order + 1):
        if n == n_order:
            kappa = counts.tables[n - 1]
        else:
            kappa = _continuation_counts(counts.tables[n])
            # Counted n-grams with no left extension still get entries.
            for ngram in counts.tables[n - 1]:
                kappa.setdefault(ngram, 0)
        disc = discounts.for_order(n)

        totals: dict = {}
        applied: dict = {}
        for ngram, c in kappa.items():
            h = ngram[:-1]
            totals[h] = totals.get(h, 0) + c
            applied[h] = applied.get(h, 0.0) + disc.discount(c)

        probs_n: dict = {}
        for ngram, c in kappa.items():
            h = ngram[:-1]
            gamma = applied[h] / totals[h]
            lower = probs_prev[ngram[1:]]
            probs_n[ngram] = max(c - disc.discount(c), 0.0) / totals[h] + gamma * lower
        for h in totals:
            bow_tables[n - 2][h] = applied[h] / totals[h]

        prob_tables.append(probs_n)
        probs_prev = probs_n

    tables: list[dict] = []
    for n in range(1, n_order + 1):
        table = {}
        bows = bow_tables[n - 1]
        for ngram, p in prob_tables[n - 1].items():
            gamma = bows.get(ngram)
            if gamma is None:
                logbow = None
            elif gamma <= 0.0:
                logbow = LOG10_FLOOR
            else:
                logbow = math.log10(gamma)
            table[ngram] = [math.log10(p), logbow]
        tables.append(table)

    metadata = {
        "discounts": {
            n: {
                "d1": d.d1,
                "d2": d.d2,
                "d3plus": d.d3plus,
                "fallback": d.fallback,
            }
            for n, d in discounts.per_order.items()
        },
        "fallback_orders": sorted(
            n for n, d in discounts.per_order.items() if d.fallback
        ),
    }
    return BackoffModel(n_order, vocab, tuple(tables), metadata)


def context_probability_sums(model: BackoffModel) -> dict[tuple, float]:
    """Exact full-vocabulary probability sum of every model context.

    Uses the identity  sum_V P(.|h) = sum_stored P + bow(h) *
    (sum_V P(.|h') - sum_stored P(.|h'))  so no vocabulary enumeration is
    needed beyond the unigram level.
    """
    sums: dict[tuple, float] = {(): sum(10.0 ** e[0] for e in model.tables[0].values())}
    by_context: dict[int, dict[tuple, list]] = {}
    for n in range(2, model.order + 1):
        grouped: dict[tuple, list] = {}
        for ngram, ent in model.tables[n - 1].items():
            grouped.setdefault(ngram[:-1], []).append((ngram[-1], ent[0]))
        by_context[n - 1] = grouped

    def lower_sum(h: tuple) -> float:
        # Contexts with no stored continuations distribute bow(h) * P(.|h').
        while h not in sums:
            hent = model.tables[len(h) - 1].get(h)
            if hent is not None and hent[1] is not None:
                return 10.0 ** hent[1] * lower_sum(h[1:])
            h = h[1:]
        return sums[h]

    for length in sorted(by_context):
        for h, entries in by_context[length].items():
            stored = 0.0
            lower = 0.0
            for word, logp in entries:
                stored += 10.0 ** logp
                lower += 10.0 ** model.logprob(h[1:], word)
            hent = model.tables[length - 1].get(h)
            bow = 10.0 ** hent[1] if hent is not None and hent[1] is not None else 1.0
            sums[h] = stored + bow * (lower_sum(h[1:]) - lower)
    return sums


# ---------------------------------------------------------------------------
# ARPA serialization


def write_arpa(model: BackoffModel, path: str | Path) -> None:
    """Write the model as an ARPA text file (entries sorted for determinism)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\\data\\\n")
        for n in range(1, model.order + 1):
            fh.write(f"ngram {n}={model.entry_count(n)}\n")
        fh.write("\n")
        for n in range(1, model.order + 1):
            fh.write(f"\\{n}-grams:\n")
            for ngram in sorted(model.tables[n - 1]):
                logp, logbow = model.tables[n - 1][ngram]
                line = f"{logp!r}\t{' '.join(ngram)}"
                if logbow is not None and logbow != 0.0:
                    line += f"\t{logbow!r}"
                fh.write(line + "\n")
            fh.write("\n")
        fh.write("\\end\\\n")


def read_arpa(path: str | Path) -> BackoffModel:
    """Parse an ARPA file, validating section structure and declared counts."""
    declared: dict[int, int] = {}
    tables: dict[int, dict] = {}
    state = "preamble"
    current = 0
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip():
                continue
            if line == "\\data\\":
                state = "data"
                continue
            if line == "\\end\\":
                state = "end"
                continue
            if line.startswith("\\") and line.endswith("-grams:"):
                try:
                    current = int(line[1:-7])
                except ValueError:
                    raise DataFormatError(f"bad section header {line!r}", lineno)
                if current not in declared:
                    raise DataFormatError(
                        f"section \\{current}-grams: not declared in \\data\\", lineno
                    )
                state = "grams"
                tables.setdefault(current, {})
                continue
            if state == "data":
                if not line.startswith("ngram "):
                    raise DataFormatError(f"unexpected line in \\data\\: {line!r}", lineno)
                try:
                    n_str, count_str = line[len("ngram "):].split("=")
                    declared[int(n_str)] = int(count_str)
                except ValueError:
                    raise DataFormatError(f"bad ngram count line {line!r}", lineno)
                continue
            if state == "grams":
                parts = line.split("\t")
                if len(parts) not in (2, 3):
                    raise DataFormatError(f"expected 2 or 3 tab-separated fields", lineno)
                try:
                    logp = float(parts[0])
                except ValueError:
                    raise DataFormatError(f"non-numeric log probability {parts[0]!r}", lineno)
                ngram = tuple(parts[1].split(" "))
                if len(ngram) != current or not all(ngram):
                    raise DataFormatError(
                        f"expected a {current}-gram, got {parts[1]!r}", lineno
                    )
                logbow = None
                if len(parts) == 3:
                    try:
                        logbow = float(parts[2])
                    except ValueError:
                        raise DataFormatError(f"non-numeric back-off {parts[2]!r}", lineno)
                tables[current][ngram] = [logp, logbow]
                continue
            raise DataFormatError(f"unexpected line {line!r}", lineno)
    if state != "end":
        raise DataFormatError("missing \\end\\ terminator")
    if not declared:
        raise DataFormatError("missing \\data\\ header")
    order = max(declared)
    if sorted(declared) != list(range(1, order + 1)):
        raise DataFormatError(f"non-contiguous ngram orders {sorted(declared)}")
    for n, want in declared.items():
        have = len(tables.get(n, {}))
        if have != want:
            raise DataFormatError(
                f"\\data\\ declares ngram {n}={want} but section has {have} entries"
            )
    # Closed-vocabulary files (no <unk> unigram) load fine; scoring an
    # out-of-vocabulary token against them raises ContractViolationError.
    vocab = frozenset(ngram[0] for ngram in tables[1]) | {BOS, EOS}
    if (UNK,) in tables[1]:
        vocab |= {UNK}
    return BackoffModel(order, vocab, tuple(tables[n] for n in range(1, order + 1)))


# ---------------------------------------------------------------------------
# Entropy pruning


def _context_weight(model: BackoffModel, h: tuple) -> float:
    """Declared context weight: the model's own chain probability of ``h``.

    A leading ``<s>`` is treated as the sentence-start condition rather than
    a scored event.
    """
    toks = list(h)
    history: tuple = ()
    logp = 0.0
    while toks and toks[0] == BOS:
        history = history + (toks.pop(0),)
    for tok in toks:
        logp += model.logprob(history, tok)
        history = history + (tok,)
    return 10.0 ** logp


def _bow(numerator: float, denominator: float) -> float:
    if denominator <= 1e-12:
        return 1.0
    return max(numerator, 0.0) / denominator


def kl_impacts(model: BackoffModel) -> dict[tuple, float]:
    """Weighted relative-entropy impact of removing each n-gram (n >= 2).

    Closed form for a single removal with the context's back-off weight
    recomputed; the weight is the chain probability of the context.
    """
    stored_sums: dict[tuple, float] = {}
    lower_sums: dict[tuple, float] = {}
    lower_prob: dict[tuple, float] = {}
    for n in range(2, model.order + 1):
        for ngram, ent in model.tables[n - 1].items():
            h = ngram[:-1]
            p_lower = 10.0 ** model.logprob(h[1:], ngram[-1])
            lower_prob[ngram] = p_lower
            stored_sums[h] = stored_sums.get(h, 0.0) + 10.0 ** ent[0]
            lower_sums[h] = lower_sums.get(h, 0.0) + p_lower

    weights = {h: _context_weight(model, h) for h in stored_sums}
    impacts: dict[tuple, float] = {}
    for n in range(2, model.order + 1):
        for ngram, ent in model.tables[n - 1].items():
            h = ngram[:-1]
            p_hw = 10.0 ** ent[0]
            hent = model.tables[len(h) - 1].get(h)
            bow = 10.0 ** hent[1] if hent is not None and hent[1] is not None else 1.0
            p_lower = lower_prob[ngram]
            new_bow = _bow(
                1.0 - (stored_sums[h] - p_hw), 1.0 - (lower_sums[h] - p_lower)
            )
            delta = p_hw * (math.log(new_bow * p_lower) - math.log(p_hw)) + (
                1.0 - stored_sums[h]
            ) * (math.log(new_bow) - math.log(bow) if bow > 0 else 0.0)
            impacts[ngram] = -weights[h] * delta
    return impacts


def _survivors_at_threshold(
    model: BackoffModel, impacts: dict[tuple, float], threshold: float
) -> list[set]:
    """Surviving n-grams per order (n >= 2), protecting prefixes of survivors."""
    kept_by_order: list[set] = [set() for _ in range(model.order + 1)]
    protected: set = set()
    for n in range(model.order, 1, -1):
        kept = set()
        for ngram in model.tables[n - 1]:
            if ngram in protected or impacts[ngram] >= threshold:
                kept.add(ngram)
        protected = {ngram[:-1] for ngram in kept if len(ngram) > 2}
        kept_by_order[n] = kept
    return kept_by_order


def _survivor_footprint(model: BackoffModel, kept_by_order: list[set]) -> int:
    """Footprint of the pruned model, without building it.

    Matches evalkit.footprint on the built result: an entry carries a
    back-off slot exactly when it is the context of a surviving entry.
    """
    from .evalkit import _INDEX_BYTES, _VALUE_BYTES

    total = sum(len(w.encode("utf-8")) + 1 for w in model.vocabulary)
    contexts_above: list[set] = [set() for _ in range(model.order + 1)]
    for n in range(2, model.order + 1):
        contexts_above[n - 1] = {ngram[:-1] for ngram in kept_by_order[n]}
    for ngram in model.tables[0]:
        total += _VALUE_BYTES + _INDEX_BYTES
        if ngram in contexts_above[1]:
            total += _VALUE_BYTES
    for n in range(2, model.order + 1):
        for ngram in kept_by_order[n]:
            total += _VALUE_BYTES + _INDEX_BYTES * n
            if ngram in contexts_above[n]:
                total += _VALUE_BYTES
    return total


def _build_pruned(model: BackoffModel, kept_by_order: list[set]) -> BackoffModel:
    """Materialize survivors and recompute back-off weights bottom-up."""
    new_tables: list[dict] = [
        {ng: [ent[0], None] for ng, ent in model.tables[0].items()}
    ]
    for n in range(2, model.order + 1):
        table = model.tables[n - 1]
        new_tables.append({ng: [table[ng][0], None] for ng in kept_by_order[n]})
    pruned = BackoffModel(model.order, model.vocabulary, tuple(new_tables), model.metadata)
    for n in range(2, model.order + 1):
        by_context: dict = {}
        for ngram in pruned.tables[n - 1]:
            by_context.setdefault(ngram[:-1], []).append(ngram)
        for h, ngrams in by_context.items():
            stored = sum(10.0 ** pruned.tables[n - 1][ng][0] for ng in ngrams)
            lower = sum(10.0 ** pruned.logprob(h[1:], ng[-1]) for ng in ngrams)
            bow = _bow(1.0 - stored, 1.0 - lower)
            logbow = math.log10(bow) if bow > 0 else LOG10_FLOOR
            pruned.tables[len(h) - 1][h][1] = max(logbow, LOG10_FLOOR)
    return pruned


def prune_to_budget(model: BackoffModel, budget_bytes: int) -> BackoffModel:
    """Entropy-prune until the serialized footprint fits the byte budget.

    The threshold is found by bisection (40 iterations) and is minimal at
    the serialization granularity; unigrams are never pruned.
    """
    from .evalkit import footprint

    if footprint(model) <= budget_bytes:
        return model
    empty = [set() for _ in range(model.order + 1)]
    if budget_bytes < _survivor_footprint(model, empty):
        raise ValueError(
            f"budget {budget_bytes} is below the unigram skeleton size "
            f"{_survivor_footprint(model, empty)}"
        )
    impacts = kl_impacts(model)
    lo = 0.0
    hi = (max(impacts.values()) if impacts else 0.0) * 2.0 + 1e-12
    best = _survivors_at_threshold(model, impacts, hi)
    for _ in range(40):
        mid = (lo + hi) / 2.0
        kept = _survivors_at_threshold(model, impacts, mid)
        if _survivor_footprint(model, kept) <= budget_bytes:
            hi = mid
            best = kept
        else:
            lo = mid
    return _build_pruned(model, best)


# ---------------------------------------------------------------------------
# Estimator front-end


class KneserNeyLanguageModel(BaseEstimator):
    """Scikit-learn style wrapper around the Kneser-Ney pipeline.

    Parameters
    ----------
    order : int
        N-gram order (the paper-validated default is 4).
    vocab_cap : int or None
        Keep only the most frequent ``vocab_cap`` words of the training
        corpus; everything else trains and scores as ``<unk>``.
    """

    def __init__(self, order: int = 4, vocab_cap: int | None = None):
        self.order = order
        self.vocab_cap = vocab_cap

    def fit(self, X, y=None, vocabulary: WordVocabulary | Iterable[str] | None = None):
        corpus = as_corpus(X, subword_input=True)
        if vocabulary is None:
            vocabulary = build_vocabulary(corpus, self.vocab_cap)
        counts = count_ngrams(corpus, self.order, vocabulary)
        self.discounts_ = estimate_discounts(counts)
        self.model_ = estimate_kn_model(counts, self.discounts_)
        return self

    def perplexity(self, X, normalization: str = "per-token") -> float:
        check_is_fitted(self, "model_")
        return perplexity(self.model_, as_corpus(X, subword_input=True), normalization)

    def score(self, X, y=None) -> float:
        """Mean per-event log10 probability (higher is better)."""
        check_is_fitted(self, "model_")
        total = 0.0
        events = 0
        for sent in as_corpus(X, subword_input=True):
            lp, ev = sentence_logprob(self.model_, sent)
            total += lp
            events += ev
        return total / events
