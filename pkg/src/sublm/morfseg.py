"""Unsupervised morphological segmentation with a two-part MDL-style cost.

The model cost is ``corpus_weight * corpus_cost + lexicon_cost`` where the
corpus cost is the negative log-likelihood of the morph token stream under
the morph unigram distribution, and the lexicon cost spells out each
distinct morph with character unigram code lengths plus a per-morph
terminator ``-log(end_prob)``.

Training uses recursive binary splitting of word types: every word is
re-analyzed in seeded random order, keeping the arrangement (no split, or
the best split applied recursively to both halves) that lowers the total
cost.  Moves that would raise the cost are rejected, so the cost sequence
over accepted moves is non-increasing.

Counts are type-based (every distinct word counts once, regardless of its
corpus frequency); because every analysis concatenates to its word, the
character counts derived from morph counts equal the character counts of
the word-type inventory exactly, which makes segmentation reproducible from
the lexicon file alone.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .corpus import tag_boundaries
from .errors import DataFormatError
from .validation import as_corpus, check_positive, check_rng

LEXICON_FILE_MAGIC = "#morphlex v1"

#: Unseen morphs pay their own lexicon-entry cost this many times: once for
#: the character-level spell-out, once as the new-entry penalty.
UNSEEN_COST_FACTOR = 2.0


class MorphLexicon:
    """Morph inventory with token counts and the declared cost constants."""

    def __init__(
        self,
        morphs: Mapping[str, int],
        corpus_weight: float = 1.0,
        end_prob: float | None = None,
    ):
        check_positive("corpus_weight", corpus_weight)
        if not morphs:
            raise ValueError("lexicon must contain at least one morph")
        for m, c in morphs.items():
            if not m or c < 1:
                raise ValueError(f"invalid lexicon entry {m!r}: {c}")
        self.morphs: dict[str, int] = dict(morphs)
        self.total_morph_tokens = sum(self.morphs.values())
        self.corpus_weight = corpus_weight

        # Character distribution of the underlying token stream, recovered
        # from the count-weighted morph inventory.
        char_counts: Counter = Counter()
        for m, c in self.morphs.items():
            for ch in m:
                char_counts[ch] += c
        self._char_counts = char_counts
        self._char_total = sum(char_counts.values())

        if end_prob is None:
            # Declared default: 1 / (1 + average morph token length).
            avg_len = self._char_total / self.total_morph_tokens
            end_prob = 1.0 / (1.0 + avg_len)
        if not 0.0 < end_prob < 1.0:
            raise ValueError(f"end_prob must be in (0, 1), got {end_prob}")
        self.end_prob = end_prob

    def char_cost(self, ch: str) -> float:
        count = self._char_counts.get(ch)
        if count is None:
            # Floor for characters never seen in training.
            return math.log(self._char_total + 1)
        return -math.log(count / self._char_total)

    def entry_cost(self, morph: str) -> float:
        """Code length of one lexicon entry: characters plus terminator."""
        return sum(self.char_cost(ch) for ch in morph) - math.log(self.end_prob)

    def morph_cost(self, morph: str) -> float:
        """Code length of one morph token in the corpus stream."""
        count = self.morphs.get(morph)
        if count is None:
            raise KeyError(morph)
        return -math.log(count / self.total_morph_tokens)

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(
                f"{LEXICON_FILE_MAGIC} corpus_weight={self.corpus_weight!r} "
                f"end_prob={self.end_prob!r} morphs={len(self.morphs)}\n"
            )
            for m in sorted(self.morphs):
                fh.write(f"{m}\t{self.morphs[m]}\n")

    @classmethod
    def load(cls, path: str | Path) -> "MorphLexicon":
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().rstrip("\n")
            fields = header.split()
            if len(fields) != 5 or " ".join(fields[:2]) != LEXICON_FILE_MAGIC:
                raise DataFormatError(f"bad lexicon header {header!r}", line=1)
            try:
                corpus_weight = float(fields[2].removeprefix("corpus_weight="))
                end_prob = float(fields[3].removeprefix("end_prob="))
                n_morphs = int(fields[4].removeprefix("morphs="))
            except ValueError:
                raise DataFormatError(f"bad lexicon header {header!r}", line=1)
            morphs: dict[str, int] = {}
            for lineno, line in enumerate(fh, start=2):
                line = line.rstrip("\n")
                if not line:
                    continue
                parts = line.split("\t")
                if len(parts) != 2:
                    raise DataFormatError("expected 'morph<TAB>count'", lineno)
                try:
                    morphs[parts[0]] = int(parts[1])
                except ValueError:
                    raise DataFormatError(f"non-integer count {parts[1]!r}", lineno)
        if len(morphs) != n_morphs:
            raise DataFormatError(
                f"header declares morphs={n_morphs} but file has {len(morphs)}"
            )
        return cls(morphs, corpus_weight=corpus_weight, end_prob=end_prob)


@dataclass(frozen=True)
class SegmentationState:
    """Per-word analyses with their frequencies and the total model cost."""

    analyses: dict[str, tuple[str, ...]]
    word_counts: dict[str, int]
    cost: float


def model_cost(state: SegmentationState, lexicon: MorphLexicon) -> float:
    """Recompute the total model cost from scratch.

    Raises ``ValueError`` when the lexicon counts do not derive from the
    state's analyses.
    """
    derived: Counter = Counter()
    for word, analysis in state.analyses.items():
        if "".join(analysis) != word:
            raise ValueError(f"analysis {analysis!r} does not concatenate to {word!r}")
        freq = state.word_counts[word]
        for m in analysis:
            derived[m] += freq
    if dict(derived) != lexicon.morphs:
        raise ValueError("inconsistent counts: lexicon does not match analyses")
    corpus_cost = sum(c * lexicon.morph_cost(m) for m, c in lexicon.morphs.items())
    lexicon_cost = sum(lexicon.entry_cost(m) for m in lexicon.morphs)
    return lexicon.corpus_weight * corpus_cost + lexicon_cost


def segment_word(lexicon: MorphLexicon, word: str) -> list[str]:
    """Lowest-cost segmentation of ``word`` under the lexicon.

    Dynamic programming over all segmentations into known morphs, with
    single characters as the fallback for unseen material (spelled out at
    ``UNSEEN_COST_FACTOR`` times their lexicon-entry cost).  Ties prefer
    fewer morphs, then the lexicographically smaller morph sequence.
    """
    if not word:
        raise ValueError("cannot segment an empty word")
    n = len(word)
    # dp[j] = (cost, morph_count, morphs) for the best split of word[:j]
    dp: list[tuple[float, int, tuple[str, ...]] | None] = [None] * (n + 1)
    dp[0] = (0.0, 0, ())
    max_known = max((len(m) for m in lexicon.morphs), default=1)
    for j in range(1, n + 1):
        best = None
        for i in range(max(0, j - max(max_known, 1)), j):
            prev = dp[i]
            if prev is None:
                continue
            piece = word[i:j]
            if piece in lexicon.morphs:
                step = lexicon.morph_cost(piece)
            elif len(piece) == 1:
                step = UNSEEN_COST_FACTOR * lexicon.entry_cost(piece)
            else:
                continue
            cand = (prev[0] + step, prev[1] + 1, prev[2] + (piece,))
            if best is None or cand < best:
                best = cand
        dp[j] = best
    assert dp[n] is not None  # single-character fallback always reaches n
    return list(dp[n][2])


class _CostTracker:
    """Incrementally maintained model cost during training."""

    def __init__(self, char_counts: Counter, end_prob: float, corpus_weight: float):
        self.counts: Counter = Counter()
        self.total = 0
        self.corpus_weight = corpus_weight
        self.end_prob = end_prob
        self._char_counts = char_counts
        self._char_total = sum(char_counts.values())
        self._end_cost = -math.log(end_prob)
        self._entry_cost_cache: dict[str, float] = {}
        # sum of count*ln(count) over morphs, and of entry costs over the lexicon
        self._count_log_sum = 0.0
        self._lexicon_cost = 0.0

    def entry_cost(self, morph: str) -> float:
        cached = self._entry_cost_cache.get(morph)
        if cached is None:
            cached = (
                sum(-math.log(self._char_counts[ch] / self._char_total) for ch in morph)
                + self._end_cost
            )
            self._entry_cost_cache[morph] = cached
        return cached

    def add(self, morph: str, k: int) -> None:
        old = self.counts[morph]
        new = old + k
        self.counts[morph] = new
        self.total += k
        self._count_log_sum += new * math.log(new) - (old * math.log(old) if old else 0.0)
        if old == 0:
            self._lexicon_cost += self.entry_cost(morph)

    def remove(self, morph: str, k: int) -> None:
        old = self.counts[morph]
        new = old - k
        if new < 0:
            raise ValueError(f"count of {morph!r} would go negative")
        self.total -= k
        self._count_log_sum += (new * math.log(new) if new else 0.0) - old * math.log(old)
        if new == 0:
            del self.counts[morph]
            self._lexicon_cost -= self.entry_cost(morph)
        else:
            self.counts[morph] = new

    def cost(self) -> float:
        if self.total == 0:
            return 0.0
        corpus_cost = self.total * math.log(self.total) - self._count_log_sum
        return self.corpus_weight * corpus_cost + self._lexicon_cost


class MorfessorSegmenter(TransformerMixin, BaseEstimator):
    """MDL-driven morphological segmenter with recursive-split training.

    Parameters
    ----------
    corpus_weight : float
        Weight of the corpus cost term relative to the lexicon cost.
    max_epochs : int
        Upper bound on training passes over the word types.
    epoch_improvement : float
        Stop when the relative cost improvement of an epoch falls below
        this threshold.
    random_state : int
        Seed for the per-epoch word order shuffle.
    """

    def __init__(
        self,
        corpus_weight: float = 1.0,
        max_epochs: int = 15,
        epoch_improvement: float = 0.005,
        random_state: int = 0,
    ):
        self.corpus_weight = corpus_weight
        self.max_epochs = max_epochs
        self.epoch_improvement = epoch_improvement
        self.random_state = random_state

    def fit(self, X, y=None):
        check_positive("corpus_weight", self.corpus_weight)
        corpus = as_corpus(X)
        if corpus.token_count == 0:
            raise ValueError("cannot train a segmenter on an empty corpus")
        # Type-based counts: each distinct word contributes once.
        word_freq = {w: 1 for sent in corpus for w in sent}

        char_counts: Counter = Counter()
        total_len = 0
        for w in word_freq:
            for ch in w:
                char_counts[ch] += 1
            total_len += len(w)
        end_prob = 1.0 / (1.0 + total_len / len(word_freq))

        tracker = _CostTracker(char_counts, end_prob, self.corpus_weight)
        analyses: dict[str, tuple[str, ...]] = {}
        for w, f in word_freq.items():
            tracker.add(w, f)
            analyses[w] = (w,)

        rng = check_rng(self.random_state)
        words = sorted(word_freq)
        initial_cost = tracker.cost()
        prev_cost = initial_cost
        n_epochs = 0
        for _ in range(self.max_epochs):
            n_epochs += 1
            order = rng.permutation(len(words))
            for idx in order:
                word = words[idx]
                freq = word_freq[word]
                cost_with_old = tracker.cost()
                old_analysis = analyses[word]
                for m in old_analysis:
                    tracker.remove(m, freq)
                new_analysis = tuple(self._split_recursive(tracker, word, freq))
                if tracker.cost() > cost_with_old:
                    for m in new_analysis:
                        tracker.remove(m, freq)
                    for m in old_analysis:
                        tracker.add(m, freq)
                else:
                    analyses[word] = new_analysis
            cost = tracker.cost()
            if prev_cost > 0 and (prev_cost - cost) / prev_cost < self.epoch_improvement:
                prev_cost = cost
                break
            prev_cost = cost

        self.lexicon_ = MorphLexicon(
            dict(tracker.counts), corpus_weight=self.corpus_weight, end_prob=end_prob
        )
        state = SegmentationState(analyses, dict(word_freq), cost=0.0)
        final_cost = model_cost(state, self.lexicon_)
        self.state_ = SegmentationState(analyses, dict(word_freq), final_cost)
        self.initial_cost_ = initial_cost
        self.n_epochs_ = n_epochs
        return self

    @staticmethod
    def _split_recursive(tracker: _CostTracker, morph: str, freq: int) -> list[str]:
        # The morph is currently not counted; leaves the chosen analysis added.
        tracker.add(morph, freq)
        best_cost = tracker.cost()
        tracker.remove(morph, freq)
        best_i = None
        for i in range(1, len(morph)):
            pre, suf = morph[:i], morph[i:]
            tracker.add(pre, freq)
            tracker.add(suf, freq)
            cand = tracker.cost()
            tracker.remove(pre, freq)
            tracker.remove(suf, freq)
            if cand < best_cost:
                best_cost = cand
                best_i = i
        if best_i is None:
            tracker.add(morph, freq)
            return [morph]
        left = MorfessorSegmenter._split_recursive(tracker, morph[:best_i], freq)
        right = MorfessorSegmenter._split_recursive(tracker, morph[best_i:], freq)
        return left + right

    def segment_word(self, word: str) -> list[str]:
        check_is_fitted(self, "lexicon_")
        return segment_word(self.lexicon_, word)

    def transform(self, X) -> list[list[str]]:
        """Segment each sentence into boundary-tagged subword tokens."""
        check_is_fitted(self, "lexicon_")
        corpus = as_corpus(X)
        cache: dict[str, list[str]] = {}
        out = []
        for sent in corpus:
            tagged: list[str] = []
            for word in sent:
                if word not in cache:
                    cache[word] = tag_boundaries([(word, self.segment_word(word))])
                tagged.extend(cache[word])
            out.append(tagged)
        return out

    def save(self, path: str | Path) -> None:
        check_is_fitted(self, "lexicon_")
        self.lexicon_.save(path)

    @classmethod
    def load(cls, path: str | Path) -> "MorfessorSegmenter":
        lexicon = MorphLexicon.load(path)
        seg = cls(corpus_weight=lexicon.corpus_weight)
        seg.lexicon_ = lexicon
        return seg
