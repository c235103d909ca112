"""Character-level byte pair encoding: merge-list training and application.

Merges are learned over word types weighted by word frequency and never
cross word boundaries.  The merge file format is::

    #bpe v1 alphabet=<N> merges=<K>
    left right
    ...

with rank equal to the zero-based line order.
"""

from __future__ import annotations

from collections import Counter, defaultdict
from pathlib import Path
from typing import Iterable, Sequence

from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .corpus import tag_boundaries
from .errors import DataFormatError
from .validation import as_corpus

#: Pairs rarer than this are never merged.
MIN_PAIR_COUNT = 2

MERGE_FILE_MAGIC = "#bpe v1"


def merge_pair(symbols: Sequence[str], left: str, right: str) -> list[str]:
    """Replace adjacent (left, right) occurrences leftmost-first, one pass."""
    out: list[str] = []
    i = 0
    n = len(symbols)
    while i < n:
        if i + 1 < n and symbols[i] == left and symbols[i + 1] == right:
            out.append(left + right)
            i += 2
        else:
            out.append(symbols[i])
            i += 1
    return out


def decode(subwords: Iterable[str]) -> str:
    """Inverse of encoding: plain concatenation."""
    return "".join(subwords)


class BpeTokenizer(TransformerMixin, BaseEstimator):
    """Greedy character-level BPE tokenizer.

    Parameters
    ----------
    inventory_size : int
        Target size of the subword inventory (distinct characters plus
        learned merges).  Training stops when the inventory reaches this
        size or no symbol pair occurs at least twice.

    Attributes
    ----------
    alphabet_ : frozenset of str
        Characters observed in training.
    merges_ : tuple of (str, str)
        Learned merge rules in rank order.
    """

    def __init__(self, inventory_size: int = 2000):
        self.inventory_size = inventory_size

    def fit(self, X, y=None):
        corpus = as_corpus(X)
        word_freq = Counter()
        for sent in corpus:
            word_freq.update(sent)

        alphabet = set()
        for word in word_freq:
            alphabet.update(word)
        if self.inventory_size <= len(alphabet):
            raise ValueError(
                f"inventory too small: target {self.inventory_size} must exceed "
                f"alphabet size {len(alphabet)}"
            )

        # Work on word types; each type carries its token frequency.
        words = sorted(word_freq)  # deterministic processing order
        seqs = {w: list(w) for w in words}

        pair_counts: Counter = Counter()
        pair_to_words: defaultdict[tuple[str, str], set] = defaultdict(set)
        for w in words:
            freq = word_freq[w]
            seq = seqs[w]
            for a, b in zip(seq, seq[1:]):
                pair_counts[(a, b)] += freq
                pair_to_words[(a, b)].add(w)

        merges: list[tuple[str, str]] = []
        while len(alphabet) + len(merges) < self.inventory_size and pair_counts:
            # Most frequent pair; ties resolved lexicographically on (left, right).
            best_pair, best_count = min(
                pair_counts.items(), key=lambda kv: (-kv[1], kv[0])
            )
            if best_count < MIN_PAIR_COUNT:
                break
            left, right = best_pair
            merges.append(best_pair)
            for w in sorted(pair_to_words[best_pair]):
                freq = word_freq[w]
                old = seqs[w]
                new = merge_pair(old, left, right)
                if new == old:
                    continue
                for a, b in zip(old, old[1:]):
                    pair_counts[(a, b)] -= freq
                    if pair_counts[(a, b)] <= 0:
                        del pair_counts[(a, b)]
                for a, b in zip(new, new[1:]):
                    pair_counts[(a, b)] += freq
                    pair_to_words[(a, b)].add(w)
                seqs[w] = new

        self.alphabet_ = frozenset(alphabet)
        self.merges_ = tuple(merges)
        self._training_segmentations_ = {w: tuple(s) for w, s in seqs.items()}
        return self

    @property
    def inventory_(self) -> int:
        """Size of the learned inventory: |alphabet| + |merges|."""
        check_is_fitted(self, "merges_")
        return len(self.alphabet_) + len(self.merges_)

    def inventory_units(self) -> frozenset:
        """All producible subword units: characters plus merge products."""
        check_is_fitted(self, "merges_")
        return self.alphabet_ | {left + right for left, right in self.merges_}

    def encode_word(self, word: str) -> list[str]:
        """Split to characters, then apply merges in rank order."""
        check_is_fitted(self, "merges_")
        if not word:
            raise ValueError("cannot encode an empty word")
        seq = list(word)
        for left, right in self.merges_:
            if len(seq) < 2:
                break
            # Leftmost-first within a rank, repeated until the pair is gone.
            while True:
                new = merge_pair(seq, left, right)
                if new == seq:
                    break
                seq = new
        return seq

    def segment_word(self, word: str) -> list[str]:
        """Uniform tokenizer interface shared with the morphological segmenter."""
        return self.encode_word(word)

    def transform(self, X) -> list[list[str]]:
        """Segment each sentence into boundary-tagged subword tokens."""
        corpus = as_corpus(X)
        cache: dict[str, list[str]] = {}
        out = []
        for sent in corpus:
            tagged: list[str] = []
            for word in sent:
                if word not in cache:
                    cache[word] = tag_boundaries([(word, self.encode_word(word))])
                tagged.extend(cache[word])
            out.append(tagged)
        return out

    def save(self, path: str | Path) -> None:
        check_is_fitted(self, "merges_")
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(f"{MERGE_FILE_MAGIC} alphabet={len(self.alphabet_)} "
                     f"merges={len(self.merges_)}\n")
            # Metadata line; merge ranks are the zero-based order of the
            # non-'#' lines that follow.
            fh.write("#chars " + " ".join(sorted(self.alphabet_)) + "\n")
            for left, right in self.merges_:
                fh.write(f"{left} {right}\n")

    @classmethod
    def load(cls, path: str | Path) -> "BpeTokenizer":
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().rstrip("\n")
            fields = header.split()
            if len(fields) != 4 or " ".join(fields[:2]) != MERGE_FILE_MAGIC:
                raise DataFormatError(f"bad merge file header {header!r}", line=1)
            try:
                n_alpha = int(fields[2].removeprefix("alphabet="))
                n_merges = int(fields[3].removeprefix("merges="))
            except ValueError:
                raise DataFormatError(f"bad merge file header {header!r}", line=1)
            alphabet: set[str] = set()
            merges = []
            for lineno, line in enumerate(fh, start=2):
                line = line.rstrip("\n")
                if line.startswith("#chars"):
                    alphabet.update(line[len("#chars"):].split())
                    continue
                parts = line.split(" ")
                if len(parts) != 2 or not parts[0] or not parts[1]:
                    raise DataFormatError(f"bad merge line {line!r}", lineno)
                merges.append((parts[0], parts[1]))
        if len(alphabet) != n_alpha or len(merges) != n_merges:
            raise DataFormatError(
                f"header declares alphabet={n_alpha} merges={n_merges} but file has "
                f"{len(alphabet)} and {len(merges)}"
            )
        tok = cls(inventory_size=n_alpha + n_merges)
        tok.alphabet_ = frozenset(alphabet)
        tok.merges_ = tuple(merges)
        return tok
