"""Corpus handling: loading, vocabularies, boundary tagging, prefix sampling.

The corpus text format is UTF-8 plain text, one sentence per line, tokens
separated by single spaces, LF line endings.  The tokens ``<s>``, ``</s>``
and ``<unk>`` are reserved for the language-model layer and never appear in
a corpus; tokens starting with ``+`` mark non-word-initial subwords and are
rejected unless the file is declared to be subword-tagged.
"""

from __future__ import annotations

import unicodedata
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import DataFormatError

BOS = "<s>"
EOS = "</s>"
UNK = "<unk>"
RESERVED_TOKENS = frozenset({BOS, EOS, UNK})

#: Prefix marking a non-word-initial subword token.
CONTINUATION_PREFIX = "+"

#: A sentence is an immutable sequence of token strings.
Sentence = tuple[str, ...]

NORMALIZATIONS = ("none", "nfc+lowercase")


@dataclass(frozen=True)
class TaggedToken:
    """A subword token plus its word-boundary role."""

    surface: str
    word_initial: bool

    def serialize(self) -> str:
        return self.surface if self.word_initial else CONTINUATION_PREFIX + self.surface

    @classmethod
    def parse(cls, token: str) -> "TaggedToken":
        if token.startswith(CONTINUATION_PREFIX):
            return cls(token[1:], word_initial=False)
        return cls(token, word_initial=True)


def is_word_initial(token: str) -> bool:
    return not token.startswith(CONTINUATION_PREFIX)


def _check_token(token: str, line: int | None, subword_input: bool) -> None:
    if not token:
        raise DataFormatError("empty token (multiple consecutive spaces?)", line)
    if any(ch.isspace() for ch in token):
        raise DataFormatError(f"token {token!r} contains whitespace", line)
    if token in RESERVED_TOKENS:
        raise DataFormatError(
            f"reserved symbol {token!r} may not appear as a corpus token", line
        )
    if token.startswith(CONTINUATION_PREFIX) and not subword_input:
        raise DataFormatError(
            f"token {token!r} starts with {CONTINUATION_PREFIX!r}; pass "
            "subword_input=True (--subword-input) for boundary-tagged files",
            line,
        )


@dataclass(frozen=True)
class Corpus:
    """An immutable tokenized corpus with cached size statistics."""

    sentences: tuple[Sentence, ...]
    token_count: int
    type_count: int

    @classmethod
    def from_sentences(
        cls,
        sentences: Iterable[Sequence[str]],
        subword_input: bool = False,
        validate: bool = True,
    ) -> "Corpus":
        rows: list[Sentence] = []
        token_count = 0
        types: set[str] = set()
        for sent in sentences:
            toks = tuple(sent)
            if not toks:
                continue
            if validate:
                for tok in toks:
                    _check_token(tok, None, subword_input)
            rows.append(toks)
            token_count += len(toks)
            types.update(toks)
        return cls(tuple(rows), token_count, len(types))

    def __len__(self) -> int:
        return len(self.sentences)

    def __iter__(self) -> Iterator[Sentence]:
        return iter(self.sentences)

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for sent in self.sentences:
                fh.write(" ".join(sent))
                fh.write("\n")


def normalize_line(line: str, normalization: str) -> str:
    if normalization == "none":
        return line
    if normalization == "nfc+lowercase":
        return unicodedata.normalize("NFC", line).lower()
    raise ValueError(f"unknown normalization {normalization!r}; use one of {NORMALIZATIONS}")


def load_corpus(
    path: str | Path,
    normalization: str = "nfc+lowercase",
    subword_input: bool = False,
) -> Corpus:
    """Load a corpus file, skipping blank lines.

    Raises :class:`DataFormatError` with a line number for invalid UTF-8,
    reserved symbols and untagged ``+`` tokens.
    """
    if normalization not in NORMALIZATIONS:
        raise ValueError(f"unknown normalization {normalization!r}; use one of {NORMALIZATIONS}")
    rows: list[Sentence] = []
    token_count = 0
    types: set[str] = set()
    with open(path, "rb") as fh:
        for lineno, raw in enumerate(fh, start=1):
            try:
                line = raw.decode("utf-8")
            except UnicodeDecodeError as exc:
                raise DataFormatError(f"invalid UTF-8 byte sequence ({exc.reason})", lineno)
            line = normalize_line(line, normalization).strip()
            if not line:
                continue
            toks = tuple(line.split())
            for tok in toks:
                _check_token(tok, lineno, subword_input)
            rows.append(toks)
            token_count += len(toks)
            types.update(toks)
    return Corpus(tuple(rows), token_count, len(types))


@dataclass(frozen=True)
class WordVocabulary:
    """Frequency-ranked vocabulary, optionally capped to the top entries.

    Entries are sorted by descending frequency, ties broken by ascending
    lexicographic order, so capped vocabularies are deterministic.
    """

    entries: tuple[tuple[str, int], ...]
    cap: int | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "_words", frozenset(w for w, _ in self.entries))

    @property
    def words(self) -> frozenset:
        return self._words  # type: ignore[attr-defined]

    def __contains__(self, word: str) -> bool:
        return word in self.words

    def __len__(self) -> int:
        return len(self.entries)

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for word, freq in self.entries:
                fh.write(f"{word}\t{freq}\n")

    @classmethod
    def load(cls, path: str | Path) -> "WordVocabulary":
        entries = []
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.rstrip("\n")
                if not line:
                    continue
                parts = line.split("\t")
                if len(parts) != 2:
                    raise DataFormatError("expected 'word<TAB>frequency'", lineno)
                try:
                    freq = int(parts[1])
                except ValueError:
                    raise DataFormatError(f"non-integer frequency {parts[1]!r}", lineno)
                entries.append((parts[0], freq))
        return cls(tuple(entries))


def build_vocabulary(corpus: Corpus, cap: int | None = None) -> WordVocabulary:
    """Top-``cap`` words by frequency; pure function of (corpus, cap)."""
    if cap is not None and cap < 1:
        raise ValueError(f"cap must be >= 1, got {cap}")
    counts = Counter()
    for sent in corpus:
        counts.update(sent)
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    if cap is not None:
        ranked = ranked[:cap]
    return WordVocabulary(tuple(ranked), cap)


@dataclass(frozen=True)
class OovStatistics:
    oov_tokens: int
    oov_rate: float
    oov_types: frozenset


def oov_statistics(vocab: WordVocabulary, test: Corpus) -> OovStatistics:
    """Token- and type-level out-of-vocabulary statistics of ``test``."""
    if test.token_count == 0:
        raise ValueError("empty evaluation set")
    oov_tokens = 0
    oov_types: set[str] = set()
    for sent in test:
        for tok in sent:
            if tok not in vocab:
                oov_tokens += 1
                oov_types.add(tok)
    return OovStatistics(oov_tokens, oov_tokens / test.token_count, frozenset(oov_types))


def tag_boundaries(segmented_words: Iterable[tuple[str, Sequence[str]]]) -> list[str]:
    """Serialize per-word segmentations into boundary-tagged subword tokens.

    The first subword of each word stays untagged; every further subword is
    prefixed with ``+``.  Each subword list must concatenate back to its word.
    """
    out: list[str] = []
    for word, subwords in segmented_words:
        subwords = list(subwords)
        if not subwords or "".join(subwords) != word:
            raise ValueError(
                f"segmentation {subwords!r} does not concatenate to word {word!r}"
            )
        out.append(subwords[0])
        out.extend(CONTINUATION_PREFIX + sw for sw in subwords[1:])
    return out


def detag_boundaries(tagged: Sequence[str]) -> list[str]:
    """Rejoin boundary-tagged subword tokens into the original words."""
    words: list[str] = []
    for tok in tagged:
        if tok.startswith(CONTINUATION_PREFIX):
            if not words:
                raise ValueError(f"dangling continuation {tok!r} at stream start")
            words[-1] += tok[len(CONTINUATION_PREFIX):]
        else:
            words.append(tok)
    return words


def sample_prefix(
    corpus: Corpus,
    rng: np.random.Generator,
    min_len: int = 1,
    max_len: int = 7,
) -> list[str]:
    """Draw a sentence uniformly, then a uniform-length prefix of it.

    The prefix length is uniform on [min_len, min(max_len, sentence length)];
    sentences shorter than ``min_len`` are returned whole.
    """
    if not 1 <= min_len <= max_len:
        raise ValueError(f"need 1 <= min_len <= max_len, got {min_len}..{max_len}")
    if len(corpus) == 0:
        raise ValueError("cannot sample a prefix from an empty corpus")
    sent = corpus.sentences[rng.integers(len(corpus))]
    hi = min(max_len, len(sent))
    lo = min(min_len, len(sent))
    length = int(rng.integers(lo, hi + 1))
    return list(sent[:length])
