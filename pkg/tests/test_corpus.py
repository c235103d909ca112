import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sublm import (
    Corpus,
    DataFormatError,
    WordVocabulary,
    build_vocabulary,
    detag_boundaries,
    load_corpus,
    oov_statistics,
    sample_prefix,
    tag_boundaries,
)

DATA_DIR = Path(__file__).parent.parent / "data" / "miniature"


def write(tmp_path, text, name="c.txt"):
    path = tmp_path / name
    path.write_bytes(text if isinstance(text, bytes) else text.encode("utf-8"))
    return path


class TestLoadCorpus:
    def test_counts(self, tmp_path):
        corpus = load_corpus(write(tmp_path, "a b\na\n"))
        assert corpus.token_count == 3
        assert corpus.type_count == 2
        assert len(corpus) == 2

    def test_empty_file(self, tmp_path):
        corpus = load_corpus(write(tmp_path, ""))
        assert len(corpus) == 0
        assert corpus.token_count == 0

    def test_blank_lines_skipped(self, tmp_path):
        corpus = load_corpus(write(tmp_path, "a b\n\n\nc\n"))
        assert len(corpus) == 2

    def test_normalization(self, tmp_path):
        corpus = load_corpus(write(tmp_path, "A Árvíz\n"))
        # NFC composes the combining accents; lowercase folds the A.
        assert corpus.sentences[0] == ("a", "árvíz")
        raw = load_corpus(write(tmp_path, "A B\n"), normalization="none")
        assert raw.sentences[0] == ("A", "B")

    def test_invalid_utf8_reports_line(self, tmp_path):
        path = write(tmp_path, b"jo\nrossz \xff\n")
        with pytest.raises(DataFormatError, match="line 2"):
            load_corpus(path)

    def test_reserved_symbols_rejected(self, tmp_path):
        with pytest.raises(DataFormatError, match="reserved"):
            load_corpus(write(tmp_path, "a <unk> b\n"))

    def test_plus_prefix_needs_subword_flag(self, tmp_path):
        path = write(tmp_path, "meg +ered\n")
        with pytest.raises(DataFormatError, match="subword"):
            load_corpus(path)
        corpus = load_corpus(path, subword_input=True)
        assert corpus.token_count == 2

    def test_save_load_round_trip(self, tmp_path, small_train):
        path = tmp_path / "round.txt"
        small_train.save(path)
        again = load_corpus(path, normalization="none")
        assert again.sentences == small_train.sentences
        assert again.token_count == small_train.token_count
        assert again.type_count == small_train.type_count

    def test_miniature_manifest_counts(self, miniature):
        # Independent word-count pass over the raw files.
        manifest = json.loads((DATA_DIR / "manifest.json").read_text())
        for name, corpus in miniature.items():
            raw = (DATA_DIR / f"{name}.txt").read_text(encoding="utf-8")
            words = [w for line in raw.splitlines() for w in line.split() if line]
            assert corpus.token_count == len(words)
            assert corpus.type_count == len(set(words))
            assert manifest["splits"][name]["token_count"] == len(words)
            assert manifest["splits"][name]["type_count"] == len(set(words))


class TestVocabulary:
    def test_frequency_order(self):
        corpus = Corpus.from_sentences([["b", "a", "b"]])
        vocab = build_vocabulary(corpus, cap=1)
        assert vocab.entries == (("b", 2),)

    def test_lexicographic_tie_break(self):
        corpus = Corpus.from_sentences([["a", "b"]])
        vocab = build_vocabulary(corpus, cap=1)
        assert vocab.entries == (("a", 1),)

    def test_uncapped_matches_independent_count(self, small_train):
        vocab = build_vocabulary(small_train)
        assert len(vocab) == small_train.type_count
        # Sort-and-count oracle.
        from collections import Counter

        counts = Counter(t for sent in small_train for t in sent)
        expected = tuple(sorted(counts.items(), key=lambda kv: (-kv[1], kv[0])))
        assert vocab.entries == expected

    def test_determinism(self, small_train):
        a = build_vocabulary(small_train, cap=200)
        b = build_vocabulary(small_train, cap=200)
        assert a.entries == b.entries

    def test_cap_validation(self, small_train):
        with pytest.raises(ValueError):
            build_vocabulary(small_train, cap=0)

    def test_save_load(self, tmp_path, small_train):
        vocab = build_vocabulary(small_train, cap=50)
        path = tmp_path / "vocab.tsv"
        vocab.save(path)
        assert WordVocabulary.load(path).entries == vocab.entries


class TestOovStatistics:
    def test_direct_count(self):
        vocab = WordVocabulary((("a", 3),))
        test = Corpus.from_sentences([["a", "a", "b"]])
        stats = oov_statistics(vocab, test)
        assert stats.oov_tokens == 1
        assert stats.oov_rate == pytest.approx(1 / 3)
        assert stats.oov_types == frozenset({"b"})

    def test_full_coverage(self):
        vocab = WordVocabulary((("a", 1), ("b", 1)))
        stats = oov_statistics(vocab, Corpus.from_sentences([["a", "b"]]))
        assert stats.oov_rate == 0.0
        assert not stats.oov_types

    def test_empty_test_set(self):
        with pytest.raises(ValueError, match="empty evaluation set"):
            oov_statistics(WordVocabulary((("a", 1),)), Corpus.from_sentences([]))

    def test_miniature_against_membership_oracle(self, miniature):
        vocab = build_vocabulary(miniature["train"])
        stats = oov_statistics(vocab, miniature["valid"])
        words = vocab.words
        oov = sum(1 for s in miniature["valid"] for t in s if t not in words)
        assert stats.oov_tokens == oov
        assert stats.oov_rate == pytest.approx(oov / miniature["valid"].token_count)
        assert stats.oov_rate > 0


class TestBoundaryTagging:
    def test_multiword_example(self):
        segmented = [
            ("megbeszélem", ["meg", "beszél", "em"]),
            ("a", ["a"]),
            ("nejemmel", ["nejem", "mel"]),
        ]
        tagged = tag_boundaries(segmented)
        assert tagged == ["meg", "+beszél", "+em", "a", "nejem", "+mel"]
        assert detag_boundaries(tagged) == ["megbeszélem", "a", "nejemmel"]

    def test_identity_for_unsplit_words(self):
        tagged = tag_boundaries([("alma", ["alma"]), ("fa", ["fa"])])
        assert tagged == ["alma", "fa"]
        assert detag_boundaries(tagged) == ["alma", "fa"]

    def test_concatenation_mismatch(self):
        with pytest.raises(ValueError, match="alma"):
            tag_boundaries([("alma", ["al", "ma", "x"])])

    def test_dangling_continuation(self):
        with pytest.raises(ValueError, match="dangling"):
            detag_boundaries(["+x", "a"])

    @given(
        st.lists(
            st.lists(
                st.text(alphabet="abcdefgh+", min_size=1, max_size=4), min_size=1, max_size=4
            ),
            min_size=1,
            max_size=6,
        )
    )
    @settings(max_examples=200)
    def test_round_trip_law(self, pieces_per_word):
        words = ["".join(pieces) for pieces in pieces_per_word]
        # Words starting with '+' cannot occur in a corpus; skip those draws.
        if any(w.startswith("+") for w in words):
            return
        tagged = tag_boundaries(list(zip(words, pieces_per_word)))
        assert detag_boundaries(tagged) == words


class TestSamplePrefix:
    def test_forced_outcome(self):
        corpus = Corpus.from_sentences([["a", "b", "c"]])
        rng = np.random.default_rng(0)
        assert sample_prefix(corpus, rng, 2, 2) == ["a", "b"]

    def test_determinism(self, small_train):
        a = sample_prefix(small_train, np.random.default_rng(7), 1, 7)
        b = sample_prefix(small_train, np.random.default_rng(7), 1, 7)
        assert a == b

    def test_empty_corpus(self):
        with pytest.raises(ValueError):
            sample_prefix(Corpus.from_sentences([]), np.random.default_rng(0), 1, 7)

    def test_length_distribution_uniform(self):
        # Single 10-word sentence: attainable lengths 1..7 should be uniform.
        from scipy.stats import chisquare

        corpus = Corpus.from_sentences([[f"w{i}" for i in range(10)]])
        rng = np.random.default_rng(42)
        draws = 14_000
        lengths = [len(sample_prefix(corpus, rng, 1, 7)) for _ in range(draws)]
        observed = [lengths.count(k) for k in range(1, 8)]
        assert chisquare(observed).pvalue > 1e-4

    def test_short_sentences_returned_whole(self):
        corpus = Corpus.from_sentences([["a", "b"]])
        rng = np.random.default_rng(1)
        for _ in range(10):
            assert 1 <= len(sample_prefix(corpus, rng, 3, 7)) <= 2
