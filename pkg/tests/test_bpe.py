import hashlib

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sublm import BpeTokenizer, Corpus, DataFormatError, decode


def corpus_of(word_freq: dict) -> Corpus:
    sentences = [[w] * f for w, f in word_freq.items()]
    return Corpus.from_sentences(sentences)


class TestTraining:
    def test_first_merge_by_pair_count(self):
        # Hand oracle: pairs of {aaab, aab} are (a,a) x3 and (a,b) x2.
        tok = BpeTokenizer(inventory_size=50).fit(corpus_of({"aaab": 1, "aab": 1}))
        assert tok.merges_[0] == ("a", "a")
        # All remaining pairs occur once, below the merge threshold.
        assert tok.merges_ == (("a", "a"),)

    def test_tie_break_lexicographic(self):
        # With frequency 2 the post-merge pairs (a,b), (aa,a), (aa,b) tie at
        # count 2; the lexicographically smallest pair must win.
        tok = BpeTokenizer(inventory_size=50).fit(corpus_of({"aaab": 2, "aab": 2}))
        assert tok.merges_[0] == ("a", "a")
        assert tok.merges_[1] == ("a", "b")

    def test_all_pairs_unique_stops(self):
        tok = BpeTokenizer(inventory_size=50).fit(corpus_of({"abc": 1}))
        assert tok.merges_ == ()
        assert tok.alphabet_ == frozenset("abc")

    def test_inventory_bound(self, small_train):
        tok = BpeTokenizer(inventory_size=500).fit(small_train)
        assert len(tok.alphabet_) + len(tok.merges_) <= 500
        assert tok.inventory_ <= 500

    def test_inventory_too_small(self):
        with pytest.raises(ValueError, match="inventory too small"):
            BpeTokenizer(inventory_size=3).fit(corpus_of({"abcd": 1}))

    def test_monotone_prefix(self, small_train):
        small = BpeTokenizer(inventory_size=120).fit(small_train)
        large = BpeTokenizer(inventory_size=220).fit(small_train)
        assert large.merges_[: len(small.merges_)] == small.merges_

    def test_deterministic_merge_file(self, small_train, tmp_path):
        digests = []
        for run in range(2):
            tok = BpeTokenizer(inventory_size=150).fit(small_train)
            path = tmp_path / f"m{run}.bpe"
            tok.save(path)
            digests.append(hashlib.sha256(path.read_bytes()).hexdigest())
        assert digests[0] == digests[1]

    def test_training_segmentation_self_consistency(self, small_train):
        tok = BpeTokenizer(inventory_size=200).fit(small_train)
        for word, training_seg in list(tok._training_segmentations_.items())[:300]:
            assert tuple(tok.encode_word(word)) == training_seg


class TestEncoding:
    def test_rank_order_application(self):
        tok = BpeTokenizer(inventory_size=10)
        tok.alphabet_ = frozenset("ab")
        tok.merges_ = (("a", "a"), ("aa", "b"))
        # Rank 0 leftmost-first: a a a b -> aa a b; rank 1 never adjacent.
        assert tok.encode_word("aaab") == ["aa", "a", "b"]
        # For aab both ranks apply in order: a a b -> aa b -> aab.
        assert tok.encode_word("aab") == ["aab"]

    def test_character_fallback(self):
        tok = BpeTokenizer(inventory_size=10)
        tok.alphabet_ = frozenset("ab")
        tok.merges_ = ()
        assert tok.encode_word("kép") == ["k", "é", "p"]

    def test_empty_word_rejected(self):
        tok = BpeTokenizer(inventory_size=10)
        tok.alphabet_ = frozenset("a")
        tok.merges_ = ()
        with pytest.raises(ValueError):
            tok.encode_word("")

    @given(st.text(alphabet="abcdeé", min_size=1, max_size=12))
    @settings(max_examples=300)
    def test_lossless_law(self, word):
        tok = BpeTokenizer(inventory_size=10)
        tok.alphabet_ = frozenset("abc")
        tok.merges_ = (("a", "b"), ("ab", "c"), ("c", "c"))
        assert decode(tok.encode_word(word)) == word

    def test_lossless_on_fitted_model(self, small_train):
        tok = BpeTokenizer(inventory_size=200).fit(small_train)
        words = sorted({w for s in small_train for w in s})[:200] + ["qqxyz", "zűrzavar"]
        for word in words:
            assert decode(tok.encode_word(word)) == word

    def test_decode_trivials(self):
        assert decode(["aa", "a", "b"]) == "aaab"
        assert decode([]) == ""


class TestSerialization:
    def test_round_trip(self, small_train, tmp_path):
        tok = BpeTokenizer(inventory_size=150).fit(small_train)
        path = tmp_path / "model.bpe"
        tok.save(path)
        loaded = BpeTokenizer.load(path)
        assert loaded.merges_ == tok.merges_
        assert loaded.alphabet_ == tok.alphabet_
        header = path.read_text(encoding="utf-8").splitlines()[0]
        assert header == (
            f"#bpe v1 alphabet={len(tok.alphabet_)} merges={len(tok.merges_)}"
        )

    def test_header_count_mismatch(self, tmp_path):
        path = tmp_path / "bad.bpe"
        path.write_text("#bpe v1 alphabet=2 merges=3\n#chars a b\nx y\n", encoding="utf-8")
        with pytest.raises(DataFormatError):
            BpeTokenizer.load(path)

    def test_transform_tags_boundaries(self, small_train):
        tok = BpeTokenizer(inventory_size=150).fit(small_train)
        sent = small_train.sentences[0]
        [tagged] = tok.transform([sent])
        from sublm import detag_boundaries

        assert detag_boundaries(tagged) == list(sent)
