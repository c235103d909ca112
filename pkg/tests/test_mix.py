import numpy as np
import pytest

from sublm import (
    Corpus,
    MixtureWeights,
    interpolate_static,
    optimize_weights,
    perplexity,
    sentence_logprob,
)
from sublm.mix import dynamic_mixture_perplexity
from sublm.ngram import context_probability_sums, count_ngrams, estimate_discounts, estimate_kn_model


def fit(sentences, order=2, vocab=None):
    corpus = Corpus.from_sentences(sentences)
    counts = count_ngrams(corpus, order, vocab)
    return estimate_kn_model(counts, estimate_discounts(counts))


@pytest.fixture(scope="module")
def components(small_train_module):
    half = len(small_train_module.sentences) // 2
    vocab = sorted({t for s in small_train_module for t in s})
    a = fit(list(small_train_module.sentences[:half]), 2, vocab)
    b = fit(list(small_train_module.sentences[half:]), 2, vocab)
    return a, b


@pytest.fixture(scope="module")
def small_train_module(request):
    from conftest import DATA_DIR
    from sublm import load_corpus

    corpus = load_corpus(DATA_DIR / "train.txt")
    return Corpus.from_sentences(corpus.sentences[:1200])


class TestMixtureWeights:
    def test_simplex_validation(self):
        with pytest.raises(ValueError):
            MixtureWeights((0.5, 0.6))
        with pytest.raises(ValueError):
            MixtureWeights((-0.1, 1.1))
        assert len(MixtureWeights((0.25, 0.75))) == 2


class TestOptimizeWeights:
    def test_identical_components_stay_uniform(self, components):
        a, _ = components
        tuning = Corpus.from_sentences([["a"]])  # content irrelevant here
        weights = optimize_weights([a, a], tuning)
        assert weights.weights == pytest.approx((0.5, 0.5), abs=1e-12)

    def test_dominating_component_takes_the_corner(self):
        strong = fit([["a", "b"], ["b", "a"], ["a", "b"]], 2, ["a", "b"])
        weak = fit([["b", "b"], ["b", "b"], ["b", "b"]], 2, ["a", "b"])
        tuning = Corpus.from_sentences([["a", "b"], ["b", "a"], ["a", "b"]])
        weights = optimize_weights([strong, weak], tuning, tol=1e-9)
        assert weights[0] > 0.99

    def test_matches_grid_search_oracle(self):
        a = fit([["a"], ["a"], ["b"]], 1, ["a", "b"])
        b = fit([["b"], ["b"], ["a"]], 1, ["a", "b"])
        tuning = Corpus.from_sentences([["a", "a", "b", "a"], ["b", "a", "a", "b", "a", "a"]])
        weights = optimize_weights([a, b], tuning, tol=1e-12)

        best_grid = None
        for step in range(1001):
            lam = step / 1000.0
            total = 0.0
            for sent in tuning:
                hist = ()
                for tok in tuple(sent) + ("</s>",):
                    p = lam * 10.0 ** a.logprob(hist, tok) + (1 - lam) * 10.0 ** b.logprob(hist, tok)
                    total += np.log(p)
            if best_grid is None or total > best_grid[1]:
                best_grid = (lam, total)
        assert weights[0] == pytest.approx(best_grid[0], abs=2e-3)

    def test_beats_every_corner(self, components, small_heldout_module):
        a, b = components
        weights = optimize_weights([a, b], small_heldout_module)
        mix_ppl = dynamic_mixture_perplexity([a, b], weights, small_heldout_module)
        for corner_model in (a, b):
            assert mix_ppl <= perplexity(corner_model, small_heldout_module) + 1e-9

    def test_errors(self, components):
        a, b = components
        with pytest.raises(ValueError, match="two component"):
            optimize_weights([a], Corpus.from_sentences([["a"]]))
        with pytest.raises(ValueError, match="empty tuning"):
            optimize_weights([a, b], Corpus.from_sentences([]))


@pytest.fixture(scope="module")
def small_heldout_module():
    from conftest import DATA_DIR
    from sublm import load_corpus

    corpus = load_corpus(DATA_DIR / "valid.txt")
    return Corpus.from_sentences(corpus.sentences[:250])


class TestInterpolateStatic:
    def test_corner_weights_score_identically(self, components, small_heldout_module):
        a, b = components
        merged = interpolate_static([a, b], MixtureWeights((1.0, 0.0)))
        for sent in small_heldout_module.sentences[:60]:
            lp_a, _ = sentence_logprob(a, sent)
            lp_m, _ = sentence_logprob(merged, sent)
            assert lp_m == pytest.approx(lp_a, abs=1e-9)

    def test_two_unigram_models_average_exactly(self):
        a = fit([["a"], ["a"], ["b"]], 1, ["a", "b"])
        b = fit([["b"], ["a"]], 1, ["a", "b"])
        merged = interpolate_static([a, b], MixtureWeights((0.5, 0.5)))
        for w in ("a", "b"):
            expected = 0.5 * 10.0 ** a.logprob((), w) + 0.5 * 10.0 ** b.logprob((), w)
            assert 10.0 ** merged.logprob((), w) == pytest.approx(expected, abs=1e-15)

    def test_static_close_to_dynamic(self, components, small_heldout_module):
        a, b = components
        weights = optimize_weights([a, b], small_heldout_module)
        merged = interpolate_static([a, b], weights)
        static_ppl = perplexity(merged, small_heldout_module)
        dynamic_ppl = dynamic_mixture_perplexity([a, b], weights, small_heldout_module)
        assert static_ppl == pytest.approx(dynamic_ppl, rel=0.02)

    def test_normalization_preserved(self, components):
        a, b = components
        merged = interpolate_static([a, b], MixtureWeights((0.3, 0.7)))
        for total in context_probability_sums(merged).values():
            assert total == pytest.approx(1.0, abs=1e-6)

    def test_three_way_mixture(self, components, small_heldout_module):
        a, b = components
        vocab = a.vocabulary - {"<s>", "</s>", "<unk>"}
        c = fit(list(small_heldout_module.sentences[:150]), 2, vocab)
        merged = interpolate_static([a, b, c], MixtureWeights((0.5, 0.25, 0.25)))
        assert merged.order == 2
        for total in context_probability_sums(merged).values():
            assert total == pytest.approx(1.0, abs=1e-6)

    def test_mismatched_orders_rejected(self, components):
        a, _ = components
        vocab = a.vocabulary - {"<s>", "</s>", "<unk>"}
        tri = fit([["a", "b"]], 3, vocab)
        with pytest.raises(ValueError, match="order"):
            interpolate_static([a, tri], MixtureWeights((0.5, 0.5)))

    def test_mismatched_vocabularies_rejected(self, components):
        a, _ = components
        other = fit([["zzz", "qqq"]], 2, ["zzz", "qqq"])
        with pytest.raises(ValueError, match="vocabular"):
            interpolate_static([a, other], MixtureWeights((0.5, 0.5)))
