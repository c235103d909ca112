"""Deterministic generator for the bundled miniature corpus.

The real call-center transcripts behind this work are private, so the desk
fixtures are drawn from a synthetic agglutinative grammar with the traits
that make subword modeling pay off in morphologically rich languages:

* stems from a fixed syllable inventory crossed with vowel-harmonized
  suffix paradigms (number, possessive, case on nominals; person/tense on
  verbs), so word forms are sparse even when every morph is frequent and
  held-out splits contain unseen forms;
* agreement: attributes copy the number and case ending of their noun, and
  verbs agree with their subject's number, so suffixes are predictable from
  nearby context while the full inflected forms stay rare;
* case government: each verb selects its object's case suffix;
* partially free constituent order (clauses are permuted half the time),
  which limits how much long-range word-level context can explain.

``python scripts/make_miniature.py`` regenerates data/miniature/ exactly.
"""

from __future__ import annotations

import numpy as np

from .corpus import Corpus

DEFAULT_SEED = 20240601

_ONSETS = ["b", "d", "f", "g", "h", "k", "l", "m", "n", "p", "r", "s", "t", "v",
           "z", "sz", "gy", "ny"]
_BACK_VOWELS = ["a", "o", "u", "á"]
_FRONT_VOWELS = ["e", "i", "ö", "é", "ü"]
_CODAS = ["", "", "l", "r", "s", "n", "z"]

# Vowel-harmony suffix pairs: (back-stem form, front-stem form).
_PLURALS = [("", ""), ("ok", "ek")]
_POSSESSIVES = [("", ""), ("om", "em"), ("od", "ed")]
_CASES = [("", ""), ("ban", "ben"), ("ba", "be"), ("ból", "ből"), ("nak", "nek"),
          ("val", "vel"), ("hoz", "hez"), ("on", "en"), ("ról", "ről"),
          ("tól", "től"), ("ra", "re"), ("nál", "nél"), ("ig", "ig"), ("ért", "ért")]
_ADJ_ENDINGS = _PLURALS  # attributes carry number + case agreement copies
_VERB_SG = [("ok", "ek"), ("asz", "esz"), ("", ""), ("tam", "tem"), ("tál", "tél"),
            ("ott", "ett"), ("ni", "ni")]
_VERB_PL = [("unk", "ünk"), ("tok", "tek"), ("nak", "nek"), ("tunk", "tünk")]
_FUNCTION_WORDS = ["a", "az", "és", "de", "nem", "is", "már", "majd", "itt",
                   "ott", "csak", "ha"]

#: Probability that an object noun carries its verb's governed case.
_GOVERNMENT_STRENGTH = 0.95
_ADJECTIVE_PROB = 0.6
_PLURAL_PROB = 0.4
_FUNCTION_PROB = 0.6
#: Probability of permuting the clause constituents (free word order).
_PERMUTE_PROB = 1.0


def _make_stems(
    rng: np.random.Generator, count: int, min_syll: int, max_syll: int
) -> list[tuple[str, int]]:
    """Unique stems tagged with their harmony class (0 back, 1 front)."""
    stems: list[tuple[str, int]] = []
    seen = set()
    while len(stems) < count:
        harmony = int(rng.integers(2))
        vowels = _BACK_VOWELS if harmony == 0 else _FRONT_VOWELS
        n_syll = int(rng.integers(min_syll, max_syll + 1))
        parts = []
        for _ in range(n_syll):
            parts.append(_ONSETS[rng.integers(len(_ONSETS))])
            parts.append(vowels[rng.integers(len(vowels))])
            parts.append(_CODAS[rng.integers(len(_CODAS))])
        stem = "".join(parts)
        if stem not in seen:
            seen.add(stem)
            stems.append((stem, harmony))
    return stems


def _zipf_probs(n: int, exponent: float) -> np.ndarray:
    ranks = np.arange(1, n + 1, dtype=np.float64)
    probs = ranks ** (-exponent)
    return probs / probs.sum()


class MiniatureGrammar:
    """Seeded clause grammar with agreement and government."""

    def __init__(self, seed: int = DEFAULT_SEED):
        rng = np.random.default_rng(seed)
        self.noun_stems = _make_stems(rng, 60, 2, 3)
        self.verb_stems = _make_stems(rng, 45, 2, 3)
        self.adj_stems = _make_stems(rng, 30, 2, 2)
        # Each verb governs one non-empty case for its object.
        self.verb_case = {
            i: 1 + int(rng.integers(len(_CASES) - 1))
            for i in range(len(self.verb_stems))
        }

    def _noun_phrase(
        self,
        rng: np.random.Generator,
        case_idx: int,
        n_nouns: int,
        n_adjs: int,
        noun_p: np.ndarray,
        adj_p: np.ndarray,
        poss_p: np.ndarray,
    ) -> tuple[list[str], int]:
        plural_idx = 1 if rng.random() < _PLURAL_PROB else 0
        stem, h = self.noun_stems[rng.choice(n_nouns, p=noun_p)]
        poss_idx = int(rng.choice(len(_POSSESSIVES), p=poss_p))
        noun = stem + _PLURALS[plural_idx][h] + _POSSESSIVES[poss_idx][h] + _CASES[case_idx][h]
        phrase = []
        if rng.random() < _ADJECTIVE_PROB:
            astem, ah = self.adj_stems[rng.choice(n_adjs, p=adj_p)]
            # Agreement: the attribute copies number and case.
            phrase.append(astem + _PLURALS[plural_idx][ah] + _CASES[case_idx][ah])
        phrase.append(noun)
        return phrase, plural_idx

    def sample_corpus(
        self,
        rng: np.random.Generator,
        target_tokens: int,
        stem_fraction: float = 1.0,
        template_tilt: float = 0.0,
    ) -> Corpus:
        """Sample clauses until the token target is reached.

        ``stem_fraction`` restricts the usable stems (domain vocabulary);
        ``template_tilt`` skews distributions so splits differ in style,
        not just in sampling noise.
        """
        n_nouns = max(2, int(len(self.noun_stems) * stem_fraction))
        n_verbs = max(2, int(len(self.verb_stems) * stem_fraction))
        n_adjs = max(2, int(len(self.adj_stems) * stem_fraction))
        noun_p = _zipf_probs(n_nouns, 1.15 + template_tilt / 10)
        verb_p = _zipf_probs(n_verbs, 1.0)
        adj_p = _zipf_probs(n_adjs, 0.9)
        poss_p = _zipf_probs(len(_POSSESSIVES), 1.0)
        vsg_p = _zipf_probs(len(_VERB_SG), 0.7)
        vpl_p = _zipf_probs(len(_VERB_PL), 0.7)
        func_p = _zipf_probs(len(_FUNCTION_WORDS), 1.0)
        case_p = _zipf_probs(len(_CASES), 0.5)

        sentences = []
        tokens = 0
        while tokens < target_tokens:
            verb_idx = int(rng.choice(n_verbs, p=verb_p))
            vstem, vh = self.verb_stems[verb_idx]
            subject, subj_plural = self._noun_phrase(
                rng, 0, n_nouns, n_adjs, noun_p, adj_p, poss_p
            )
            # Verb agrees with its subject's number.
            if subj_plural:
                ending = _VERB_PL[rng.choice(len(_VERB_PL), p=vpl_p)][vh]
            else:
                ending = _VERB_SG[rng.choice(len(_VERB_SG), p=vsg_p)][vh]
            verb = vstem + ending
            if rng.random() < _GOVERNMENT_STRENGTH:
                obj_case = self.verb_case[verb_idx]
            else:
                obj_case = int(rng.choice(len(_CASES), p=case_p))
            obj, _ = self._noun_phrase(rng, obj_case, n_nouns, n_adjs, noun_p, adj_p, poss_p)
            constituents = [subject, [verb], obj]
            if rng.random() < _FUNCTION_PROB:
                constituents.insert(
                    int(rng.integers(3)),
                    [_FUNCTION_WORDS[rng.choice(len(_FUNCTION_WORDS), p=func_p)]],
                )
            if rng.random() < _PERMUTE_PROB:
                order = rng.permutation(len(constituents))
                constituents = [constituents[i] for i in order]
            sentences.append([w for phrase in constituents for w in phrase])
            tokens += len(sentences[-1])
        return Corpus.from_sentences(sentences)


def generate_miniature(seed: int = DEFAULT_SEED) -> dict[str, Corpus]:
    """All four fixture splits, each deterministic under the seed.

    ``train``/``valid``/``eval`` share the in-domain style (a stem subset and
    tilted sampling); ``general`` is the larger broad-domain corpus used to
    train generators and to pre-train the neural component.
    """
    grammar = MiniatureGrammar(seed)
    return {
        "train": grammar.sample_corpus(
            np.random.default_rng(seed + 1), 50_000, stem_fraction=0.85, template_tilt=0.6
        ),
        "valid": grammar.sample_corpus(
            np.random.default_rng(seed + 2), 6_000, stem_fraction=0.85, template_tilt=0.6
        ),
        "eval": grammar.sample_corpus(
            np.random.default_rng(seed + 3), 8_000, stem_fraction=0.85, template_tilt=0.6
        ),
        "general": grammar.sample_corpus(
            np.random.default_rng(seed + 4), 200_000, stem_fraction=1.0, template_tilt=0.0
        ),
    }
