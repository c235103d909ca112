"""Generation-based corpus augmentation and the end-to-end pipelines.

A sequence model exposes a normalized next-token distribution over a
declared inventory (ending in ``</s>``); sentences are sampled from prefix
prompts with per-sentence temperatures drawn from a configured range.  The
n-gram-backed sampler makes the whole pipeline runnable without any neural
component; an externally generated text file can fill the same role through
:func:`ingest_external_text`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol, Sequence, runtime_checkable

import numpy as np

from .bpe import BpeTokenizer
from .corpus import (
    BOS,
    EOS,
    UNK,
    Corpus,
    build_vocabulary,
    load_corpus,
    sample_prefix,
)
from .errors import ContractViolationError
from .mix import MixtureWeights, interpolate_static, optimize_weights
from .morfseg import MorfessorSegmenter
from .ngram import (
    BackoffModel,
    count_ngrams,
    estimate_discounts,
    estimate_kn_model,
    prune_to_budget,
)
from .validation import check_rng

PIPELINE_MODES = ("word", "subword-bpe", "subword-morfessor")


@dataclass(frozen=True)
class GenerationConfig:
    """Controls for augmentation-text generation."""

    target_token_count: int
    prefix_len_min: int = 1
    prefix_len_max: int = 7
    temperature_min: float = 1.0
    temperature_max: float = 1.5
    max_tokens_per_sentence: int = 64
    seed: int = 0

    def __post_init__(self) -> None:
        if not 1 <= self.prefix_len_min <= self.prefix_len_max:
            raise ValueError(
                f"need 1 <= prefix_len_min <= prefix_len_max, got "
                f"{self.prefix_len_min}..{self.prefix_len_max}"
            )
        if not 0 < self.temperature_min <= self.temperature_max:
            raise ValueError(
                f"need 0 < temperature_min <= temperature_max, got "
                f"{self.temperature_min}..{self.temperature_max}"
            )
        if self.max_tokens_per_sentence < 1:
            raise ValueError("max_tokens_per_sentence must be >= 1")

    def to_dict(self) -> dict:
        return {
            "target_token_count": self.target_token_count,
            "prefix_len_min": self.prefix_len_min,
            "prefix_len_max": self.prefix_len_max,
            "temperature_min": self.temperature_min,
            "temperature_max": self.temperature_max,
            "max_tokens_per_sentence": self.max_tokens_per_sentence,
            "seed": self.seed,
        }


@runtime_checkable
class SequenceModel(Protocol):
    """Contract for pluggable sentence generators."""

    inventory: tuple[str, ...]

    def next_token_distribution(self, context: Sequence[str]) -> np.ndarray:
        """Probability vector over ``inventory`` (non-negative, sums to 1)."""
        ...


class NgramSequenceModel:
    """Back-off model adapter satisfying the :class:`SequenceModel` contract.

    The inventory is the model vocabulary minus ``<s>`` and ``<unk>`` (the
    reserved symbols may never be emitted into a corpus); the back-off chain
    distribution is renormalized over it.
    """

    def __init__(self, model: BackoffModel):
        self.model = model
        self.inventory = tuple(sorted(model.vocabulary - {BOS, UNK}))
        self._index = {tok: i for i, tok in enumerate(self.inventory)}
        self._base = np.array(
            [10.0 ** model.tables[0][(tok,)][0] for tok in self.inventory]
        )
        # Per-context back-off multipliers and stored continuations.
        self._bows: dict[tuple, float] = {}
        self._continuations: dict[tuple, tuple[np.ndarray, np.ndarray]] = {}
        for n in range(1, model.order):
            for ngram, ent in model.tables[n - 1].items():
                if ent[1] is not None:
                    self._bows[ngram] = 10.0 ** ent[1]
        for n in range(2, model.order + 1):
            grouped: dict[tuple, list] = {}
            for ngram, ent in model.tables[n - 1].items():
                idx = self._index.get(ngram[-1])
                if idx is not None:
                    grouped.setdefault(ngram[:-1], []).append((idx, 10.0 ** ent[0]))
            for h, pairs in grouped.items():
                idxs = np.array([i for i, _ in pairs], dtype=np.int64)
                probs = np.array([p for _, p in pairs])
                self._continuations[h] = (idxs, probs)

    def next_token_distribution(self, context: Sequence[str]) -> np.ndarray:
        model = self.model
        h = tuple(model.map_token(t) for t in context[-(model.order - 1):]) if model.order > 1 else ()
        dist = self._base.copy()
        for k in range(1, len(h) + 1):
            suffix = h[-k:]
            cont = self._continuations.get(suffix)
            bow = self._bows.get(suffix)
            if cont is None and bow is None:
                continue
            dist *= bow if bow is not None else 1.0
            if cont is not None:
                dist[cont[0]] = cont[1]
        return dist / dist.sum()


def sample_sentence(
    model: SequenceModel,
    prefix: Sequence[str],
    temperature: float,
    max_tokens: int,
    rng: np.random.Generator,
) -> list[str]:
    """Extend a prefix by temperature sampling until ``</s>`` or the cap.

    The sampled distribution is ``p ** (1/T)`` renormalized; capped
    sentences are kept.  Raises :class:`ContractViolationError` when the
    model's distribution is unnormalized.
    """
    if temperature <= 0:
        raise ValueError(f"temperature must be positive, got {temperature}")
    tokens = list(prefix[:max_tokens])
    inventory = model.inventory
    while len(tokens) < max_tokens:
        probs = np.asarray(model.next_token_distribution(tokens), dtype=np.float64)
        if probs.min() < 0 or abs(probs.sum() - 1.0) > 1e-6:
            raise ContractViolationError(
                f"sequence model returned an unnormalized distribution "
                f"(sum={probs.sum()!r}, min={probs.min()!r})"
            )
        if temperature != 1.0:
            probs = probs ** (1.0 / temperature)
            probs /= probs.sum()
        idx = int(np.searchsorted(np.cumsum(probs), rng.random(), side="right"))
        token = inventory[min(idx, len(inventory) - 1)]
        if token == EOS:
            break
        tokens.append(token)
    return tokens


@dataclass(frozen=True)
class AugmentedCorpusSet:
    """A generated corpus plus the provenance needed to reproduce it."""

    generated: Corpus
    provenance: str  # "internal-sampler" | "external-file"
    config: GenerationConfig | None = None

    def __post_init__(self) -> None:
        if self.config is not None:
            cap = self.config.max_tokens_per_sentence
            for sent in self.generated:
                if len(sent) > cap:
                    raise ContractViolationError(
                        f"generated sentence of length {len(sent)} exceeds cap {cap}"
                    )


def generate_corpus(
    model: SequenceModel, source: Corpus, config: GenerationConfig
) -> AugmentedCorpusSet:
    """Sample sentences from prefix prompts until the token target is met."""
    if config.target_token_count <= 0:
        raise ValueError(
            f"target_token_count must be positive, got {config.target_token_count}"
        )
    if len(source) == 0:
        raise ValueError("prefix source corpus is empty")
    rng = check_rng(config.seed)
    sentences = []
    emitted = 0
    while emitted < config.target_token_count:
        prefix = sample_prefix(source, rng, config.prefix_len_min, config.prefix_len_max)
        temperature = float(
            rng.uniform(config.temperature_min, config.temperature_max)
        )
        sent = sample_sentence(
            model, prefix, temperature, config.max_tokens_per_sentence, rng
        )
        if not sent:
            continue
        sentences.append(sent)
        emitted += len(sent)
    corpus = Corpus.from_sentences(sentences)
    return AugmentedCorpusSet(corpus, "internal-sampler", config)


def ingest_external_text(path: str | Path, subword_input: bool = False) -> AugmentedCorpusSet:
    """Load and validate an externally generated corpus file.

    No normalization is applied: the producing component is responsible for
    emitting already-normalized text in the shared corpus format.
    """
    corpus = load_corpus(path, normalization="none", subword_input=subword_input)
    return AugmentedCorpusSet(corpus, "external-file", None)


# ---------------------------------------------------------------------------
# End-to-end augmentation pipelines


@dataclass
class PipelineResult:
    """Models and metadata produced by one augmentation pipeline run."""

    mode: str
    bnlm: BackoffModel
    tr_bnlm: BackoffModel
    mixed: BackoffModel
    weights: MixtureWeights
    tokenizer: object | None = None
    vocabulary: object | None = None
    info: dict = field(default_factory=dict)


def _fit_backoff(corpus: Corpus, order: int, vocab) -> BackoffModel:
    counts = count_ngrams(corpus, order, vocab)
    return estimate_kn_model(counts, estimate_discounts(counts))


def _tagged_units(units) -> frozenset:
    from .corpus import CONTINUATION_PREFIX

    units = frozenset(units)
    return units | {CONTINUATION_PREFIX + u for u in units}


def segmenter_inventory_units(tokenizer) -> frozenset:
    """All subword units a fitted tokenizer can emit (untagged forms)."""
    if isinstance(tokenizer, BpeTokenizer):
        return tokenizer.inventory_units()
    if isinstance(tokenizer, MorfessorSegmenter):
        lexicon = tokenizer.lexicon_
        chars = {ch for m in lexicon.morphs for ch in m}
        return frozenset(lexicon.morphs) | frozenset(chars)
    raise TypeError(f"unsupported tokenizer {type(tokenizer).__name__}")


def run_pipeline(
    in_domain: Corpus,
    generated: AugmentedCorpusSet | Corpus,
    mode: str,
    tuning: Corpus,
    order: int = 4,
    vocab_cap: int | None = None,
    budget_bytes: int | None = None,
    bpe_inventory: int = 2000,
    morfessor_corpus_weight: float = 1.0,
    seed: int = 0,
) -> PipelineResult:
    """Train, augment and interpolate per the word or subword recipe.

    Word mode trains the in-domain model and the generated-text model over
    the shared (optionally capped) in-domain vocabulary and interpolates
    them.  Subword modes first train the tokenizer on the in-domain corpus
    only, segment and boundary-tag both corpora, and train the models over
    the full tagged tokenizer inventory.  When a byte budget is given every
    output model is entropy-pruned to it after interpolation.
    """
    if mode not in PIPELINE_MODES:
        raise ValueError(f"unknown mode {mode!r}; expected one of {PIPELINE_MODES}")
    gen_corpus = generated.generated if isinstance(generated, AugmentedCorpusSet) else generated
    for name, corpus in (("in_domain", in_domain), ("generated", gen_corpus), ("tuning", tuning)):
        if len(corpus) == 0:
            raise ValueError(f"{name} corpus is empty")

    tokenizer = None
    info: dict = {"mode": mode, "order": order}
    if mode == "word":
        vocabulary = build_vocabulary(in_domain, vocab_cap)
        train_in, train_gen, tune = in_domain, gen_corpus, tuning
        vocab_tokens = vocabulary
        info["vocabulary_size"] = len(vocabulary)
    else:
        if mode == "subword-bpe":
            tokenizer = BpeTokenizer(inventory_size=bpe_inventory).fit(in_domain)
            info["tokenizer_inventory"] = tokenizer.inventory_
        else:
            tokenizer = MorfessorSegmenter(
                corpus_weight=morfessor_corpus_weight, random_state=seed
            ).fit(in_domain)
            info["tokenizer_inventory"] = len(
                segmenter_inventory_units(tokenizer)
            )
        train_in = Corpus.from_sentences(tokenizer.transform(in_domain), subword_input=True)
        train_gen = Corpus.from_sentences(tokenizer.transform(gen_corpus), subword_input=True)
        tune = Corpus.from_sentences(tokenizer.transform(tuning), subword_input=True)
        vocab_tokens = _tagged_units(segmenter_inventory_units(tokenizer))
        info["vocabulary_size"] = len(vocab_tokens)

    bnlm = _fit_backoff(train_in, order, vocab_tokens)
    tr_bnlm = _fit_backoff(train_gen, order, vocab_tokens)
    weights = optimize_weights([bnlm, tr_bnlm], tune)
    mixed = interpolate_static([bnlm, tr_bnlm], weights)

    if budget_bytes is not None:
        bnlm = prune_to_budget(bnlm, budget_bytes)
        tr_bnlm = prune_to_budget(tr_bnlm, budget_bytes)
        mixed = prune_to_budget(mixed, budget_bytes)
        info["budget_bytes"] = budget_bytes

    vocabulary = vocab_tokens if mode == "word" else None
    return PipelineResult(
        mode=mode,
        bnlm=bnlm,
        tr_bnlm=tr_bnlm,
        mixed=mixed,
        weights=weights,
        tokenizer=tokenizer,
        vocabulary=vocabulary,
        info=info,
    )
