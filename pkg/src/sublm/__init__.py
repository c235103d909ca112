"""Subword-based text augmentation toolkit for back-off n-gram LMs.

Pipeline stages: corpus handling, BPE and MDL-driven subword tokenizers,
modified Kneser-Ney back-off models with entropy pruning, EM-tuned model
interpolation, generation-based corpus augmentation, and perplexity/OOV
evaluation.  Trainable pieces follow the scikit-learn estimator API.
"""

__version__ = "0.1.0"

from .bpe import BpeTokenizer, decode
from .corpus import (
    BOS,
    EOS,
    UNK,
    Corpus,
    WordVocabulary,
    build_vocabulary,
    detag_boundaries,
    load_corpus,
    oov_statistics,
    sample_prefix,
    tag_boundaries,
)
from .errors import ContractViolationError, DataFormatError, SublmError
from .evalkit import (
    AlignedPair,
    EvalReport,
    align,
    coverage_report,
    evaluate_model,
    footprint,
    oov_prf,
)
from .genaug import (
    AugmentedCorpusSet,
    GenerationConfig,
    NgramSequenceModel,
    SequenceModel,
    generate_corpus,
    ingest_external_text,
    run_pipeline,
    sample_sentence,
)
from .mix import MixtureWeights, interpolate_static, optimize_weights
from .morfseg import MorfessorSegmenter, MorphLexicon, SegmentationState, model_cost, segment_word
from .ngram import (
    BackoffModel,
    DiscountSet,
    KneserNeyLanguageModel,
    NgramCountTable,
    OrderDiscounts,
    context_probability_sums,
    count_ngrams,
    estimate_discounts,
    estimate_kn_model,
    perplexity,
    prune_to_budget,
    read_arpa,
    sentence_logprob,
    write_arpa,
)

__all__ = [
    "BOS",
    "EOS",
    "UNK",
    "AlignedPair",
    "AugmentedCorpusSet",
    "BackoffModel",
    "BpeTokenizer",
    "ContractViolationError",
    "Corpus",
    "DataFormatError",
    "DiscountSet",
    "EvalReport",
    "GenerationConfig",
    "KneserNeyLanguageModel",
    "MixtureWeights",
    "MorfessorSegmenter",
    "MorphLexicon",
    "NgramCountTable",
    "NgramSequenceModel",
    "OrderDiscounts",
    "SegmentationState",
    "SequenceModel",
    "SublmError",
    "WordVocabulary",
    "align",
    "build_vocabulary",
    "context_probability_sums",
    "count_ngrams",
    "coverage_report",
    "decode",
    "detag_boundaries",
    "estimate_discounts",
    "estimate_kn_model",
    "evaluate_model",
    "footprint",
    "generate_corpus",
    "ingest_external_text",
    "interpolate_static",
    "load_corpus",
    "model_cost",
    "oov_prf",
    "oov_statistics",
    "optimize_weights",
    "perplexity",
    "prune_to_budget",
    "read_arpa",
    "run_pipeline",
    "sample_prefix",
    "sample_sentence",
    "segment_word",
    "sentence_logprob",
    "tag_boundaries",
    "write_arpa",
]
