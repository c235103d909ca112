"""Evaluation and reporting: alignment, OOV precision/recall, footprints.

Word error rate against real ASR output is out of scope; per-word
perplexity is the headline comparison metric and every report carries an
explicit ``"wer": null`` field so the numbers cannot be misread.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

from .corpus import BOS, EOS, UNK, Corpus, WordVocabulary, tag_boundaries
from .ngram import BackoffModel, perplexity

#: Byte accounting constants: 4-byte quantized log values plus 4-byte token
#: indices per n-gram position, and a NUL-terminated UTF-8 string table.
_VALUE_BYTES = 4
_INDEX_BYTES = 4


@dataclass(frozen=True)
class AlignedPair:
    """A minimum-edit-distance alignment between reference and hypothesis.

    ``alignment`` is a tuple of ``(op, ref_index, hyp_index)`` triples where
    op is one of ``match``, ``substitute``, ``delete`` (reference token
    dropped) or ``insert`` (hypothesis token added); absent indices are None.
    """

    reference: tuple[str, ...]
    hypothesis: tuple[str, ...]
    alignment: tuple[tuple[str, int | None, int | None], ...]

    @property
    def distance(self) -> int:
        return sum(1 for op, _, _ in self.alignment if op != "match")


def align(reference: Sequence[str], hypothesis: Sequence[str]) -> AlignedPair:
    """Unit-cost Levenshtein alignment.

    Among minimal alignments the traceback prefers match, then substitute,
    then delete, then insert.
    """
    ref = tuple(reference)
    hyp = tuple(hypothesis)
    m, n = len(ref), len(hyp)
    dist = [[0] * (n + 1) for _ in range(m + 1)]
    for i in range(m + 1):
        dist[i][0] = i
    for j in range(n + 1):
        dist[0][j] = j
    for i in range(1, m + 1):
        for j in range(1, n + 1):
            sub = dist[i - 1][j - 1] + (ref[i - 1] != hyp[j - 1])
            dist[i][j] = min(sub, dist[i - 1][j] + 1, dist[i][j - 1] + 1)
    ops: list[tuple[str, int | None, int | None]] = []
    i, j = m, n
    while i > 0 or j > 0:
        if i > 0 and j > 0 and ref[i - 1] == hyp[j - 1] and dist[i][j] == dist[i - 1][j - 1]:
            ops.append(("match", i - 1, j - 1))
            i, j = i - 1, j - 1
        elif i > 0 and j > 0 and dist[i][j] == dist[i - 1][j - 1] + 1:
            ops.append(("substitute", i - 1, j - 1))
            i, j = i - 1, j - 1
        elif i > 0 and dist[i][j] == dist[i - 1][j] + 1:
            ops.append(("delete", i - 1, None))
            i -= 1
        else:
            ops.append(("insert", None, j - 1))
            j -= 1
    ops.reverse()
    return AlignedPair(ref, hyp, tuple(ops))


@dataclass(frozen=True)
class OovPrf:
    precision: float
    recall: float
    f1: float
    true_positives: int
    reference_oov: int
    hypothesis_oov: int
    precision_defined: bool
    recall_defined: bool


def oov_prf(pairs: Sequence[AlignedPair], training_vocab: WordVocabulary) -> OovPrf:
    """Precision/recall/F1 of out-of-vocabulary word recognition.

    An OOV token is one absent from the training vocabulary; a true positive
    is an aligned exact match on such a token.  Undefined denominators yield
    0 with the corresponding flag cleared.
    """
    tp = 0
    ref_oov = 0
    hyp_oov = 0
    for pair in pairs:
        ref_oov += sum(1 for t in pair.reference if t not in training_vocab)
        hyp_oov += sum(1 for t in pair.hypothesis if t not in training_vocab)
        for op, ri, _ in pair.alignment:
            if op == "match" and pair.reference[ri] not in training_vocab:
                tp += 1
    precision = tp / hyp_oov if hyp_oov else 0.0
    recall = tp / ref_oov if ref_oov else 0.0
    f1 = 2 * precision * recall / (precision + recall) if tp else 0.0
    return OovPrf(
        precision,
        recall,
        f1,
        tp,
        ref_oov,
        hyp_oov,
        precision_defined=hyp_oov > 0,
        recall_defined=ref_oov > 0,
    )


def _model_inventory(model: BackoffModel) -> frozenset:
    return model.vocabulary - {BOS, EOS, UNK}


@dataclass(frozen=True)
class CoverageReport:
    oov_rate: float
    inventory_size: int


def coverage_report(
    model: BackoffModel, tokenizer, test: Corpus
) -> CoverageReport:
    """Out-of-vocabulary coverage of a test corpus.

    Word models (``tokenizer is None``): fraction of test tokens outside the
    model vocabulary.  Subword models: fraction of test words whose tagged
    segmentation contains any unit outside the model vocabulary.
    """
    inventory = _model_inventory(model)
    total = 0
    oov = 0
    for sent in test:
        for word in sent:
            total += 1
            if tokenizer is None:
                oov += word not in inventory
            else:
                tagged = tag_boundaries([(word, tokenizer.segment_word(word))])
                oov += any(t not in inventory for t in tagged)
    if total == 0:
        raise ValueError("empty evaluation set")
    return CoverageReport(oov / total, len(inventory))


def footprint(model: BackoffModel) -> int:
    """Deterministic byte accounting of the serialized model.

    Per n-gram entry: 4 bytes of log probability, 4 bytes per token index,
    and 4 bytes of back-off weight where one is stored; plus a string table
    of NUL-terminated UTF-8 vocabulary entries.
    """
    total = 0
    for n in range(1, model.order + 1):
        for ngram, ent in model.tables[n - 1].items():
            total += _VALUE_BYTES + _INDEX_BYTES * n
            if ent[1] is not None:
                total += _VALUE_BYTES
    for word in model.vocabulary:
        total += len(word.encode("utf-8")) + 1
    return total


@dataclass
class EvalReport:
    """Per-model evaluation summary serialized into the pipeline reports."""

    model_id: str
    perplexity_per_word: float
    oov_rate: float
    token_inventory_size: int
    footprint_bytes: int
    oov_precision: float | None = None
    oov_recall: float | None = None
    oov_f1: float | None = None
    mixture_weights: list[float] | None = None
    wer: None = None
    notes: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        for name in ("oov_rate", "oov_precision", "oov_recall", "oov_f1"):
            value = getattr(self, name)
            if value is not None and not 0.0 <= value <= 1.0:
                raise ValueError(f"{name}={value} outside [0, 1]")

    def to_dict(self) -> dict:
        return {
            "model_id": self.model_id,
            "perplexity_per_word": self.perplexity_per_word,
            "oov_rate": self.oov_rate,
            "token_inventory_size": self.token_inventory_size,
            "footprint_bytes": self.footprint_bytes,
            "oov_precision": self.oov_precision,
            "oov_recall": self.oov_recall,
            "oov_f1": self.oov_f1,
            "mixture_weights": self.mixture_weights,
            "wer": self.wer,
            "notes": self.notes,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, indent=2)


def evaluate_model(
    model: BackoffModel,
    test: Corpus,
    model_id: str = "model",
    tokenizer=None,
    training_vocab: WordVocabulary | None = None,
    hypotheses: Corpus | None = None,
) -> EvalReport:
    """Assemble the full report for one model against a word-level test set.

    For subword models the test corpus is segmented with the tokenizer
    before scoring; perplexity is always reported per source word so word
    and subword models are comparable.
    """
    if tokenizer is None:
        scored = test
    else:
        scored = Corpus.from_sentences(tokenizer.transform(test), subword_input=True)
    ppl = perplexity(model, scored, normalization="per-word")
    coverage = coverage_report(model, tokenizer, test)
    report = EvalReport(
        model_id=model_id,
        perplexity_per_word=ppl,
        oov_rate=coverage.oov_rate,
        token_inventory_size=coverage.inventory_size,
        footprint_bytes=footprint(model),
        mixture_weights=model.metadata.get("mixture_weights"),
    )
    if hypotheses is not None and training_vocab is not None:
        if len(hypotheses) != len(test):
            raise ValueError(
                f"hypothesis count {len(hypotheses)} != reference count {len(test)}"
            )
        pairs = [align(ref, hyp) for ref, hyp in zip(test, hypotheses)]
        prf = oov_prf(pairs, training_vocab)
        report.oov_precision = prf.precision
        report.oov_recall = prf.recall
        report.oov_f1 = prf.f1
    return report
