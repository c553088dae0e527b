"""Token, boundary and lexicon scores of a predicted segmentation against gold."""
from __future__ import annotations

import csv
import io
import json
from collections import Counter
from dataclasses import asdict, dataclass
from typing import Any, Dict, Iterable, List, Mapping, Sequence, Set, Tuple, Union

import numpy as np

from .corpus import Corpus, SegState, split_words
from .errors import EvaluationError

REPORT_KEYS = ("P", "R", "F", "BP", "BR", "BF", "LP", "LR", "LF", "mean_pred_len", "mean_gold_len")


@dataclass(frozen=True, slots=True)
class EvalReport:
    P: float
    R: float
    F: float
    BP: float
    BR: float
    BF: float
    LP: float
    LR: float
    LF: float
    mean_pred_len: float
    mean_gold_len: float
    pred_tokens: int
    gold_tokens: int

    def to_dict(self) -> Dict[str, Union[float, int]]:
        return asdict(self)


def f0(p: float, r: float) -> float:
    """2pr / (p + r), or 0 when both are 0."""

    if not (0.0 <= p <= 1.0 and 0.0 <= r <= 1.0):
        raise ValueError(f"Precision and recall must lie in [0, 1], received {p}, {r}")
    total = p + r
    return 0.0 if total == 0 else 2.0 * p * r / total


def _ratio(hits: int, total: int) -> float:
    return hits / total if total else 0.0


def _scores(hits: int, predicted: int, gold: int) -> Tuple[float, float, float]:
    precision = _ratio(hits, predicted)
    recall = _ratio(hits, gold)
    return precision, recall, f0(precision, recall)


def _gold_bits(pred: SegState, gold: Corpus) -> Tuple[bytes, ...]:
    if pred.corpus.utterances != gold.utterances:
        raise EvaluationError("Prediction and gold do not cover the same utterances")
    return gold.require_gold()


def _spans(bits: Sequence[int], length: int) -> Set[Tuple[int, int]]:
    spans: Set[Tuple[int, int]] = set()
    start = 0
    for position, bit in enumerate(bits):
        if bit:
            spans.add((start, position + 1))
            start = position + 1
    spans.add((start, length))
    return spans


def token_scores(pred: SegState, gold: Corpus) -> Tuple[float, float, float]:
    """A predicted token is correct when both of its edges match a gold token."""

    gold_bits = _gold_bits(pred, gold)
    hits = predicted = expected = 0
    for utterance, pred_bits, true_bits in zip(gold.utterances, pred.boundaries, gold_bits):
        pred_spans = _spans(pred_bits, len(utterance))
        true_spans = _spans(true_bits, len(utterance))
        hits += len(pred_spans & true_spans)
        predicted += len(pred_spans)
        expected += len(true_spans)
    return _scores(hits, predicted, expected)


def boundary_scores(pred: SegState, gold: Corpus) -> Tuple[float, float, float]:
    """Scores over utterance-internal positions; utterance edges are given, not inferred."""

    gold_bits = _gold_bits(pred, gold)
    predicted = pred.flat_bits().astype(bool)
    expected = np.frombuffer(b"".join(gold_bits), dtype=np.uint8).astype(bool)
    hits = int(np.count_nonzero(predicted & expected))
    return _scores(hits, int(predicted.sum()), int(expected.sum()))


def lexicon_scores(pred: SegState, gold: Corpus) -> Tuple[float, float, float]:
    gold_bits = _gold_bits(pred, gold)
    pred_types = {word for words in pred.iter_words() for word in words}
    gold_types = {
        word for utterance, bits in zip(gold.utterances, gold_bits) for word in split_words(utterance, bits)
    }
    return _scores(len(pred_types & gold_types), len(pred_types), len(gold_types))


def top_k_words(state: SegState, k: int) -> List[Tuple[str, int]]:
    """Most frequent words, ties broken lexicographically."""

    if k < 1:
        raise ValueError("k must be at least 1")
    frequencies = Counter(word for words in state.iter_words() for word in words)
    return sorted(frequencies.items(), key=lambda item: (-item[1], item[0]))[:k]


def mean_word_length(state: SegState) -> float:
    tokens = state.token_count
    return state.corpus.num_phonemes / tokens if tokens else 0.0


def evaluate(pred: SegState, gold: Corpus) -> EvalReport:
    P, R, F = token_scores(pred, gold)
    BP, BR, BF = boundary_scores(pred, gold)
    LP, LR, LF = lexicon_scores(pred, gold)
    truth = SegState(gold, gold.require_gold())
    return EvalReport(
        P=P,
        R=R,
        F=F,
        BP=BP,
        BR=BR,
        BF=BF,
        LP=LP,
        LR=LR,
        LF=LF,
        mean_pred_len=mean_word_length(pred),
        mean_gold_len=mean_word_length(truth),
        pred_tokens=pred.token_count,
        gold_tokens=truth.token_count,
    )


def format_rows(rows: Iterable[Mapping[str, Any]], columns: Sequence[str]) -> str:
    """Render rows as tab-separated text with a header line."""

    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=list(columns), delimiter="\t", lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buffer.getvalue()


def format_report(report: EvalReport, output_format: str = "json") -> str:
    fmt = output_format.lower()
    data = report.to_dict()
    if fmt == "json":
        return json.dumps(data, indent=2) + "\n"
    if fmt == "tsv":
        return format_rows([data], list(data))
    raise ValueError(f"Unsupported output format '{output_format}'. Available formats: json, tsv")


__all__ = [
    "EvalReport",
    "REPORT_KEYS",
    "boundary_scores",
    "evaluate",
    "f0",
    "format_report",
    "format_rows",
    "lexicon_scores",
    "mean_word_length",
    "token_scores",
    "top_k_words",
]
