from __future__ import annotations

import json
from typing import Tuple

import pytest

from bayes_wordseg.corpus import Corpus, SegState, gold_state, parse_corpus, perturb_gold
from bayes_wordseg.errors import EvaluationError, MissingGoldError
from bayes_wordseg.evaluation import (
    REPORT_KEYS,
    boundary_scores,
    evaluate,
    f0,
    format_report,
    format_rows,
    lexicon_scores,
    mean_word_length,
    token_scores,
    top_k_words,
)


@pytest.fixture
def look_at_this() -> Tuple[SegState, Corpus]:
    gold = parse_corpus("look at this\n")
    pred = SegState(gold, [bytes([0, 0, 0, 0, 0, 1, 0, 0, 0])])
    return pred, gold


def test_f0():
    assert f0(0.5, 1 / 3) == pytest.approx(0.4)
    assert f0(1.0, 1.0) == 1.0
    assert f0(0.0, 0.0) == 0.0
    with pytest.raises(ValueError):
        f0(1.5, 0.5)


def test_token_and_lexicon_scores(look_at_this):
    pred, gold = look_at_this
    for scores in (token_scores(pred, gold), lexicon_scores(pred, gold)):
        assert scores == pytest.approx((0.5, 1 / 3, 0.4))


def test_boundary_scores(look_at_this):
    pred, gold = look_at_this
    precision, recall, _ = boundary_scores(pred, gold)
    assert precision == 1.0
    assert recall == 0.5


def test_gold_scores_perfectly(toy_corpus: Corpus):
    report = evaluate(gold_state(toy_corpus), toy_corpus)
    for key in ("P", "R", "F", "BP", "BR", "BF", "LP", "LR", "LF"):
        assert getattr(report, key) == 1.0
    assert report.mean_pred_len == report.mean_gold_len


def test_unsegmented_prediction(toy_corpus: Corpus):
    nothing = SegState(toy_corpus, [bytes(len(u) - 1) for u in toy_corpus.utterances])
    report = evaluate(nothing, toy_corpus)
    assert report.BP == 0.0 and report.BR == 0.0 and report.BF == 0.0
    assert report.pred_tokens == len(toy_corpus)


def test_mismatched_corpus_raises(toy_corpus: Corpus):
    other = parse_corpus("ab cd\n")
    with pytest.raises(EvaluationError):
        evaluate(gold_state(other), toy_corpus)
    with pytest.raises(MissingGoldError):
        evaluate(gold_state(toy_corpus), toy_corpus.without_gold())


def test_more_damage_never_helps_boundary_score(toy_corpus: Corpus):
    previous = 1.0
    gold = gold_state(toy_corpus)
    state = gold.copy()
    positions = [(i, j) for i, u in enumerate(toy_corpus.utterances) for j in range(len(u) - 1)]
    # Flip sites one at a time; each flip is a new error.
    for index, position in positions[:: max(1, len(positions) // 10)]:
        state.boundaries[index][position] ^= 1
        current = boundary_scores(state, toy_corpus)[2]
        assert current <= previous
        previous = current


def test_scores_are_symmetric(toy_corpus: Corpus):
    pred = perturb_gold(toy_corpus, 8, seed=3)
    swapped_gold = pred.to_corpus()
    swapped_pred = SegState(swapped_gold, toy_corpus.gold)
    for scorer in (token_scores, boundary_scores, lexicon_scores):
        p, r, f = scorer(pred, toy_corpus)
        p2, r2, f2 = scorer(swapped_pred, swapped_gold)
        assert (p, r) == pytest.approx((r2, p2))
        assert f == pytest.approx(f2)


def test_top_k_words():
    state = gold_state(parse_corpus("b a b\nc a\n"))
    assert top_k_words(state, 2) == [("a", 2), ("b", 2)]
    assert top_k_words(state, 10) == [("a", 2), ("b", 2), ("c", 1)]
    with pytest.raises(ValueError):
        top_k_words(state, 0)


def test_mean_word_length():
    assert mean_word_length(gold_state(parse_corpus("ab c\ndef\n"))) == pytest.approx(2.0)


def test_format_report(toy_corpus: Corpus):
    report = evaluate(gold_state(toy_corpus), toy_corpus)
    data = json.loads(format_report(report))
    assert set(REPORT_KEYS) <= set(data)
    lines = format_report(report, "TSV").splitlines()
    assert lines[0].split("\t")[:3] == ["P", "R", "F"]
    assert len(lines) == 2
    with pytest.raises(ValueError):
        format_report(report, "xml")


def test_format_rows():
    text = format_rows([{"a": 1, "b": "x"}], ["a", "b"])
    assert text == "a\tb\n1\tx\n"
