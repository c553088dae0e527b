from __future__ import annotations

import random
from typing import List, Tuple

import numpy as np
import pytest

from bayes_wordseg.corpus import Corpus, SegState, empirical_phoneme_dist, gold_state, parse_corpus, random_init
from bayes_wordseg.counts import UTTERANCE_BOUNDARY, BigramCounts, UnigramCounts, counts_rebuild
from bayes_wordseg.errors import CountInvariantError
from bayes_wordseg.model import ModelParams
from bayes_wordseg.sampler import gibbs_sweep


def test_unigram_rebuild_by_hand():
    counts = counts_rebuild(gold_state(parse_corpus("ab ab\n")))
    assert counts.n == 2
    assert counts.n_l == {"ab": 2}
    assert counts.n_dollar == 1


def test_empty_corpus_has_zero_counts():
    empty = SegState(Corpus(()), [])
    assert counts_rebuild(empty) == UnigramCounts()
    assert counts_rebuild(empty, "bigram") == BigramCounts()


def test_bigram_rebuild_by_hand():
    counts = counts_rebuild(gold_state(parse_corpus("ab cd\nab\n")), "bigram")
    assert counts.n_bigram == {
        (UTTERANCE_BOUNDARY, "ab"): 2,
        ("ab", "cd"): 1,
        ("cd", UTTERANCE_BOUNDARY): 1,
        ("ab", UTTERANCE_BOUNDARY): 1,
    }
    assert counts.b == 4
    assert counts.b_l == {"ab": 1, "cd": 1, UTTERANCE_BOUNDARY: 2}
    assert counts.n_first == {UTTERANCE_BOUNDARY: 2, "ab": 2, "cd": 1}
    assert counts.unigram.n_l == {"ab": 2, "cd": 1}
    counts.check()


def test_removing_absent_word_raises():
    counts = UnigramCounts()
    with pytest.raises(CountInvariantError):
        counts.remove("ab", False)
    bigrams = BigramCounts()
    with pytest.raises(CountInvariantError):
        bigrams.remove_bigram("ab", "cd")


def test_bigram_type_disappears_with_last_token():
    counts = BigramCounts()
    counts.add_bigram("a", "b")
    counts.add_bigram("a", "b")
    counts.remove_bigram("a", "b")
    assert counts.b == 1 and counts.types_ending("b") == 1
    counts.remove_bigram("a", "b")
    assert counts == BigramCounts()


def test_copy_is_independent():
    counts = counts_rebuild(gold_state(parse_corpus("ab cd\n")), "bigram")
    clone = counts.copy()
    clone.add_span(UTTERANCE_BOUNDARY, ["ef"], UTTERANCE_BOUNDARY, True)
    assert clone != counts
    assert counts == counts_rebuild(gold_state(parse_corpus("ab cd\n")), "bigram")


@pytest.mark.parametrize("model", ["unigram", "bigram"])
def test_randomised_operations_keep_counts_consistent(toy_corpus: Corpus, model: str):
    params = ModelParams(phoneme_dist=empirical_phoneme_dist(toy_corpus), alpha0=20.0, p_hash=0.5)
    state = random_init(toy_corpus, 0.5, seed=11)
    counts = counts_rebuild(state, model)
    chooser = random.Random(5)
    rng = np.random.default_rng(5)
    vocabulary = ["yu", "want", "D6", "b7", "lUk", "It", "6"]
    pending: List[Tuple[List[str], bool]] = []

    def undo_pending() -> None:
        while pending:
            words, final = pending.pop()
            if model == "bigram":
                counts.remove_span(UTTERANCE_BOUNDARY, words, UTTERANCE_BOUNDARY, final)
            else:
                counts.remove_span(words, final)

    for _ in range(10_000):
        roll = chooser.random()
        if roll < 0.48:
            words = chooser.choices(vocabulary, k=chooser.randint(1, 3))
            final = chooser.random() < 0.5
            if model == "bigram":
                counts.add_span(UTTERANCE_BOUNDARY, words, UTTERANCE_BOUNDARY, final)
            else:
                counts.add_span(words, final)
            pending.append((words, final))
        elif roll < 0.96:
            if pending:
                index = chooser.randrange(len(pending))
                pending[index], pending[-1] = pending[-1], pending[index]
                words, final = pending.pop()
                if model == "bigram":
                    counts.remove_span(UTTERANCE_BOUNDARY, words, UTTERANCE_BOUNDARY, final)
                else:
                    counts.remove_span(words, final)
        else:
            undo_pending()
            gibbs_sweep(state, counts, params, 1.0, rng)
            assert counts == counts_rebuild(state, model)
        counts.check()

    undo_pending()
    assert counts == counts_rebuild(state, model)
