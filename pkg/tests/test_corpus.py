from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest
from scipy.stats import norm

from bayes_wordseg.corpus import (
    Corpus,
    PhonemeDist,
    SegState,
    corpus_stats,
    empirical_phoneme_dist,
    gold_state,
    load_corpus,
    parse_corpus,
    perturb_gold,
    random_init,
    render_corpus,
    split_words,
    uniform_phoneme_dist,
    validate_phoneme,
)
from bayes_wordseg.errors import CorpusError, CorpusParseError, MissingGoldError


def test_parse_marks_gold_boundaries():
    corpus = parse_corpus("yu want tu si D6 bUk\n")
    assert corpus.utterances == ("yuwanttusiD6bUk",)
    bits = corpus.gold[0]
    assert len(bits) == 14
    assert [i for i, bit in enumerate(bits) if bit] == [1, 5, 7, 9, 11]


def test_fixture_round_trips(toy_corpus_path: Path):
    text = toy_corpus_path.read_text()
    assert render_corpus(parse_corpus(text)) == text


def test_trailing_whitespace_is_ignored():
    corpus = parse_corpus("ab cd \t\r\nef\n")
    assert corpus.utterances == ("abcd", "ef")


@pytest.mark.parametrize(
    "text, line",
    [
        ("ab\n\ncd\n", 2),
        ("ab  cd\n", 1),
        ("ab\nc\td\n", 2),
        ("ab\ncé\n", 2),
    ],
)
def test_parse_errors_report_line(text: str, line: int):
    with pytest.raises(CorpusParseError) as exc:
        parse_corpus(text)
    assert exc.value.line_number == line
    assert str(exc.value).startswith(f"line {line}:")


def test_empty_text_is_rejected():
    with pytest.raises(CorpusParseError):
        parse_corpus("")


def test_validate_phoneme():
    assert validate_phoneme("D") == "D"
    for bad in ("", "ab", " ", "\t"):
        with pytest.raises(CorpusError):
            validate_phoneme(bad)


def test_split_words():
    assert split_words("lookatthis", [0, 0, 0, 1, 0, 1, 0, 0, 0]) == ["look", "at", "this"]
    assert split_words("a", []) == ["a"]


def test_load_corpus_slice_and_missing(tmp_path: Path, toy_corpus_path: Path):
    corpus = load_corpus(toy_corpus_path, slice_size=3)
    assert len(corpus) == 3
    assert len(load_corpus(toy_corpus_path)) == 10
    with pytest.raises(FileNotFoundError):
        load_corpus(tmp_path / "missing.txt")


def test_corpus_stats():
    stats = corpus_stats(parse_corpus("ab ab\ncd\n"))
    assert stats.utterances == 2
    assert stats.tokens == 3
    assert stats.types == 2
    assert stats.phonemes == 6
    assert stats.alphabet_size == 4
    assert stats.sites == 4
    assert stats.words_per_utterance == pytest.approx(1.5)
    assert stats.phonemes_per_word == pytest.approx(2.0)
    assert stats.to_dict()["types"] == 2


def test_gold_required():
    corpus = parse_corpus("ab cd\n").without_gold()
    with pytest.raises(MissingGoldError):
        gold_state(corpus)


def test_empirical_phoneme_dist():
    dist = empirical_phoneme_dist(parse_corpus("ab ab\ncd\n"))
    assert dist["a"] == pytest.approx(2 / 6)
    assert dist["d"] == pytest.approx(1 / 6)
    assert sum(dist.probabilities.values()) == pytest.approx(1.0)


def test_phoneme_dist_validation():
    assert uniform_phoneme_dist("ba")["a"] == 0.5
    with pytest.raises(CorpusError):
        PhonemeDist({"a": 0.5, "b": 0.4})
    with pytest.raises(CorpusError):
        PhonemeDist({"a": 1.0, "b": 0.0})


def test_random_init_is_deterministic(toy_corpus: Corpus):
    first = random_init(toy_corpus, 0.5, seed=7)
    assert first == random_init(toy_corpus, 0.5, seed=7)
    everything = random_init(toy_corpus, 1.0, seed=7)
    assert everything.token_count == toy_corpus.num_phonemes
    nothing = random_init(toy_corpus, 0.0, seed=7)
    assert nothing.token_count == len(toy_corpus)
    with pytest.raises(ValueError):
        random_init(toy_corpus, 1.5)


def test_perturb_gold(toy_corpus: Corpus):
    gold = gold_state(toy_corpus)
    assert perturb_gold(toy_corpus, 0, seed=1) == gold
    assert perturb_gold(toy_corpus, 1, seed=1).hamming(gold) == 1
    assert perturb_gold(toy_corpus, 25, seed=4) == perturb_gold(toy_corpus, 25, seed=4)
    with pytest.raises(ValueError):
        perturb_gold(toy_corpus, -1)


def test_heavy_perturbation_looks_like_random_init():
    corpus = parse_corpus("ab ab\nb a\naa bb\n")
    gold = gold_state(corpus)
    sites = corpus.num_sites
    seeds = range(100)
    perturbed = sum(sites - perturb_gold(corpus, 2 * sites, seed=seed).hamming(gold) for seed in seeds)
    fresh = sum(sites - random_init(corpus, 0.5, seed=seed + 1000).hamming(gold) for seed in seeds)
    trials = sites * len(seeds)
    pooled = (perturbed + fresh) / (2 * trials)
    z = (perturbed - fresh) / trials / np.sqrt(pooled * (1 - pooled) * 2 / trials)
    assert 2 * norm.sf(abs(z)) > 0.01


def test_seg_state_round_trips(toy_corpus: Corpus):
    state = random_init(toy_corpus, 0.3, seed=2)
    assert SegState.from_snapshot(toy_corpus, state.snapshot()) == state
    as_corpus = state.to_corpus()
    assert gold_state(as_corpus).render() == state.render()
    assert state.token_count == sum(len(words) for words in state.iter_words())
    with pytest.raises(CorpusError):
        SegState(toy_corpus, state.snapshot()[:-1])


def test_head_keeps_gold(toy_corpus: Corpus):
    head = toy_corpus.head(2)
    assert head.utterances == toy_corpus.utterances[:2]
    assert head.gold == toy_corpus.gold[:2]
    assert toy_corpus.head(None) is toy_corpus
