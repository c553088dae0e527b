from __future__ import annotations

import math
import string
from collections import Counter, defaultdict

import numpy as np
import pytest

from bayes_wordseg.corpus import gold_state, parse_corpus, random_init, render_corpus, uniform_phoneme_dist
from bayes_wordseg.counts import UTTERANCE_BOUNDARY, counts_rebuild
from bayes_wordseg.errors import GenerationError
from bayes_wordseg.evaluation import evaluate
from bayes_wordseg.generator import GenConfig, gen_bigram, gen_unigram, simulate_bigram, simulate_unigram
from bayes_wordseg.model import ModelParams, bigram_transition
from bayes_wordseg.sampler import AnnealSchedule, run

LETTERS = uniform_phoneme_dist(string.ascii_letters)


def params(**overrides) -> ModelParams:
    values = {"phoneme_dist": uniform_phoneme_dist("abcdefghij"), "alpha0": 20.0, "alpha1": 100.0, "p_hash": 0.5}
    values.update(overrides)
    return ModelParams(**values)


@pytest.mark.parametrize("generate", [gen_unigram, gen_bigram])
def test_generation_is_reproducible(generate):
    cfg = GenConfig(params(), n_utterances=30, seed=12)
    assert generate(cfg) == generate(cfg)
    assert generate(cfg) != generate(GenConfig(params(), n_utterances=30, seed=13))
    assert len(generate(cfg)) == 30


@pytest.mark.parametrize("generate", [gen_unigram, gen_bigram])
def test_rendered_corpus_parses_back(generate):
    corpus = generate(GenConfig(params(), n_utterances=25, seed=3))
    assert parse_corpus(render_corpus(corpus)) == corpus


def test_zero_concentration_repeats_the_first_word():
    corpus = gen_unigram(GenConfig(params(alpha0=0.0), n_utterances=20, seed=1))
    words = {word for line in corpus.gold_words() for word in line}
    assert len(words) == 1


def test_near_certain_stop_spells_single_phonemes():
    corpus = gen_unigram(GenConfig(params(p_hash=0.999999), n_utterances=50, seed=2))
    assert all(len(word) == 1 for line in corpus.gold_words() for word in line)


def test_unigram_tallies_match_rebuilt_counts():
    simulation = simulate_unigram(GenConfig(params(), n_utterances=40, seed=5))
    counts = counts_rebuild(gold_state(simulation.corpus))
    assert counts.n_l == dict(simulation.word_counts)
    assert counts.n_dollar == simulation.final_count == 40
    assert counts.n == sum(simulation.word_counts.values())


def test_bigram_tallies_match_rebuilt_counts():
    simulation = simulate_bigram(GenConfig(params(alpha0=5.0, alpha1=3.0), n_utterances=40, seed=6))
    counts = counts_rebuild(gold_state(simulation.corpus), "bigram")
    assert counts.n_bigram == dict(simulation.bigram_counts)
    assert counts.b == simulation.bigram_types
    assert counts.unigram.n_l == dict(simulation.word_counts)


def test_unigram_type_count_follows_the_chinese_restaurant():
    # A long alphabet and long words make spelling collisions negligible.
    base = params(phoneme_dist=LETTERS, alpha0=5.0, p_hash=0.05)
    gaps = []
    for seed in range(300):
        simulation = simulate_unigram(GenConfig(base, n_utterances=10, p_dollar=0.3, seed=seed))
        tokens = sum(simulation.word_counts.values())
        expected = sum(5.0 / (5.0 + i) for i in range(tokens))
        gaps.append(len(simulation.word_counts) - expected)
    gaps = np.asarray(gaps)
    stderr = gaps.std(ddof=1) / np.sqrt(len(gaps))
    assert abs(gaps.mean()) <= 4 * stderr + 0.05


def test_zero_bigram_concentration_fixes_each_continuation():
    base = params(phoneme_dist=LETTERS, alpha0=1e6, alpha1=0.0)
    simulation = simulate_bigram(GenConfig(base, n_utterances=15, p_dollar=0.9, seed=4))
    continuations = defaultdict(set)
    for prev, word in simulation.bigram_counts:
        continuations[prev].add(word)
    assert all(len(words) == 1 for words in continuations.values())
    assert len(set(simulation.corpus.utterances)) == 1


def test_runaway_utterance_raises():
    with pytest.raises(GenerationError):
        simulate_unigram(GenConfig(params(), n_utterances=1, p_dollar=1e-12, max_words=5, seed=0))


def test_gen_config_validation():
    for kwargs in ({"n_utterances": 0}, {"p_dollar": 1.0}, {"p_dollar": 0.0}, {"max_words": 0}):
        with pytest.raises(ValueError):
            GenConfig(params(), **kwargs)


def test_prior_drawn_utterance_end_probability():
    first = simulate_unigram(GenConfig(params(), n_utterances=5, p_dollar=None, seed=8))
    again = simulate_unigram(GenConfig(params(), n_utterances=5, p_dollar=None, seed=8))
    other = simulate_unigram(GenConfig(params(), n_utterances=5, p_dollar=None, seed=9))
    assert 0.0 < first.p_dollar < 1.0
    assert first.p_dollar == again.p_dollar
    assert first.p_dollar != other.p_dollar


def test_infinite_concentration_is_rejected():
    for name in ("alpha0", "alpha1"):
        with pytest.raises(ValueError):
            GenConfig(params(**{name: math.inf}))


def test_large_concentration_spells_a_new_word_every_time():
    simulation = simulate_unigram(
        GenConfig(params(phoneme_dist=LETTERS, alpha0=1e9, p_hash=0.05), n_utterances=30, seed=7)
    )
    tokens = sum(simulation.word_counts.values())
    assert len(simulation.word_counts) >= 0.95 * tokens


def test_large_bigram_concentration_ignores_the_context():
    base = params(phoneme_dist=LETTERS, alpha0=5.0, alpha1=1e12, p_hash=0.05)
    simulation = simulate_bigram(GenConfig(base, n_utterances=500, p_dollar=0.3, seed=11))
    outgoing = Counter()
    endings = Counter()
    for (prev, word), count in simulation.bigram_counts.items():
        if prev == UTTERANCE_BOUNDARY:
            continue
        outgoing[prev] += count
        if word == UTTERANCE_BOUNDARY:
            endings[prev] += count
    overall = sum(endings.values()) / sum(outgoing.values())
    for prev, total in outgoing.most_common(3):
        stderr = math.sqrt(overall * (1 - overall) / total)
        assert abs(endings[prev] / total - overall) <= 4 * stderr + 0.03


@pytest.mark.slow
def test_transition_frequencies_match_the_final_predictive():
    base = params(alpha0=1e4, alpha1=100.0, p_dollar=0.9)
    simulation = simulate_bigram(GenConfig(base, n_utterances=50_000, p_dollar=0.9, seed=17))
    counts = counts_rebuild(gold_state(simulation.corpus), "bigram")
    assert sum(counts.n_bigram.values()) >= 100_000
    busy = {prev for prev, total in counts.n_first.items() if total >= 10_000}
    assert UTTERANCE_BOUNDARY in busy
    for (prev, word), count in counts.n_bigram.items():
        if prev in busy:
            frequency = count / counts.n_first[prev]
            assert abs(frequency - bigram_transition(counts, prev, word, base)) <= 0.01


@pytest.mark.slow
def test_sampler_recovers_generated_unigram_corpus():
    base = params(phoneme_dist=LETTERS, alpha0=5.0, p_hash=0.3)
    schedule = AnnealSchedule(burn_in=200, total_sampling=200, sample_every=10, gamma_max=5.0, gamma_steps=5)
    gains = []
    for seed in range(5):
        corpus = gen_unigram(GenConfig(base, n_utterances=500, p_dollar=0.3, seed=seed))
        init = random_init(corpus, 0.5, seed=seed)
        output = run(corpus, base, schedule, init, seed=seed, log_every=0)
        gains.append(evaluate(output.final_state, corpus).F - evaluate(init, corpus).F)
    assert sum(gain >= 0.2 for gain in gains) >= 3
