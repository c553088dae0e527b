"""Forward simulation of the unigram and bigram generative processes.

The simulators keep their own tallies and draw every decision directly from the
generative story; they only share ``ModelParams`` with the sampler.
"""
from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from .corpus import Corpus
from .counts import UTTERANCE_BOUNDARY
from .errors import GenerationError
from .model import ModelParams

logger = logging.getLogger(__name__)

DEFAULT_GEN_P_DOLLAR = 0.3


@dataclass(frozen=True, slots=True)
class GenConfig:
    """Settings of one synthetic corpus.

    ``p_dollar=None`` draws the utterance-end probability once per corpus from
    Beta(rho/2, rho/2).
    """

    params: ModelParams
    n_utterances: int = 100
    p_dollar: Optional[float] = DEFAULT_GEN_P_DOLLAR
    seed: int = 0
    max_words: int = 10_000

    def __post_init__(self) -> None:
        if self.n_utterances < 1:
            raise ValueError("n_utterances must be at least 1")
        if self.p_dollar is not None and not 0.0 < self.p_dollar < 1.0:
            raise ValueError(f"p_dollar must lie strictly between 0 and 1, received {self.p_dollar}")
        if self.max_words < 1:
            raise ValueError("max_words must be at least 1")


@dataclass(slots=True)
class Simulation:
    """A generated corpus together with the simulator's final tallies."""

    corpus: Corpus
    p_dollar: float
    word_counts: Counter = field(default_factory=Counter)
    final_count: int = 0
    bigram_counts: Counter = field(default_factory=Counter)
    bigram_types: int = 0


class _Speller:
    """Spells novel words phoneme by phoneme, stopping with probability p#."""

    def __init__(self, params: ModelParams, rng: np.random.Generator) -> None:
        probabilities = params.phoneme_dist.probabilities
        self._symbols = sorted(probabilities)
        self._cumulative = np.cumsum([probabilities[s] for s in self._symbols])
        self._p_hash = params.p_hash
        self._rng = rng

    def phoneme(self) -> str:
        index = int(np.searchsorted(self._cumulative, self._rng.random() * self._cumulative[-1], side="right"))
        return self._symbols[min(index, len(self._symbols) - 1)]

    def word(self) -> str:
        symbols = [self.phoneme()]
        while self._rng.random() >= self._p_hash:
            symbols.append(self.phoneme())
        return "".join(symbols)


def _resolve_p_dollar(cfg: GenConfig, rng: np.random.Generator) -> float:
    if cfg.p_dollar is not None:
        return cfg.p_dollar
    half = cfg.params.rho / 2.0
    return float(rng.beta(half, half))


def simulate_unigram(cfg: GenConfig) -> Simulation:
    rng = np.random.default_rng(cfg.seed)
    p_dollar = _resolve_p_dollar(cfg, rng)
    alpha0 = cfg.params.alpha0
    speller = _Speller(cfg.params, rng)

    tokens: List[str] = []
    word_counts: Counter = Counter()
    finals = 0
    lines: List[List[str]] = []
    for _ in range(cfg.n_utterances):
        words: List[str] = []
        while True:
            final = rng.random() < p_dollar
            n = len(tokens)
            # The first token of the corpus is always new, whatever alpha0 is.
            if n == 0 or rng.random() * (n + alpha0) < alpha0:
                word = speller.word()
            else:
                word = tokens[int(rng.integers(n))]
            tokens.append(word)
            word_counts[word] += 1
            words.append(word)
            if final:
                finals += 1
                break
            if len(words) >= cfg.max_words:
                raise GenerationError(f"Utterance exceeded {cfg.max_words} words")
        lines.append(words)

    corpus = Corpus.from_words(lines)
    logger.debug(
        "Generated unigram corpus",
        extra={"utterances": len(corpus), "tokens": len(tokens), "types": len(word_counts)},
    )
    return Simulation(corpus=corpus, p_dollar=p_dollar, word_counts=word_counts, final_count=finals)


class _BigramProcess:
    """Hierarchical restaurant: one restaurant per context word backing off to a shared one."""

    def __init__(self, params: ModelParams, p_dollar: float, rng: np.random.Generator) -> None:
        self.alpha0 = params.alpha0
        self.alpha1 = params.alpha1
        self.p_dollar = p_dollar
        self.rng = rng
        self.speller = _Speller(params, rng)
        self.continuations: Dict[str, List[str]] = {}
        self.pairs: Counter = Counter()
        # One backoff label per distinct bigram type.
        self.backoff_labels: List[str] = []

    def _from_backoff(self) -> str:
        b = len(self.backoff_labels)
        if b == 0 or self.rng.random() * (b + self.alpha0) < self.alpha0:
            if self.rng.random() < self.p_dollar:
                return UTTERANCE_BOUNDARY
            return self.speller.word()
        return self.backoff_labels[int(self.rng.integers(b))]

    def draw(self, prev: str) -> str:
        seen = self.continuations.get(prev, ())
        n_prev = len(seen)
        if n_prev == 0 or self.rng.random() * (n_prev + self.alpha1) < self.alpha1:
            return self._from_backoff()
        return seen[int(self.rng.integers(n_prev))]

    def commit(self, prev: str, word: str) -> None:
        if self.pairs[(prev, word)] == 0:
            self.backoff_labels.append(word)
        self.pairs[(prev, word)] += 1
        self.continuations.setdefault(prev, []).append(word)


def simulate_bigram(cfg: GenConfig) -> Simulation:
    """Generate utterances word by word until the boundary token is drawn.

    The resolved ``p_dollar`` is the base mass of the boundary token. A boundary
    drawn before the first word of an utterance is rejected and redrawn, so no
    tally ever records an empty utterance.
    """

    rng = np.random.default_rng(cfg.seed)
    p_dollar = _resolve_p_dollar(cfg, rng)
    process = _BigramProcess(cfg.params, p_dollar, rng)

    word_counts: Counter = Counter()
    lines: List[List[str]] = []
    for _ in range(cfg.n_utterances):
        words: List[str] = []
        prev = UTTERANCE_BOUNDARY
        rejected = 0
        while True:
            word = process.draw(prev)
            if word == UTTERANCE_BOUNDARY and not words:
                rejected += 1
                if rejected >= cfg.max_words:
                    raise GenerationError("The utterance-initial context only ever produces the boundary")
                continue
            process.commit(prev, word)
            if word == UTTERANCE_BOUNDARY:
                break
            words.append(word)
            word_counts[word] += 1
            prev = word
            if len(words) >= cfg.max_words:
                raise GenerationError(f"Utterance exceeded {cfg.max_words} words")
        lines.append(words)

    corpus = Corpus.from_words(lines)
    logger.debug(
        "Generated bigram corpus",
        extra={"utterances": len(corpus), "bigram_types": len(process.backoff_labels)},
    )
    return Simulation(
        corpus=corpus,
        p_dollar=p_dollar,
        word_counts=word_counts,
        final_count=len(lines),
        bigram_counts=process.pairs,
        bigram_types=len(process.backoff_labels),
    )


def gen_unigram(cfg: GenConfig) -> Corpus:
    return simulate_unigram(cfg).corpus


def gen_bigram(cfg: GenConfig) -> Corpus:
    return simulate_bigram(cfg).corpus


__all__ = [
    "DEFAULT_GEN_P_DOLLAR",
    "GenConfig",
    "Simulation",
    "gen_bigram",
    "gen_unigram",
    "simulate_bigram",
    "simulate_unigram",
]
