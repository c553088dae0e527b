"""Model parameters and every probability the unigram and bigram samplers need.

All quantities are computed in log space. Linear-space helpers (``p0``,
``unigram_predictive`` ...) exponentiate the log value and exist for reporting
and tests.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, Sequence, Tuple

import numpy as np
from scipy.special import gammaln

from .corpus import PhonemeDist, SegState
from .counts import UTTERANCE_BOUNDARY, BigramCounts, UnigramCounts, utterance_bigrams
from .errors import DegeneratePriorError, ModelError, UnknownPhonemeError

NEG_INF = -math.inf


def _log(value: float) -> float:
    return math.log(value) if value > 0 else NEG_INF


def _log_count_plus_mass(count: int, log_mass: float, denominator: float) -> float:
    """log((count + exp(log_mass)) / denominator); 0/0 is treated as impossible."""

    if denominator <= 0:
        return NEG_INF
    if count:
        return math.log(count + math.exp(log_mass)) - math.log(denominator)
    return log_mass - math.log(denominator)


@dataclass(frozen=True)
class ModelParams:
    """Fixed hyperparameters of the segmentation models."""

    phoneme_dist: PhonemeDist
    alpha0: float = 20.0
    alpha1: float = 100.0
    p_hash: float = 0.5
    rho: float = 2.0
    p_dollar: float = 0.5

    def __post_init__(self) -> None:
        for name in ("alpha0", "alpha1", "rho"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, received {value}")
        if self.alpha0 < 0:
            raise ValueError(f"alpha0 must be non-negative, received {self.alpha0}")
        if self.alpha1 < 0:
            raise ValueError(f"alpha1 must be non-negative, received {self.alpha1}")
        if not 0.0 < self.p_hash < 1.0:
            raise ValueError(f"p_hash must lie strictly between 0 and 1, received {self.p_hash}")
        if self.rho <= 0:
            raise ValueError(f"rho must be positive, received {self.rho}")
        if not 0.0 < self.p_dollar < 1.0:
            raise ValueError(f"p_dollar must lie strictly between 0 and 1, received {self.p_dollar}")

    @cached_property
    def base(self) -> "BaseDistribution":
        return BaseDistribution(self)

    @cached_property
    def unigram_scorer(self) -> "UnigramScorer":
        return UnigramScorer(self)

    def describe(self) -> Dict[str, float]:
        return {
            "alpha0": self.alpha0,
            "alpha1": self.alpha1,
            "p_hash": self.p_hash,
            "rho": self.rho,
            "p_dollar": self.p_dollar,
        }


class BaseDistribution:
    """P0 over phoneme strings, memoised per word.

    The bigram level uses ``P0'``: the utterance boundary token gets ``p_dollar``
    and real words share the remaining mass in proportion to ``P0``.
    """

    def __init__(self, params: ModelParams) -> None:
        self._log_stop = math.log(params.p_hash)
        self._log_continue = math.log1p(-params.p_hash)
        self._log_phoneme = params.phoneme_dist.log_probabilities
        self._log_boundary = math.log(params.p_dollar)
        self._log_word_share = math.log1p(-params.p_dollar)
        self._cache: Dict[str, float] = {}

    def log_p0(self, word: str) -> float:
        cached = self._cache.get(word)
        if cached is not None:
            return cached
        if not word:
            raise ModelError("Words must contain at least one phoneme")
        total = self._log_stop + (len(word) - 1) * self._log_continue
        try:
            total += math.fsum(self._log_phoneme[symbol] for symbol in word)
        except KeyError as exc:
            raise UnknownPhonemeError(
                f"Phoneme {exc.args[0]!r} of word {word!r} is outside the phoneme distribution"
            ) from exc
        self._cache[word] = total
        return total

    def log_bigram_base(self, word: str) -> float:
        if word == UTTERANCE_BOUNDARY:
            return self._log_boundary
        return self._log_word_share + self.log_p0(word)


def log_p0(word: str, params: ModelParams) -> float:
    return params.base.log_p0(word)


def p0(word: str, params: ModelParams) -> float:
    """p# (1 - p#)^(M-1) * prod P(x_j) for a word of M phonemes."""

    return math.exp(log_p0(word, params))


@dataclass(frozen=True, slots=True)
class HypothesisWeights:
    """Unnormalised log weights of "no boundary" (h1) and "boundary" (h2)."""

    log_h1: float
    log_h2: float

    def __post_init__(self) -> None:
        if math.isnan(self.log_h1) or math.isnan(self.log_h2):
            raise ModelError("Hypothesis weights must not be NaN")
        if self.log_h1 == NEG_INF and self.log_h2 == NEG_INF:
            raise DegeneratePriorError("Both hypotheses have zero probability at this site")

    @property
    def w_h1(self) -> float:
        return math.exp(self.log_h1)

    @property
    def w_h2(self) -> float:
        return math.exp(self.log_h2)

    @property
    def p_h1(self) -> float:
        return _sigmoid(self.log_h1 - self.log_h2)

    @property
    def p_h2(self) -> float:
        return _sigmoid(self.log_h2 - self.log_h1)

    def scaled(self, log_factor: float) -> "HypothesisWeights":
        return HypothesisWeights(self.log_h1 + log_factor, self.log_h2 + log_factor)

    def annealed(self, gamma: float) -> "HypothesisWeights":
        if gamma < 1:
            raise ValueError("Annealing temperature must be at least 1")
        return HypothesisWeights(self.log_h1 / gamma, self.log_h2 / gamma)


def _sigmoid(log_odds: float) -> float:
    if log_odds == math.inf:
        return 1.0
    if log_odds == NEG_INF:
        return 0.0
    if log_odds >= 0:
        return 1.0 / (1.0 + math.exp(-log_odds))
    odds = math.exp(log_odds)
    return odds / (1.0 + odds)


# --------------------------------------------------------------------------- unigram


class UnigramScorer:
    """Precomputed constants for the unigram predictive rules."""

    __slots__ = ("base", "alpha0", "log_alpha0", "rho", "half_rho", "_masses")

    def __init__(self, params: ModelParams) -> None:
        self.base = params.base
        self.alpha0 = params.alpha0
        self.log_alpha0 = _log(params.alpha0)
        self.rho = params.rho
        self.half_rho = params.rho / 2.0
        self._masses: Dict[str, float] = {}

    def log_predictive(self, counts: UnigramCounts, word: str) -> float:
        return _log_count_plus_mass(
            counts.n_l.get(word, 0),
            self.log_alpha0 + self.base.log_p0(word),
            counts.n + self.alpha0,
        )

    def log_final_term(self, tokens_before: int, finals_before: int, final: bool) -> float:
        matching = finals_before if final else tokens_before - finals_before
        return math.log(matching + self.half_rho) - math.log(tokens_before + self.rho)

    def log_weights(
        self, counts: UnigramCounts, w1: str, w2: str, w3: str, final: bool
    ) -> Tuple[float, float]:
        n = counts.n
        n_dollar = counts.n_dollar
        n_l = counts.n_l
        if n_dollar > n or n_dollar < 0:
            raise ModelError("Utterance-final count is outside [0, n]")
        denominator = n + self.alpha0
        if denominator <= 0:
            raise DegeneratePriorError("alpha0 is zero and no words remain to reuse")
        base = self.base
        log_alpha0 = self.log_alpha0
        half = self.half_rho
        rho = self.rho
        matching = n_dollar if final else n - n_dollar

        log_h1 = (
            _log_count_plus_mass(n_l.get(w1, 0), log_alpha0 + base.log_p0(w1), denominator)
            + math.log(matching + half)
            - math.log(n + rho)
        )
        # w2 is never utterance-final; w3 inherits the final flag of w1.
        log_h2 = (
            _log_count_plus_mass(n_l.get(w2, 0), log_alpha0 + base.log_p0(w2), denominator)
            + math.log(n - n_dollar + half)
            - math.log(n + rho)
            + _log_count_plus_mass(
                n_l.get(w3, 0) + (w2 == w3), log_alpha0 + base.log_p0(w3), denominator + 1
            )
            + math.log(matching + (not final) + half)
            - math.log(n + 1 + rho)
        )
        return log_h1, log_h2

    def _mass(self, word: str) -> float:
        mass = self._masses.get(word)
        if mass is None:
            mass = self.alpha0 * math.exp(self.base.log_p0(word))
            self._masses[word] = mass
        return mass

    def log_odds(self, counts: UnigramCounts, w1: str, w2: str, w3: str, final: bool) -> float:
        """log(h2 / h1) computed with linear arithmetic.

        The factors shared by both hypotheses cancel, which leaves one logarithm
        per site. Underflowing masses fall back to :meth:`log_weights`.
        """

        n = counts.n
        n_dollar = counts.n_dollar
        n_l = counts.n_l
        half = self.half_rho
        matching = n_dollar if final else n - n_dollar
        h1 = (n_l.get(w1, 0) + self._mass(w1)) * (matching + half)
        h2 = (
            (n_l.get(w2, 0) + self._mass(w2))
            * (n - n_dollar + half)
            * (n_l.get(w3, 0) + (w2 == w3) + self._mass(w3))
            * (matching + (not final) + half)
            / ((n + self.alpha0 + 1) * (n + 1 + self.rho))
        )
        if h1 > 0.0 and h2 > 0.0:
            ratio = h2 / h1
            if 0.0 < ratio < math.inf:
                return math.log(ratio)
        log_h1, log_h2 = self.log_weights(counts, w1, w2, w3, final)
        if log_h1 == NEG_INF and log_h2 == NEG_INF:
            raise DegeneratePriorError("Both hypotheses have zero probability at this site")
        return log_h2 - log_h1


def unigram_predictive(counts: UnigramCounts, word: str, params: ModelParams) -> float:
    """(n_l + alpha0 P0(word)) / (n + alpha0)."""

    return math.exp(UnigramScorer(params).log_predictive(counts, word))


def utterance_final_prob(counts: UnigramCounts, i: int, params: ModelParams) -> float:
    """(n_$ + rho/2) / (i - 1 + rho) for the i-th token (1-based)."""

    if i < 1:
        raise ValueError("Token index i is 1-based")
    return (counts.n_dollar + params.rho / 2.0) / (i - 1 + params.rho)


def unigram_h_weights(
    counts: UnigramCounts, w1: str, w2: str, w3: str, final: bool, params: ModelParams
) -> HypothesisWeights:
    """Weights of h1 (``w1`` kept whole) and h2 (split into ``w2 w3``) given h-.

    ``counts`` must already exclude the words of the site. ``final`` tells whether
    ``w1`` (equivalently ``w3``) ends its utterance.
    """

    if w1 != w2 + w3:
        raise ModelError(f"w1 must equal w2 + w3, received {w1!r}, {w2!r}, {w3!r}")
    return HypothesisWeights(*UnigramScorer(params).log_weights(counts, w1, w2, w3, final))


# --------------------------------------------------------------------------- bigram


class BigramScorer:
    """Precomputed constants for the hierarchical bigram predictive rules."""

    __slots__ = ("base", "alpha0", "log_alpha0", "alpha1", "log_alpha1")

    def __init__(self, params: ModelParams) -> None:
        self.base = params.base
        self.alpha0 = params.alpha0
        self.log_alpha0 = _log(params.alpha0)
        self.alpha1 = params.alpha1
        self.log_alpha1 = _log(params.alpha1)

    def log_backoff(self, counts: BigramCounts, word: str) -> float:
        return _log_count_plus_mass(
            counts.b_l.get(word, 0),
            self.log_alpha0 + self.base.log_bigram_base(word),
            counts.b + self.alpha0,
        )

    def log_transition(self, counts: BigramCounts, prev: str, word: str) -> float:
        return _log_count_plus_mass(
            counts.n_bigram.get((prev, word), 0),
            self.log_alpha1 + self.log_backoff(counts, word),
            counts.n_first.get(prev, 0) + self.alpha1,
        )

    def log_sequence(self, counts: BigramCounts, pairs: Sequence[Tuple[str, str]]) -> float:
        """Sum of transition log-probabilities, adding each bigram before the next factor.

        ``counts`` is restored before returning.
        """

        total = 0.0
        added = 0
        try:
            for prev, word in pairs:
                total += self.log_transition(counts, prev, word)
                counts.add_bigram(prev, word)
                added += 1
        finally:
            for prev, word in reversed(pairs[:added]):
                counts.remove_bigram(prev, word)
        return total

    def log_weights(
        self, counts: BigramCounts, left: str, w1: str, w2: str, w3: str, right: str
    ) -> Tuple[float, float]:
        log_s1 = self.log_sequence(counts, ((left, w1), (w1, right)))
        log_s2 = self.log_sequence(counts, ((left, w2), (w2, w3), (w3, right)))
        return log_s1, log_s2


def bigram_backoff_p1(counts: BigramCounts, word: str, params: ModelParams) -> float:
    """(b_w + alpha0 P0'(word)) / (b + alpha0)."""

    return math.exp(BigramScorer(params).log_backoff(counts, word))


def bigram_transition(counts: BigramCounts, prev: str, word: str, params: ModelParams) -> float:
    """(n_<prev,word> + alpha1 P1(word)) / (n_prev + alpha1)."""

    return math.exp(BigramScorer(params).log_transition(counts, prev, word))


def bigram_s_weights(
    counts: BigramCounts,
    left: str,
    w1: str,
    w2: str,
    w3: str,
    right: str,
    params: ModelParams,
) -> HypothesisWeights:
    """Weights of s1 = ``left w1 right`` and s2 = ``left w2 w3 right`` given h-.

    The first factor of s1 is the transition <left, w1>. ``counts`` must exclude
    the bigrams of the window.
    """

    if w1 != w2 + w3:
        raise ModelError(f"w1 must equal w2 + w3, received {w1!r}, {w2!r}, {w3!r}")
    return HypothesisWeights(*BigramScorer(params).log_weights(counts, left, w1, w2, w3, right))


# --------------------------------------------------------------------------- joints


def log_joint_unigram(state: SegState, params: ModelParams) -> float:
    """Log of the sequential predictive product over all tokens in corpus order."""

    scorer = UnigramScorer(params)
    counts = UnigramCounts()
    total = 0.0
    for words in state.iter_words():
        last = len(words) - 1
        for index, word in enumerate(words):
            final = index == last
            total += scorer.log_predictive(counts, word)
            total += scorer.log_final_term(counts.n, counts.n_dollar, final)
            counts.add(word, final)
    return total


def log_joint_unigram_counts(counts: UnigramCounts, params: ModelParams) -> float:
    """Closed form of :func:`log_joint_unigram` from the counts alone.

    The unigram joint is exchangeable, so it only depends on ``n_l``, ``n`` and ``n_$``.
    """

    alpha0 = params.alpha0
    if alpha0 <= 0:
        raise ModelError("The closed-form joint needs a positive alpha0")
    if not counts.n:
        return 0.0
    words = list(counts.n_l)
    occurrences = np.fromiter((counts.n_l[w] for w in words), dtype=np.float64, count=len(words))
    log_mass = np.log(alpha0) + np.fromiter(
        (params.base.log_p0(w) for w in words), dtype=np.float64, count=len(words)
    )
    mass = np.exp(log_mass)
    # log Gamma(c + m) - log Gamma(m) tends to log Gamma(c) + log m as m -> 0.
    tiny = log_mass < -30.0
    per_type = np.where(
        tiny,
        gammaln(occurrences) + log_mass,
        gammaln(occurrences + mass) - gammaln(np.where(tiny, 1.0, mass)),
    )
    n = counts.n
    half = params.rho / 2.0
    crp = float(per_type.sum()) - (gammaln(n + alpha0) - gammaln(alpha0))
    beta = (
        gammaln(counts.n_dollar + half)
        + gammaln(n - counts.n_dollar + half)
        - 2.0 * gammaln(half)
        + gammaln(params.rho)
        - gammaln(n + params.rho)
    )
    return float(crp + beta)


def log_joint_bigram(state: SegState, params: ModelParams) -> float:
    """Log of the sequential bigram predictive product in corpus order."""

    scorer = BigramScorer(params)
    counts = BigramCounts()
    total = 0.0
    for words in state.iter_words():
        for prev, word in utterance_bigrams(words):
            total += scorer.log_transition(counts, prev, word)
            counts.add_bigram(prev, word)
    return total


def log_joint(state: SegState, params: ModelParams, model: str) -> float:
    if model == "unigram":
        return log_joint_unigram(state, params)
    if model == "bigram":
        return log_joint_bigram(state, params)
    raise ValueError(f"Unknown model '{model}'. Expected 'unigram' or 'bigram'")


__all__ = [
    "BaseDistribution",
    "BigramScorer",
    "HypothesisWeights",
    "ModelParams",
    "UnigramScorer",
    "bigram_backoff_p1",
    "bigram_s_weights",
    "bigram_transition",
    "log_joint",
    "log_joint_bigram",
    "log_joint_unigram",
    "log_joint_unigram_counts",
    "log_p0",
    "p0",
    "unigram_h_weights",
    "unigram_predictive",
    "utterance_final_prob",
]
