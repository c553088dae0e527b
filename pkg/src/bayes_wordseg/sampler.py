"""Annealed collapsed Gibbs sampling over word boundary sites."""
from __future__ import annotations

import itertools
import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, FrozenSet, List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import logsumexp

from .corpus import Corpus, SegState
from .counts import UTTERANCE_BOUNDARY, BigramCounts, ModelKind, UnigramCounts, counts_rebuild
from .errors import (
    CountInvariantError,
    DegeneratePriorError,
    EmptySamplesError,
    EnumerationTooLargeError,
    SamplerError,
)
from .model import BigramScorer, ModelParams, _sigmoid, log_joint, log_joint_unigram_counts

logger = logging.getLogger(__name__)

AggregateMode = Literal["final", "marginal"]

MAX_EXACT_SITES = 16


@dataclass(frozen=True, slots=True)
class AnnealSchedule:
    """Iteration counts and the temperature ladder used during burn-in.

    Burn-in is split into ``gamma_steps`` equal plateaus whose temperatures fall
    geometrically from ``gamma_max`` to 1; every later iteration runs at 1.
    """

    burn_in: int = 1000
    total_sampling: int = 10000
    sample_every: int = 10
    gamma_max: float = 10.0
    gamma_steps: int = 10

    def __post_init__(self) -> None:
        if self.burn_in < 0 or self.total_sampling < 0:
            raise ValueError("Iteration counts must be non-negative")
        if self.sample_every < 1:
            raise ValueError("sample_every must be at least 1")
        if self.gamma_max < 1:
            raise ValueError("gamma_max must be at least 1")
        if self.gamma_steps < 1:
            raise ValueError("gamma_steps must be at least 1")

    @property
    def total_iterations(self) -> int:
        return self.burn_in + self.total_sampling

    @property
    def expected_samples(self) -> int:
        return self.total_sampling // self.sample_every

    def gamma(self, iteration: int) -> float:
        if iteration >= self.burn_in or self.gamma_max == 1.0:
            return 1.0
        plateau = min(iteration * self.gamma_steps // self.burn_in, self.gamma_steps - 1)
        if self.gamma_steps == 1:
            return self.gamma_max
        exponent = (self.gamma_steps - 1 - plateau) / (self.gamma_steps - 1)
        return float(self.gamma_max**exponent)

    def collects(self, iteration: int) -> bool:
        """Whether a sample is taken after the sweep numbered ``iteration`` (0-based)."""

        if iteration < self.burn_in:
            return False
        return (iteration - self.burn_in + 1) % self.sample_every == 0


@dataclass(frozen=True, slots=True)
class VocabPrior:
    """Known words whose hypotheses get multiplied by ``boost``."""

    vocab: FrozenSet[str]
    boost: float = 1.0

    def __post_init__(self) -> None:
        if math.isnan(self.boost) or self.boost < 1:
            raise ValueError(f"boost must be at least 1, received {self.boost}")
        if any(not word for word in self.vocab):
            raise ValueError("Vocabulary words must be non-empty phoneme strings")

    @property
    def is_infinite(self) -> bool:
        return math.isinf(self.boost)


@dataclass(frozen=True, slots=True)
class TraceRow:
    iteration: int
    gamma: float
    log_joint: float
    token_count: int
    flips: int


@dataclass(slots=True)
class SamplerOutput:
    final_state: SegState
    samples: List[Tuple[bytes, ...]]
    trace: List[TraceRow]
    seed: int
    model: ModelKind
    params: ModelParams
    schedule: AnnealSchedule
    vocab_size: int = 0
    metadata: Dict[str, object] = field(default_factory=dict)


def chain_rng(seed: int, chain: int = 0) -> np.random.Generator:
    """Generator for chain number ``chain``; each chain gets its own spawned stream."""

    children = np.random.SeedSequence(seed).spawn(chain + 1)
    return np.random.default_rng(children[chain])


@lru_cache(maxsize=8)
def _sites(corpus: Corpus) -> Tuple[Tuple[int, int], ...]:
    return tuple(
        (index, position)
        for index, utterance in enumerate(corpus.utterances)
        for position in range(len(utterance) - 1)
    )


def _scan_order(corpus: Corpus, rng: np.random.Generator, random_scan: bool) -> Sequence[Tuple[int, int]]:
    sites = _sites(corpus)
    if random_scan and sites:
        permutation = rng.permutation(len(sites))
        return [sites[i] for i in permutation.tolist()]
    return sites


def gibbs_sweep(
    state: SegState,
    counts: Union[UnigramCounts, BigramCounts],
    params: ModelParams,
    gamma: float,
    rng: np.random.Generator,
    vocab_prior: Optional[VocabPrior] = None,
    random_scan: bool = False,
) -> int:
    """Resample every internal boundary once; returns how many sites changed.

    The model follows the type of ``counts``. ``counts`` must match ``state`` on
    entry and matches it again on return.
    """

    if gamma < 1:
        raise ValueError(f"Temperature must be at least 1, received {gamma}")
    bigram = isinstance(counts, BigramCounts)
    scorer = BigramScorer(params) if bigram else params.unigram_scorer
    corpus = state.corpus
    uniforms = rng.random(corpus.num_sites).tolist()
    order = _scan_order(corpus, rng, random_scan)

    vocab: FrozenSet[str] = vocab_prior.vocab if vocab_prior is not None else frozenset()
    forced = vocab_prior is not None and vocab_prior.is_infinite
    log_boost = 0.0 if vocab_prior is None or forced else math.log(vocab_prior.boost)
    annealing = gamma != 1.0

    utterances = corpus.utterances
    boundaries = state.boundaries
    flips = 0
    for draw, (index, position) in zip(uniforms, order):
        utterance = utterances[index]
        bits = boundaries[index]
        length = len(utterance)
        start = bits.rfind(1, 0, position) + 1
        following = bits.find(1, position + 1)
        end = following + 1 if following != -1 else length
        w1 = utterance[start:end]
        w2 = utterance[start : position + 1]
        w3 = utterance[position + 1 : end]
        final = end == length
        had_boundary = bits[position] == 1

        if bigram:
            if start:
                left = utterance[bits.rfind(1, 0, start - 1) + 1 : start]
            else:
                left = UTTERANCE_BOUNDARY
            if end < length:
                after = bits.find(1, end)
                right = utterance[end : after + 1 if after != -1 else length]
            else:
                right = UTTERANCE_BOUNDARY
            if had_boundary:
                counts.remove_span(left, (w2, w3), right, final)
            else:
                counts.remove_span(left, (w1,), right, final)
            log_h1, log_h2 = scorer.log_weights(counts, left, w1, w2, w3, right)
            if log_h1 == -math.inf and log_h2 == -math.inf:
                raise DegeneratePriorError(
                    f"Both hypotheses have zero probability at utterance {index}, position {position}"
                )
            log_odds = log_h2 - log_h1
        else:
            if had_boundary:
                counts.remove(w2, False)
                counts.remove(w3, final)
            else:
                counts.remove(w1, final)
            try:
                log_odds = scorer.log_odds(counts, w1, w2, w3, final)
            except DegeneratePriorError as exc:
                raise DegeneratePriorError(f"{exc} (utterance {index}, position {position})") from exc

        if annealing:
            log_odds /= gamma

        boundary: Optional[bool] = None
        if vocab:
            known_whole = w1 in vocab
            known_split = w2 in vocab and w3 in vocab
            if forced:
                if known_whole != known_split:
                    boundary = known_split
            else:
                if known_whole:
                    log_odds -= log_boost
                if known_split:
                    log_odds += log_boost
        if boundary is None:
            boundary = draw < _sigmoid(log_odds)

        if boundary:
            bits[position] = 1
            if bigram:
                counts.add_span(left, (w2, w3), right, final)
            else:
                counts.add(w2, False)
                counts.add(w3, final)
        else:
            bits[position] = 0
            if bigram:
                counts.add_span(left, (w1,), right, final)
            else:
                counts.add(w1, final)
        if boundary != had_boundary:
            flips += 1
    return flips


def check_consistency(state: SegState, counts: Union[UnigramCounts, BigramCounts]) -> None:
    """Raise ``CountInvariantError`` unless ``counts`` equals a rebuild from ``state``."""

    model: ModelKind = "bigram" if isinstance(counts, BigramCounts) else "unigram"
    rebuilt = counts_rebuild(state, model)
    if rebuilt != counts:
        raise CountInvariantError(f"Incremental counts diverged from the state: {counts!r} != {rebuilt!r}")


def run(
    corpus: Corpus,
    params: ModelParams,
    schedule: AnnealSchedule,
    init: SegState,
    model: ModelKind = "unigram",
    seed: int = 0,
    vocab_prior: Optional[VocabPrior] = None,
    *,
    random_scan: bool = False,
    check_every: int = 0,
    log_every: int = 100,
) -> SamplerOutput:
    """Run burn-in plus sampling sweeps from ``init`` (which is left untouched)."""

    if init.corpus.utterances != corpus.utterances:
        raise SamplerError("The initial segmentation does not belong to the corpus")
    if model not in ("unigram", "bigram"):
        raise ValueError(f"Unknown model '{model}'. Expected 'unigram' or 'bigram'")

    state = SegState(corpus, init.boundaries)
    counts = counts_rebuild(state, model)
    rng = chain_rng(seed)
    closed_form = model == "unigram" and params.alpha0 > 0

    logger.info(
        "Starting Gibbs sampler",
        extra={
            "model": model,
            "seed": seed,
            "iterations": schedule.total_iterations,
            "sites": corpus.num_sites,
            "vocab_size": len(vocab_prior.vocab) if vocab_prior else 0,
        },
    )

    samples: List[Tuple[bytes, ...]] = []
    trace: List[TraceRow] = []
    for iteration in range(schedule.total_iterations):
        gamma = schedule.gamma(iteration)
        flips = gibbs_sweep(state, counts, params, gamma, rng, vocab_prior, random_scan)
        if check_every and (iteration + 1) % check_every == 0:
            check_consistency(state, counts)
        if closed_form:
            joint = log_joint_unigram_counts(counts, params)
            tokens = counts.n
        else:
            joint = log_joint(state, params, model)
            tokens = counts.n if isinstance(counts, UnigramCounts) else counts.unigram.n
        trace.append(TraceRow(iteration, gamma, joint, tokens, flips))
        if schedule.collects(iteration):
            samples.append(state.snapshot())

        logger.debug(
            "Finished sweep",
            extra={"iteration": iteration, "gamma": gamma, "log_joint": joint, "flips": flips},
        )
        if iteration + 1 == schedule.burn_in:
            logger.info("Burn-in complete", extra={"iteration": iteration, "log_joint": joint})
        elif log_every and (iteration + 1) % log_every == 0:
            logger.info(
                "Sampler progress",
                extra={"iteration": iteration + 1, "gamma": gamma, "log_joint": joint, "tokens": tokens},
            )

    logger.info("Sampler finished", extra={"samples": len(samples), "tokens": state.token_count})
    return SamplerOutput(
        final_state=state,
        samples=samples,
        trace=trace,
        seed=seed,
        model=model,
        params=params,
        schedule=schedule,
        vocab_size=len(vocab_prior.vocab) if vocab_prior else 0,
    )


def _stack(samples: Sequence[Tuple[bytes, ...]]) -> np.ndarray:
    return np.stack([np.frombuffer(b"".join(sample), dtype=np.uint8) for sample in samples])


def aggregate(samples: Sequence[Tuple[bytes, ...]], corpus: Corpus, mode: AggregateMode = "final") -> SegState:
    """Reduce collected samples to one segmentation.

    ``final`` keeps the last sample; ``marginal`` keeps each boundary present in
    more than half of the samples.
    """

    if not samples:
        raise EmptySamplesError("No samples were collected")
    if mode == "final":
        return SegState.from_snapshot(corpus, samples[-1])
    if mode != "marginal":
        raise ValueError(f"Unknown aggregate mode '{mode}'. Expected 'final' or 'marginal'")
    votes = _stack(samples).sum(axis=0, dtype=np.int64)
    majority = (2 * votes > len(samples)).astype(np.uint8)
    boundaries = []
    offset = 0
    for utterance in corpus.utterances:
        size = len(utterance) - 1
        boundaries.append(majority[offset : offset + size].tobytes())
        offset += size
    return SegState(corpus, boundaries)


def build_vocab_prior(corpus: Corpus, v: int, boost: float, seed: int = 0) -> VocabPrior:
    """Draw ``v`` distinct gold word types without replacement, weighted by frequency."""

    frequencies = Counter(word for words in corpus.gold_words() for word in words)
    types = sorted(frequencies)
    if v < 0 or v > len(types):
        raise ValueError(f"Vocabulary size must lie in [0, {len(types)}], received {v}")
    if v == 0:
        return VocabPrior(frozenset(), boost)
    weights = np.array([frequencies[word] for word in types], dtype=np.float64)
    rng = np.random.default_rng(seed)
    picks = rng.choice(len(types), size=v, replace=False, p=weights / weights.sum())
    vocab = frozenset(types[i] for i in picks.tolist())
    logger.info("Built vocabulary prior", extra={"size": v, "boost": boost, "types": len(types)})
    return VocabPrior(vocab, boost)


def _split_bits(corpus: Corpus, bits: Sequence[int]) -> List[bytes]:
    boundaries = []
    offset = 0
    for utterance in corpus.utterances:
        size = len(utterance) - 1
        boundaries.append(bytes(bits[offset : offset + size]))
        offset += size
    return boundaries


def exact_posterior(
    corpus: Corpus, params: ModelParams, model: ModelKind = "unigram", max_sites: int = MAX_EXACT_SITES
) -> Dict[Tuple[bytes, ...], float]:
    """Posterior probability of every boundary configuration, by enumeration."""

    sites = corpus.num_sites
    if sites > max_sites:
        raise EnumerationTooLargeError(
            f"Exact enumeration covers at most {max_sites} sites, the corpus has {sites}"
        )
    configurations: List[Tuple[bytes, ...]] = []
    scores: List[float] = []
    for bits in itertools.product((0, 1), repeat=sites):
        state = SegState(corpus, _split_bits(corpus, bits))
        configurations.append(state.snapshot())
        scores.append(log_joint(state, params, model))
    log_scores = np.asarray(scores, dtype=np.float64)
    probabilities = np.exp(log_scores - logsumexp(log_scores))
    return dict(zip(configurations, probabilities.tolist()))


def exact_marginals(posterior: Dict[Tuple[bytes, ...], float]) -> np.ndarray:
    """Per-site boundary probability (corpus order) under an enumerated posterior."""

    configurations = list(posterior)
    weights = np.fromiter(posterior.values(), dtype=np.float64, count=len(configurations))
    return weights @ _stack(configurations).astype(np.float64)


def empirical_marginals(samples: Sequence[Tuple[bytes, ...]]) -> np.ndarray:
    if not samples:
        raise EmptySamplesError("No samples were collected")
    return _stack(samples).mean(axis=0)


__all__ = [
    "AggregateMode",
    "AnnealSchedule",
    "MAX_EXACT_SITES",
    "SamplerOutput",
    "TraceRow",
    "VocabPrior",
    "aggregate",
    "build_vocab_prior",
    "chain_rng",
    "check_consistency",
    "empirical_marginals",
    "exact_marginals",
    "exact_posterior",
    "gibbs_sweep",
    "run",
]
