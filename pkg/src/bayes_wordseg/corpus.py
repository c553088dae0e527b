"""Phonemic corpora, gold segmentations and boundary states."""
from __future__ import annotations

import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, FrozenSet, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import CorpusError, CorpusParseError, MissingGoldError

logger = logging.getLogger(__name__)

# A phoneme is one printable ASCII character; an utterance is the string of its phonemes.
Phoneme = str
Utterance = str

WORD_SEPARATOR = " "


def validate_phoneme(symbol: str) -> Phoneme:
    """Return ``symbol`` if it is a usable phoneme, raise ``CorpusError`` otherwise."""

    if len(symbol) != 1:
        raise CorpusError(f"Phonemes are single characters, received {symbol!r}")
    if not symbol.isascii() or not symbol.isprintable() or symbol.isspace():
        raise CorpusError(f"Phoneme {symbol!r} is not a printable, non-space ASCII character")
    return symbol


def _is_phoneme(symbol: str) -> bool:
    return symbol.isascii() and symbol.isprintable() and not symbol.isspace()


@dataclass(frozen=True, slots=True)
class Corpus:
    """Utterances with optional gold word boundaries.

    ``gold`` holds one ``bytes`` object per utterance with one entry per internal
    position: ``gold[u][j] == 1`` means a word boundary between phonemes ``j`` and ``j + 1``.
    """

    utterances: Tuple[Utterance, ...]
    gold: Optional[Tuple[bytes, ...]] = None

    def __post_init__(self) -> None:
        for index, utterance in enumerate(self.utterances):
            if not utterance:
                raise CorpusError(f"Utterance {index} is empty")
        if self.gold is not None:
            if len(self.gold) != len(self.utterances):
                raise CorpusError("Gold boundaries must cover every utterance")
            for index, (utterance, bits) in enumerate(zip(self.utterances, self.gold)):
                if len(bits) != len(utterance) - 1:
                    raise CorpusError(
                        f"Utterance {index} has {len(utterance) - 1} internal positions, "
                        f"gold provides {len(bits)}"
                    )
                if any(bit not in (0, 1) for bit in bits):
                    raise CorpusError(f"Gold boundaries of utterance {index} must be 0/1")

    @classmethod
    def from_words(cls, lines: Iterable[Sequence[str]]) -> "Corpus":
        """Build a corpus with gold boundaries from utterances given as word lists."""

        utterances: List[str] = []
        gold: List[bytes] = []
        for words in lines:
            if not words or any(not word for word in words):
                raise CorpusError("Every utterance needs at least one non-empty word")
            utterance = "".join(words)
            bits = bytearray(len(utterance) - 1)
            offset = 0
            for word in words[:-1]:
                offset += len(word)
                bits[offset - 1] = 1
            utterances.append(utterance)
            gold.append(bytes(bits))
        return cls(tuple(utterances), tuple(gold))

    def __len__(self) -> int:
        return len(self.utterances)

    @property
    def has_gold(self) -> bool:
        return self.gold is not None

    @property
    def num_sites(self) -> int:
        """Total number of utterance-internal boundary positions."""

        return sum(len(u) - 1 for u in self.utterances)

    @property
    def num_phonemes(self) -> int:
        return sum(len(u) for u in self.utterances)

    def alphabet(self) -> FrozenSet[Phoneme]:
        return frozenset("".join(self.utterances))

    def site_offsets(self) -> np.ndarray:
        """Global index of the first internal position of each utterance."""

        sizes = np.fromiter((len(u) - 1 for u in self.utterances), dtype=np.int64, count=len(self))
        return np.concatenate(([0], np.cumsum(sizes)[:-1])) if len(self) else np.zeros(0, dtype=np.int64)

    def require_gold(self) -> Tuple[bytes, ...]:
        if self.gold is None:
            raise MissingGoldError("This operation requires gold word boundaries")
        return self.gold

    def head(self, count: Optional[int]) -> "Corpus":
        """Return the first ``count`` utterances (the whole corpus when ``count`` is None)."""

        if count is None or count >= len(self):
            return self
        if count < 1:
            raise CorpusError("A corpus slice must keep at least one utterance")
        gold = self.gold[:count] if self.gold is not None else None
        return Corpus(self.utterances[:count], gold)

    def without_gold(self) -> "Corpus":
        return Corpus(self.utterances)

    def gold_words(self) -> List[List[str]]:
        gold = self.require_gold()
        return [split_words(u, bits) for u, bits in zip(self.utterances, gold)]


def split_words(utterance: Utterance, bits: Sequence[int]) -> List[str]:
    """Split ``utterance`` at the true entries of ``bits``."""

    words: List[str] = []
    start = 0
    for position, bit in enumerate(bits):
        if bit:
            words.append(utterance[start : position + 1])
            start = position + 1
    words.append(utterance[start:])
    return words


def parse_corpus(text: str) -> Corpus:
    """Parse Brent-format text: one utterance per line, words separated by single spaces."""

    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise CorpusParseError("Corpus contains no utterances")

    word_lists: List[List[str]] = []
    for line_number, raw in enumerate(lines, start=1):
        line = raw.rstrip(" \t\r")
        if not line:
            raise CorpusParseError("empty utterance", line_number)
        words = line.split(WORD_SEPARATOR)
        if any(not word for word in words):
            raise CorpusParseError("words must be separated by exactly one space", line_number)
        for word in words:
            for symbol in word:
                if not _is_phoneme(symbol):
                    raise CorpusParseError(f"invalid phoneme {symbol!r}", line_number)
        word_lists.append(words)
    return Corpus.from_words(word_lists)


def render_corpus(corpus: Corpus) -> str:
    """Render the gold segmentation back to Brent-format text."""

    return "".join(WORD_SEPARATOR.join(words) + "\n" for words in corpus.gold_words())


def load_corpus(path: Union[Path, str], slice_size: Optional[int] = None) -> Corpus:
    """Read a local Brent-format file and keep its first ``slice_size`` utterances."""

    corpus_path = Path(path)
    if not corpus_path.is_file():
        raise FileNotFoundError(f"Corpus file '{corpus_path}' does not exist")
    corpus = parse_corpus(corpus_path.read_text(encoding="utf-8"))
    sliced = corpus.head(slice_size)
    logger.info(
        "Loaded corpus",
        extra={"path": str(corpus_path), "utterances": len(sliced), "sites": sliced.num_sites},
    )
    return sliced


@dataclass(frozen=True, slots=True)
class CorpusStats:
    utterances: int
    tokens: int
    types: int
    phonemes: int
    alphabet_size: int
    sites: int
    words_per_utterance: float
    phonemes_per_word: float

    def to_dict(self) -> Dict[str, Union[float, int]]:
        return {name: getattr(self, name) for name in self.__slots__}


def corpus_stats(corpus: Corpus) -> CorpusStats:
    """Summarise a gold-segmented corpus."""

    words = corpus.gold_words()
    tokens = sum(len(line) for line in words)
    types = len({word for line in words for word in line})
    phonemes = corpus.num_phonemes
    return CorpusStats(
        utterances=len(corpus),
        tokens=tokens,
        types=types,
        phonemes=phonemes,
        alphabet_size=len(corpus.alphabet()),
        sites=corpus.num_sites,
        words_per_utterance=tokens / len(corpus),
        phonemes_per_word=phonemes / tokens,
    )


@dataclass(frozen=True)
class PhonemeDist:
    """Probability of each phoneme when spelling out a novel word."""

    probabilities: Mapping[Phoneme, float]
    log_probabilities: Mapping[Phoneme, float] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if not self.probabilities:
            raise CorpusError("A phoneme distribution needs a non-empty alphabet")
        for symbol, probability in self.probabilities.items():
            validate_phoneme(symbol)
            if not 0.0 < probability <= 1.0:
                raise CorpusError(f"Phoneme {symbol!r} has probability {probability} outside (0, 1]")
        total = math.fsum(self.probabilities.values())
        if abs(total - 1.0) > 1e-9:
            raise CorpusError(f"Phoneme probabilities sum to {total}, expected 1")
        object.__setattr__(self, "probabilities", dict(self.probabilities))
        object.__setattr__(
            self, "log_probabilities", {s: math.log(p) for s, p in self.probabilities.items()}
        )

    def __getitem__(self, symbol: Phoneme) -> float:
        return self.probabilities[symbol]

    def __contains__(self, symbol: object) -> bool:
        return symbol in self.probabilities

    @property
    def alphabet(self) -> FrozenSet[Phoneme]:
        return frozenset(self.probabilities)


def empirical_phoneme_dist(corpus: Corpus) -> PhonemeDist:
    """Relative frequency of every phoneme in the corpus (boundaries are not counted)."""

    if not len(corpus):
        raise CorpusError("Cannot estimate phoneme frequencies from an empty corpus")
    counts = Counter("".join(corpus.utterances))
    total = sum(counts.values())
    return PhonemeDist({symbol: count / total for symbol, count in sorted(counts.items())})


def uniform_phoneme_dist(alphabet: Iterable[Phoneme]) -> PhonemeDist:
    symbols = sorted(set(alphabet))
    if not symbols:
        raise CorpusError("A uniform phoneme distribution needs a non-empty alphabet")
    return PhonemeDist({symbol: 1.0 / len(symbols) for symbol in symbols})


class SegState:
    """Mutable boundary bits over the internal positions of every utterance."""

    __slots__ = ("corpus", "boundaries")

    def __init__(self, corpus: Corpus, boundaries: Sequence[Union[bytes, bytearray]]):
        if len(boundaries) != len(corpus):
            raise CorpusError("A segmentation needs one boundary vector per utterance")
        self.corpus = corpus
        self.boundaries: List[bytearray] = []
        for utterance, bits in zip(corpus.utterances, boundaries):
            if len(bits) != len(utterance) - 1:
                raise CorpusError("Boundary vector length must equal the number of internal positions")
            self.boundaries.append(bytearray(bits))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SegState):
            return NotImplemented
        return self.corpus.utterances == other.corpus.utterances and self.boundaries == other.boundaries

    def __repr__(self) -> str:
        return f"SegState(utterances={len(self.corpus)}, tokens={self.token_count})"

    def copy(self) -> "SegState":
        return SegState(self.corpus, self.boundaries)

    def snapshot(self) -> Tuple[bytes, ...]:
        return tuple(bytes(bits) for bits in self.boundaries)

    @classmethod
    def from_snapshot(cls, corpus: Corpus, snapshot: Sequence[bytes]) -> "SegState":
        return cls(corpus, snapshot)

    def words(self, index: int) -> List[str]:
        return split_words(self.corpus.utterances[index], self.boundaries[index])

    def iter_words(self) -> Iterator[List[str]]:
        for index in range(len(self.corpus)):
            yield self.words(index)

    @property
    def token_count(self) -> int:
        return sum(bits.count(1) for bits in self.boundaries) + len(self.corpus)

    def flat_bits(self) -> np.ndarray:
        """All boundary bits in corpus order as one ``uint8`` array."""

        if not self.boundaries:
            return np.zeros(0, dtype=np.uint8)
        return np.frombuffer(b"".join(self.boundaries), dtype=np.uint8).copy()

    def hamming(self, other: "SegState") -> int:
        return int(np.count_nonzero(self.flat_bits() != other.flat_bits()))

    def to_corpus(self) -> Corpus:
        """Treat this segmentation as a gold-annotated corpus."""

        return Corpus(self.corpus.utterances, self.snapshot())

    def render(self) -> str:
        return "".join(WORD_SEPARATOR.join(words) + "\n" for words in self.iter_words())


def gold_state(corpus: Corpus) -> SegState:
    return SegState(corpus, corpus.require_gold())


def random_init(corpus: Corpus, p_init: float = 0.5, seed: int = 0) -> SegState:
    """Set every internal position independently with probability ``p_init``."""

    if not 0.0 <= p_init <= 1.0:
        raise ValueError(f"p_init must lie in [0, 1], received {p_init}")
    rng = np.random.default_rng(seed)
    draws = rng.random(corpus.num_sites) < p_init
    boundaries: List[bytes] = []
    offset = 0
    for utterance in corpus.utterances:
        size = len(utterance) - 1
        boundaries.append(draws[offset : offset + size].astype(np.uint8).tobytes())
        offset += size
    return SegState(corpus, boundaries)


def perturb_gold(corpus: Corpus, k: int, seed: int = 0) -> SegState:
    """Start from gold and toggle ``k`` uniformly chosen positions (repeats allowed)."""

    if k < 0:
        raise ValueError("The number of perturbations must be non-negative")
    state = gold_state(corpus)
    sites = corpus.num_sites
    if k == 0 or sites == 0:
        if k and not sites:
            logger.warning("Corpus has no internal positions to perturb", extra={"k": k})
        return state
    rng = np.random.default_rng(seed)
    picks = rng.integers(0, sites, size=k)
    offsets = corpus.site_offsets()
    owners = np.searchsorted(offsets, picks, side="right") - 1
    for utterance_index, site in zip(owners.tolist(), picks.tolist()):
        position = site - int(offsets[utterance_index])
        state.boundaries[utterance_index][position] ^= 1
    return state


__all__ = [
    "Corpus",
    "CorpusStats",
    "Phoneme",
    "PhonemeDist",
    "SegState",
    "Utterance",
    "corpus_stats",
    "empirical_phoneme_dist",
    "gold_state",
    "load_corpus",
    "parse_corpus",
    "perturb_gold",
    "random_init",
    "render_corpus",
    "split_words",
    "uniform_phoneme_dist",
    "validate_phoneme",
]
