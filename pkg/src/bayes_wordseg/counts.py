"""Incremental sufficient statistics for the unigram and bigram models."""
from __future__ import annotations

from typing import Dict, Iterable, Literal, Sequence, Tuple, Union

from .corpus import SegState
from .errors import CountInvariantError

ModelKind = Literal["unigram", "bigram"]

# Utterance boundary token of the bigram model. Words are never empty, so "" cannot collide.
UTTERANCE_BOUNDARY = ""


def _decrement(table: dict, key, what: str) -> int:
    current = table.get(key, 0)
    if current <= 0:
        raise CountInvariantError(f"Cannot remove {what} {key!r}: count is already zero")
    if current == 1:
        del table[key]
        return 0
    table[key] = current - 1
    return current - 1


class UnigramCounts:
    """Token counts ``n``, ``n_l`` and the utterance-final count ``n_$``."""

    __slots__ = ("n", "n_l", "n_dollar")

    def __init__(self) -> None:
        self.n = 0
        self.n_l: Dict[str, int] = {}
        self.n_dollar = 0

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, UnigramCounts):
            return NotImplemented
        return self.n == other.n and self.n_dollar == other.n_dollar and self.n_l == other.n_l

    def __repr__(self) -> str:
        return f"UnigramCounts(n={self.n}, types={len(self.n_l)}, n_dollar={self.n_dollar})"

    def count(self, word: str) -> int:
        return self.n_l.get(word, 0)

    def add(self, word: str, final: bool) -> None:
        self.n_l[word] = self.n_l.get(word, 0) + 1
        self.n += 1
        if final:
            self.n_dollar += 1

    def remove(self, word: str, final: bool) -> None:
        _decrement(self.n_l, word, "word")
        self.n -= 1
        if final:
            if self.n_dollar <= 0:
                raise CountInvariantError("Cannot remove an utterance-final token: n_$ is zero")
            self.n_dollar -= 1

    def add_span(self, words: Sequence[str], final: bool) -> None:
        """Add consecutive tokens; only the last one carries ``final``."""

        last = len(words) - 1
        for index, word in enumerate(words):
            self.add(word, final and index == last)

    def remove_span(self, words: Sequence[str], final: bool) -> None:
        last = len(words) - 1
        for index, word in enumerate(words):
            self.remove(word, final and index == last)

    def copy(self) -> "UnigramCounts":
        clone = UnigramCounts()
        clone.n = self.n
        clone.n_l = dict(self.n_l)
        clone.n_dollar = self.n_dollar
        return clone

    def check(self) -> None:
        if sum(self.n_l.values()) != self.n:
            raise CountInvariantError("Sum of word counts differs from the token total")
        if not 0 <= self.n_dollar <= self.n:
            raise CountInvariantError("Utterance-final count outside [0, n]")


class BigramCounts:
    """Bigram counts with the type counts ``b``/``b_l`` of the backoff level.

    Each distinct bigram type contributes one entry to the backoff level, so
    ``b_l`` is the number of distinct contexts in which ``l`` has been observed.
    """

    __slots__ = ("n_bigram", "n_first", "b", "b_l", "unigram")

    def __init__(self) -> None:
        self.n_bigram: Dict[Tuple[str, str], int] = {}
        self.n_first: Dict[str, int] = {}
        self.b = 0
        self.b_l: Dict[str, int] = {}
        self.unigram = UnigramCounts()

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BigramCounts):
            return NotImplemented
        return (
            self.b == other.b
            and self.n_bigram == other.n_bigram
            and self.n_first == other.n_first
            and self.b_l == other.b_l
            and self.unigram == other.unigram
        )

    def __repr__(self) -> str:
        return f"BigramCounts(bigrams={len(self.n_bigram)}, b={self.b}, unigram={self.unigram!r})"

    def pair(self, prev: str, word: str) -> int:
        return self.n_bigram.get((prev, word), 0)

    def context(self, prev: str) -> int:
        return self.n_first.get(prev, 0)

    def types_ending(self, word: str) -> int:
        return self.b_l.get(word, 0)

    def add_bigram(self, prev: str, word: str) -> None:
        key = (prev, word)
        current = self.n_bigram.get(key, 0)
        self.n_bigram[key] = current + 1
        self.n_first[prev] = self.n_first.get(prev, 0) + 1
        if current == 0:
            self.b += 1
            self.b_l[word] = self.b_l.get(word, 0) + 1

    def remove_bigram(self, prev: str, word: str) -> None:
        remaining = _decrement(self.n_bigram, (prev, word), "bigram")
        _decrement(self.n_first, prev, "context")
        if remaining == 0:
            self.b -= 1
            _decrement(self.b_l, word, "bigram type ending in")

    def add_span(self, left: str, words: Sequence[str], right: str, final: bool) -> None:
        """Add ``words`` between the context words ``left`` and ``right``."""

        prev = left
        for word in words:
            self.add_bigram(prev, word)
            prev = word
        self.add_bigram(prev, right)
        self.unigram.add_span(words, final)

    def remove_span(self, left: str, words: Sequence[str], right: str, final: bool) -> None:
        prev = left
        for word in words:
            self.remove_bigram(prev, word)
            prev = word
        self.remove_bigram(prev, right)
        self.unigram.remove_span(words, final)

    def copy(self) -> "BigramCounts":
        clone = BigramCounts()
        clone.n_bigram = dict(self.n_bigram)
        clone.n_first = dict(self.n_first)
        clone.b = self.b
        clone.b_l = dict(self.b_l)
        clone.unigram = self.unigram.copy()
        return clone

    def check(self) -> None:
        self.unigram.check()
        if sum(self.b_l.values()) != self.b or len(self.n_bigram) != self.b:
            raise CountInvariantError("Bigram type totals are inconsistent")
        totals: Dict[str, int] = {}
        for (prev, _), value in self.n_bigram.items():
            if value < 1:
                raise CountInvariantError("Stored bigram counts must be positive")
            totals[prev] = totals.get(prev, 0) + value
        if totals != self.n_first:
            raise CountInvariantError("Context totals differ from the bigram counts")


def utterance_bigrams(words: Sequence[str]) -> Iterable[Tuple[str, str]]:
    prev = UTTERANCE_BOUNDARY
    for word in words:
        yield prev, word
        prev = word
    yield prev, UTTERANCE_BOUNDARY


def counts_rebuild(state: SegState, model: ModelKind = "unigram") -> Union[UnigramCounts, BigramCounts]:
    """Recompute every statistic from the token sequence of ``state``."""

    if model == "unigram":
        counts = UnigramCounts()
        for words in state.iter_words():
            counts.add_span(words, final=True)
        return counts
    if model == "bigram":
        bigrams = BigramCounts()
        for words in state.iter_words():
            bigrams.add_span(UTTERANCE_BOUNDARY, words, UTTERANCE_BOUNDARY, final=True)
        return bigrams
    raise ValueError(f"Unknown model '{model}'. Expected 'unigram' or 'bigram'")


__all__ = [
    "BigramCounts",
    "ModelKind",
    "UTTERANCE_BOUNDARY",
    "UnigramCounts",
    "counts_rebuild",
    "utterance_bigrams",
]
