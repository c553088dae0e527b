"""Exception hierarchy for the bayes-wordseg package."""
from __future__ import annotations

from typing import Optional


class WordsegError(RuntimeError):
    """Base class for every error raised by the package."""


class CorpusError(WordsegError):
    """Raised when a corpus is malformed or used outside its preconditions."""


class CorpusParseError(CorpusError):
    """Raised when a line of Brent-format text cannot be parsed."""

    def __init__(self, message: str, line_number: Optional[int] = None) -> None:
        self.line_number = line_number
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)


class MissingGoldError(CorpusError):
    """Raised when an operation needs gold word boundaries the corpus lacks."""


class ModelError(WordsegError):
    """Base class for model probability errors."""


class UnknownPhonemeError(ModelError):
    """Raised when a word contains a phoneme outside the distribution's support."""


class DegeneratePriorError(ModelError):
    """Raised when every hypothesis at a site has zero probability."""


class CountInvariantError(ModelError):
    """Raised when incremental sufficient statistics become inconsistent."""


class SamplerError(WordsegError):
    """Base class for sampler errors."""


class EnumerationTooLargeError(SamplerError):
    """Raised when exact enumeration is requested for too many boundary sites."""


class EmptySamplesError(SamplerError):
    """Raised when samples are aggregated but none were collected."""


class GenerationError(WordsegError):
    """Raised when forward simulation cannot finish an utterance."""


class EvaluationError(WordsegError):
    """Raised when a prediction and its gold corpus do not cover the same phonemes."""


__all__ = [
    "CorpusError",
    "CorpusParseError",
    "CountInvariantError",
    "DegeneratePriorError",
    "EmptySamplesError",
    "EnumerationTooLargeError",
    "EvaluationError",
    "GenerationError",
    "MissingGoldError",
    "ModelError",
    "SamplerError",
    "UnknownPhonemeError",
    "WordsegError",
]
