"""Bayesian unsupervised word segmentation with Dirichlet process models."""

from .config import RunConfig, load_config
from .corpus import Corpus, SegState, load_corpus, parse_corpus
from .evaluation import EvalReport, evaluate
from .model import ModelParams
from .sampler import AnnealSchedule, aggregate, run

__all__ = [
    "AnnealSchedule",
    "Corpus",
    "EvalReport",
    "ModelParams",
    "RunConfig",
    "SegState",
    "aggregate",
    "evaluate",
    "load_config",
    "load_corpus",
    "parse_corpus",
    "run",
]
