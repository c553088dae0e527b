from __future__ import annotations

import copy
from pathlib import Path
from typing import Any, Dict

import pytest

from bayes_wordseg.config import RunConfig
from bayes_wordseg.corpus import Corpus, load_corpus, uniform_phoneme_dist
from bayes_wordseg.model import ModelParams

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def toy_corpus_path() -> Path:
    return FIXTURES / "toy_corpus.txt"


@pytest.fixture
def toy_corpus(toy_corpus_path: Path) -> Corpus:
    return load_corpus(toy_corpus_path)


@pytest.fixture
def ab_params() -> ModelParams:
    """Uniform {a, b}, alpha0 = 20, p# = 0.5, rho = 2."""

    return ModelParams(phoneme_dist=uniform_phoneme_dist("ab"), alpha0=20.0, p_hash=0.5, rho=2.0)


@pytest.fixture
def config_dict(tmp_path: Path, toy_corpus_path: Path) -> Dict[str, Any]:
    return {
        "seed": 3,
        "model": {"kind": "unigram", "alpha0": 20, "p_hash": 0.5, "phoneme_dist": "empirical"},
        "corpus": {"path": str(toy_corpus_path)},
        "schedule": {"burn_in": 20, "iterations": 20, "sample_every": 5, "gamma_max": 4, "gamma_steps": 2},
        "output": {"directory": str(tmp_path / "out")},
    }


@pytest.fixture
def run_config(config_dict: Dict[str, Any]) -> RunConfig:
    return RunConfig.model_validate(copy.deepcopy(config_dict))
