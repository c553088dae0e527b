"""Configuration models and helpers for segmentation experiments."""
from __future__ import annotations

import copy
import json
import math
import os
import re
import tomllib
from pathlib import Path
from typing import Any, Dict, List, Literal, Mapping, Optional, Union

import yaml
from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from .corpus import Corpus, empirical_phoneme_dist, uniform_phoneme_dist
from .generator import GenConfig
from .model import ModelParams
from .sampler import AnnealSchedule

CONFIG_ENV_VAR = "BAYES_WORDSEG_CONFIG"

SWEEPABLE_PARAMETERS = ("alpha0", "alpha1", "p_hash", "rho", "p_dollar")

_ENV_PLACEHOLDER_PATTERN = re.compile(
    r"\$\{(?P<name>[A-Za-z_][A-Za-z0-9_]*)(?P<modifier>:-|-)?(?P<default>[^}]*)\}"
)


def _lowered(value: Any) -> Any:
    return value.lower().strip() if isinstance(value, str) else value


class ModelConfig(BaseModel):
    """Which model to sample and its hyperparameters."""

    kind: Literal["unigram", "bigram"] = "unigram"
    alpha0: float = Field(default=20.0, ge=0, allow_inf_nan=False)
    alpha1: float = Field(default=100.0, ge=0, allow_inf_nan=False)
    p_hash: float = Field(default=0.5, gt=0, lt=1)
    rho: float = Field(default=2.0, gt=0, allow_inf_nan=False)
    p_dollar: float = Field(default=0.5, gt=0, lt=1)
    phoneme_dist: Literal["uniform", "empirical"] = "empirical"

    @field_validator("kind", "phoneme_dist", mode="before")
    @classmethod
    def _normalise_choice(cls, value: Any) -> Any:
        return _lowered(value)

    def to_params(self, corpus: Corpus) -> ModelParams:
        if self.phoneme_dist == "empirical":
            dist = empirical_phoneme_dist(corpus)
        else:
            dist = uniform_phoneme_dist(corpus.alphabet())
        return ModelParams(
            phoneme_dist=dist,
            alpha0=self.alpha0,
            alpha1=self.alpha1,
            p_hash=self.p_hash,
            rho=self.rho,
            p_dollar=self.p_dollar,
        )


class ScheduleConfig(BaseModel):
    burn_in: int = Field(default=1000, ge=0)
    iterations: int = Field(default=10000, ge=0)
    sample_every: int = Field(default=10, ge=1)
    gamma_max: float = Field(default=10.0, ge=1)
    gamma_steps: int = Field(default=10, ge=1)
    random_scan: bool = False
    check_every: int = Field(default=0, ge=0)
    log_every: int = Field(default=100, ge=0)

    def to_schedule(self) -> AnnealSchedule:
        return AnnealSchedule(
            burn_in=self.burn_in,
            total_sampling=self.iterations,
            sample_every=self.sample_every,
            gamma_max=self.gamma_max,
            gamma_steps=self.gamma_steps,
        )


class InitConfig(BaseModel):
    """Starting segmentation: random boundaries or the gold one (optionally perturbed)."""

    mode: Literal["random", "gold"] = "random"
    p_init: float = Field(default=0.5, ge=0, le=1)
    perturbations: int = Field(default=0, ge=0)

    @field_validator("mode", mode="before")
    @classmethod
    def _normalise_mode(cls, value: Any) -> Any:
        return _lowered(value)


class VocabConfig(BaseModel):
    size: int = Field(default=0, ge=0)
    boost: float = 1.0
    seed: int = 0

    @field_validator("boost")
    @classmethod
    def _validate_boost(cls, value: float) -> float:
        if math.isnan(value) or value < 1:
            raise ValueError(f"boost must be at least 1 (or inf), received {value}")
        return value


class CorpusConfig(BaseModel):
    path: Optional[Path] = None
    slice: Optional[int] = Field(default=None, ge=1)

    @field_validator("path", mode="before")
    @classmethod
    def _empty_path_is_unset(cls, value: Any) -> Any:
        if isinstance(value, str) and not value.strip():
            return None
        return value


class OutputConfig(BaseModel):
    directory: Path = Path("runs/latest")
    aggregate: Literal["final", "marginal"] = "final"
    top_k: int = Field(default=20, ge=1)

    @field_validator("aggregate", mode="before")
    @classmethod
    def _normalise_aggregate(cls, value: Any) -> Any:
        return _lowered(value)


class SweepConfig(BaseModel):
    """Parameter grid of the ``sweep`` command: every combination is run for every seed."""

    grid: Dict[str, List[float]] = Field(default_factory=dict)
    seeds: List[int] = Field(default_factory=lambda: [0])
    workers: int = Field(default=1, ge=1)

    @field_validator("grid")
    @classmethod
    def _validate_grid(cls, value: Dict[str, List[float]]) -> Dict[str, List[float]]:
        for name, values in value.items():
            if name not in SWEEPABLE_PARAMETERS:
                raise ValueError(
                    f"Unsupported sweep parameter '{name}'. Allowed parameters: {', '.join(SWEEPABLE_PARAMETERS)}"
                )
            if not values:
                raise ValueError(f"Sweep parameter '{name}' needs at least one value")
            if not all(math.isfinite(item) for item in values):
                raise ValueError(f"Sweep parameter '{name}' must only list finite values")
        return value

    @field_validator("seeds")
    @classmethod
    def _validate_seeds(cls, value: List[int]) -> List[int]:
        if not value:
            raise ValueError("At least one seed is required")
        unique: List[int] = []
        for seed in value:
            if seed not in unique:
                unique.append(seed)
        return unique


class GenerateConfig(BaseModel):
    """Synthetic corpus settings; ``p_dollar: null`` draws it from the Beta prior."""

    n_utterances: int = Field(default=100, ge=1)
    p_dollar: Optional[float] = Field(default=0.3, gt=0, lt=1)
    alphabet: str = "abcdefghij"
    filename: str = "corpus.txt"

    @field_validator("alphabet")
    @classmethod
    def _validate_alphabet(cls, value: str) -> str:
        if not value or len(set(value)) != len(value):
            raise ValueError("alphabet must be a non-empty string of distinct phonemes")
        return value

    def to_gen_config(self, model: ModelConfig, seed: int) -> GenConfig:
        params = ModelParams(
            phoneme_dist=uniform_phoneme_dist(self.alphabet),
            alpha0=model.alpha0,
            alpha1=model.alpha1,
            p_hash=model.p_hash,
            rho=model.rho,
            p_dollar=self.p_dollar if self.p_dollar is not None else model.p_dollar,
        )
        return GenConfig(params=params, n_utterances=self.n_utterances, p_dollar=self.p_dollar, seed=seed)


class RunConfig(BaseModel):
    """Top level configuration object."""

    seed: int = 0
    model: ModelConfig = Field(default_factory=ModelConfig)
    corpus: CorpusConfig = Field(default_factory=CorpusConfig)
    schedule: ScheduleConfig = Field(default_factory=ScheduleConfig)
    init: InitConfig = Field(default_factory=InitConfig)
    vocab: VocabConfig = Field(default_factory=VocabConfig)
    output: OutputConfig = Field(default_factory=OutputConfig)
    sweep: SweepConfig = Field(default_factory=SweepConfig)
    generate: GenerateConfig = Field(default_factory=GenerateConfig)

    @model_validator(mode="after")
    def _validate_bigram_grid(self) -> "RunConfig":
        if self.model.kind == "unigram" and "alpha1" in self.sweep.grid:
            raise ValueError("alpha1 can only be swept for the bigram model")
        return self

    def with_overrides(self, overrides: Mapping[str, Any]) -> "RunConfig":
        """Return a validated copy with dotted-key overrides such as ``model.alpha0``."""

        return RunConfig.model_validate(merge_overrides(self.model_dump(), overrides))

    def manifest(self) -> Dict[str, Any]:
        """Plain-data echo of the resolved configuration."""

        return json.loads(json.dumps(self.model_dump(), default=str))


def _expand_env_placeholders(value: str) -> str:
    """Expand ${VAR}, ${VAR-default}, and ${VAR:-default} style placeholders."""

    def replacer(match: re.Match[str]) -> str:
        name = match.group("name")
        modifier = match.group("modifier")
        default = match.group("default") or ""
        env_value = os.getenv(name)

        if modifier is None:
            return env_value if env_value is not None else ""

        if env_value is None:
            return default

        if modifier == ":-" and env_value == "":
            return default

        return env_value

    return _ENV_PLACEHOLDER_PATTERN.sub(replacer, value)


def _resolve_env_values(value: Any) -> Any:
    """Recursively expand environment variables in the loaded configuration."""

    if isinstance(value, str):
        if value.startswith("env:"):
            env_name = value.split(":", 1)[1]
            return os.getenv(env_name, "")
        return _expand_env_placeholders(value)
    if isinstance(value, list):
        return [_resolve_env_values(item) for item in value]
    if isinstance(value, dict):
        return {key: _resolve_env_values(item) for key, item in value.items()}
    return value


def _read_file(path: Path) -> Dict[str, Any]:
    text = path.read_text()
    if path.suffix.lower() in {".yaml", ".yml"}:
        return yaml.safe_load(text) or {}
    if path.suffix.lower() == ".json":
        return json.loads(text)
    if path.suffix.lower() in {".toml", ".tml"}:
        return tomllib.loads(text)
    raise ValueError(f"Unsupported configuration format for '{path}'")


def merge_overrides(data: Mapping[str, Any], overrides: Mapping[str, Any]) -> Dict[str, Any]:
    """Apply ``{"section.field": value}`` overrides to a nested dict."""

    merged: Dict[str, Any] = copy.deepcopy(dict(data))
    for dotted, value in overrides.items():
        target = merged
        *parents, leaf = dotted.split(".")
        for key in parents:
            child = target.get(key)
            if not isinstance(child, dict):
                child = {}
                target[key] = child
            target = child
        target[leaf] = value
    return merged


def bundled_config_path() -> Path:
    return Path(__file__).resolve().parents[2] / "config" / "default.yaml"


def load_config(
    config_path: Optional[Union[os.PathLike[str], str]] = None,
    overrides: Optional[Mapping[str, Any]] = None,
) -> RunConfig:
    """Load configuration from disk and apply command-line overrides.

    The lookup order is:

    1. The explicit ``config_path`` argument when provided (it must exist).
    2. The ``BAYES_WORDSEG_CONFIG`` environment variable.
    3. The bundled ``config/default.yaml`` file.
    4. The built-in defaults of :class:`RunConfig`.
    """

    source: Optional[Path] = None
    if config_path:
        source = Path(config_path)
        if not source.exists():
            raise FileNotFoundError(f"Configuration file '{source}' does not exist")
    else:
        env_path = os.getenv(CONFIG_ENV_VAR)
        for candidate in ([Path(env_path)] if env_path else []) + [bundled_config_path()]:
            if candidate.exists():
                source = candidate
                break

    raw = _resolve_env_values(_read_file(source)) if source is not None else {}
    merged = merge_overrides(raw, overrides or {})
    try:
        return RunConfig.model_validate(merged)
    except ValidationError as exc:
        origin = f"'{source}'" if source is not None else "the command line"
        raise ValueError(f"Invalid configuration in {origin}: {exc}") from exc


__all__ = [
    "CONFIG_ENV_VAR",
    "CorpusConfig",
    "GenerateConfig",
    "InitConfig",
    "ModelConfig",
    "OutputConfig",
    "RunConfig",
    "SWEEPABLE_PARAMETERS",
    "ScheduleConfig",
    "SweepConfig",
    "VocabConfig",
    "bundled_config_path",
    "load_config",
    "merge_overrides",
]
