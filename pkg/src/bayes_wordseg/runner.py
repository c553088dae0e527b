"""Experiment pipelines behind the command line subcommands."""
from __future__ import annotations

import asyncio
import csv
import io
import itertools
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from .config import RunConfig
from .corpus import Corpus, SegState, corpus_stats, load_corpus, perturb_gold, random_init
from .evaluation import REPORT_KEYS, EvalReport, evaluate, format_report, format_rows, top_k_words
from .generator import simulate_bigram, simulate_unigram
from .sampler import (
    SamplerOutput,
    TraceRow,
    VocabPrior,
    aggregate,
    build_vocab_prior,
    empirical_marginals,
    exact_marginals,
    exact_posterior,
    run,
)

logger = logging.getLogger(__name__)

TRACE_COLUMNS = [name for name in TraceRow.__dataclass_fields__]
SWEEP_TOKEN_COLUMNS = ("pred_tokens", "gold_tokens")


def package_version() -> str:
    try:
        return version("bayes-wordseg")
    except PackageNotFoundError:
        return "unknown"


@dataclass(slots=True)
class RunResult:
    """Everything one segmentation run produced."""

    directory: Path
    output: SamplerOutput
    prediction: SegState
    report: Optional[EvalReport] = None
    files: List[Path] = field(default_factory=list)


@dataclass(slots=True)
class OracleResult:
    path: Path
    exact: np.ndarray
    empirical: np.ndarray

    @property
    def max_deviation(self) -> float:
        if not self.exact.size:
            return 0.0
        return float(np.max(np.abs(self.exact - self.empirical)))


def load_run_corpus(config: RunConfig) -> Corpus:
    if config.corpus.path is None:
        raise ValueError("corpus.path is required (use --corpus PATH)")
    return load_corpus(config.corpus.path, config.corpus.slice)


def initial_state(corpus: Corpus, config: RunConfig) -> SegState:
    if config.init.mode == "gold":
        return perturb_gold(corpus, config.init.perturbations, config.seed)
    return random_init(corpus, config.init.p_init, config.seed)


def segment(
    corpus: Corpus, config: RunConfig, vocab_prior: Optional[VocabPrior] = None
) -> Tuple[SamplerOutput, SegState]:
    """Sample from the configured starting point and reduce the samples to one segmentation."""

    params = config.model.to_params(corpus)
    output = run(
        corpus,
        params,
        config.schedule.to_schedule(),
        initial_state(corpus, config),
        model=config.model.kind,
        seed=config.seed,
        vocab_prior=vocab_prior,
        random_scan=config.schedule.random_scan,
        check_every=config.schedule.check_every,
        log_every=config.schedule.log_every,
    )
    if output.samples:
        prediction = aggregate(output.samples, corpus, config.output.aggregate)
    else:
        logger.warning("No samples collected, using the final state", extra={"seed": config.seed})
        prediction = output.final_state
    return output, prediction


def _write(path: Path, text: str, files: List[Path]) -> None:
    path.write_text(text, encoding="utf-8")
    files.append(path)
    logger.debug("Wrote output file", extra={"path": str(path)})


def format_trace(trace: List[TraceRow]) -> str:
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=TRACE_COLUMNS, lineterminator="\n")
    writer.writeheader()
    writer.writerows(asdict(row) for row in trace)
    return buffer.getvalue()


def format_top_words(state: SegState, k: int) -> str:
    rows = [
        {"rank": rank, "word": word, "count": count}
        for rank, (word, count) in enumerate(top_k_words(state, k), start=1)
    ]
    return format_rows(rows, ["rank", "word", "count"])


def write_manifest(directory: Path, command: str, config: RunConfig, files: List[Path], **extra: Any) -> Path:
    path = directory / "manifest.json"
    manifest = {
        "command": command,
        "version": package_version(),
        "seed": config.seed,
        "config": config.manifest(),
        "files": [item.name for item in files] + ["manifest.json"],
        **extra,
    }
    path.write_text(json.dumps(manifest, indent=2, default=str) + "\n", encoding="utf-8")
    return path


def _finish_run(
    command: str,
    corpus: Corpus,
    config: RunConfig,
    output: SamplerOutput,
    prediction: SegState,
    directory: Path,
) -> RunResult:
    directory.mkdir(parents=True, exist_ok=True)
    files: List[Path] = []
    _write(directory / "segmentation.txt", prediction.render(), files)
    _write(directory / "trace.csv", format_trace(output.trace), files)
    _write(directory / "top_words.tsv", format_top_words(prediction, config.output.top_k), files)

    report = None
    if corpus.has_gold:
        report = evaluate(prediction, corpus)
        _write(directory / "report.json", format_report(report, "json"), files)
        _write(directory / "report.tsv", format_report(report, "tsv"), files)
    else:
        logger.info("Corpus has no gold boundaries, skipping evaluation")

    files.append(
        write_manifest(
            directory,
            command,
            config,
            files,
            samples=len(output.samples),
            vocab_size=output.vocab_size,
            report=report.to_dict() if report else None,
        )
    )
    logger.info(
        "Finished run",
        extra={"command": command, "directory": str(directory), "F": report.F if report else None},
    )
    return RunResult(directory=directory, output=output, prediction=prediction, report=report, files=files)


def cmd_segment(config: RunConfig, corpus: Optional[Corpus] = None) -> RunResult:
    corpus = corpus if corpus is not None else load_run_corpus(config)
    vocab_prior = None
    if config.vocab.size:
        vocab_prior = build_vocab_prior(corpus, config.vocab.size, config.vocab.boost, config.vocab.seed)
    output, prediction = segment(corpus, config, vocab_prior)
    return _finish_run("segment", corpus, config, output, prediction, config.output.directory)


def cmd_perturb(config: RunConfig, k: int, corpus: Optional[Corpus] = None) -> RunResult:
    """Start from gold with ``k`` toggled positions and sample from there."""

    corpus = corpus if corpus is not None else load_run_corpus(config)
    corpus.require_gold()
    perturbed = config.with_overrides({"init.mode": "gold", "init.perturbations": k})
    output, prediction = segment(corpus, perturbed)
    return _finish_run("perturb", corpus, perturbed, output, prediction, perturbed.output.directory)


def cmd_vocab(config: RunConfig, v: int, boost: float, corpus: Optional[Corpus] = None) -> RunResult:
    corpus = corpus if corpus is not None else load_run_corpus(config)
    boosted = config.with_overrides({"vocab.size": v, "vocab.boost": boost})
    vocab_prior = build_vocab_prior(corpus, v, boost, boosted.vocab.seed)
    output, prediction = segment(corpus, boosted, vocab_prior)
    return _finish_run("vocab", corpus, boosted, output, prediction, boosted.output.directory)


def cmd_generate(config: RunConfig) -> Path:
    gen_config = config.generate.to_gen_config(config.model, config.seed)
    simulate = simulate_bigram if config.model.kind == "bigram" else simulate_unigram
    simulation = simulate(gen_config)
    directory = config.output.directory
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / config.generate.filename
    files: List[Path] = []
    _write(path, SegState(simulation.corpus, simulation.corpus.require_gold()).render(), files)
    write_manifest(
        directory,
        "generate",
        config,
        files,
        p_dollar=simulation.p_dollar,
        tokens=sum(simulation.word_counts.values()),
        types=len(simulation.word_counts),
    )
    logger.info("Generated corpus", extra={"path": str(path), "utterances": len(simulation.corpus)})
    return path


def cmd_oracle(config: RunConfig, corpus: Optional[Corpus] = None) -> OracleResult:
    """Exact boundary marginals next to the Gibbs estimates from the configured schedule."""

    corpus = corpus if corpus is not None else load_run_corpus(config)
    params = config.model.to_params(corpus)
    posterior = exact_posterior(corpus, params, config.model.kind)
    exact = exact_marginals(posterior)
    if corpus.num_sites:
        output, _ = segment(corpus, config)
        empirical = empirical_marginals(output.samples) if output.samples else output.final_state.flat_bits()
    else:
        empirical = np.zeros(0, dtype=np.float64)

    rows: List[Dict[str, Any]] = []
    site = 0
    for index, utterance in enumerate(corpus.utterances):
        for position in range(len(utterance) - 1):
            rows.append(
                {
                    "site": site,
                    "utterance": index,
                    "position": position,
                    "exact": f"{exact[site]:.6f}",
                    "empirical": f"{empirical[site]:.6f}",
                    "deviation": f"{abs(exact[site] - empirical[site]):.6f}",
                }
            )
            site += 1

    directory = config.output.directory
    directory.mkdir(parents=True, exist_ok=True)
    files: List[Path] = []
    path = directory / "oracle.tsv"
    _write(path, format_rows(rows, ["site", "utterance", "position", "exact", "empirical", "deviation"]), files)
    result = OracleResult(path=path, exact=exact, empirical=np.asarray(empirical, dtype=np.float64))
    write_manifest(directory, "oracle", config, files, max_deviation=result.max_deviation)
    logger.info("Wrote oracle marginals", extra={"path": str(path), "max_deviation": result.max_deviation})
    return result


def cmd_stats(config: RunConfig, corpus: Optional[Corpus] = None) -> Dict[str, Any]:
    corpus = corpus if corpus is not None else load_run_corpus(config)
    return corpus_stats(corpus).to_dict()


def grid_points(grid: Dict[str, List[float]]) -> List[Dict[str, float]]:
    names = sorted(grid)
    return [dict(zip(names, values)) for values in itertools.product(*(grid[name] for name in names))]


def _sweep_task(config_data: Dict[str, Any], point: Dict[str, float], seed: int, directory: str) -> Dict[str, Any]:
    """Run one grid point in a worker process; failures become an ``error`` entry."""

    row: Dict[str, Any] = {**point, "seed": seed, "error": ""}
    try:
        overrides: Dict[str, Any] = {f"model.{name}": value for name, value in point.items()}
        overrides.update({"seed": seed, "output.directory": directory})
        config = RunConfig.model_validate(config_data).with_overrides(overrides)
        result = cmd_segment(config)
        if result.report is None:
            raise ValueError("Sweeps need a corpus with gold boundaries")
        row.update(result.report.to_dict())
    except Exception as exc:  # noqa: BLE001 - recorded per row
        logger.exception("Sweep run failed", extra={"point": point, "seed": seed})
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


async def run_sweep(config: RunConfig) -> List[Dict[str, Any]]:
    """Run every (grid point, seed) pair on a bounded process pool."""

    if not config.sweep.grid:
        raise ValueError("The sweep grid is empty; provide --grid name=v1,v2 or sweep.grid in the config")
    points = grid_points(config.sweep.grid)
    jobs = [(point, seed) for point in points for seed in config.sweep.seeds]
    base = config.output.directory
    config_data = config.model_dump()
    logger.info("Starting sweep", extra={"runs": len(jobs), "workers": config.sweep.workers})

    loop = asyncio.get_running_loop()
    with ProcessPoolExecutor(max_workers=config.sweep.workers) as pool:
        futures = [
            loop.run_in_executor(pool, _sweep_task, config_data, point, seed, str(base / f"run-{index:03d}"))
            for index, (point, seed) in enumerate(jobs)
        ]
        results = await asyncio.gather(*futures, return_exceptions=True)

    rows: List[Dict[str, Any]] = []
    for (point, seed), result in zip(jobs, results):
        if isinstance(result, BaseException):
            logger.error("Sweep worker crashed", extra={"point": point, "seed": seed, "error": str(result)})
            rows.append({**point, "seed": seed, "error": f"{type(result).__name__}: {result}"})
        else:
            rows.append(result)
    return rows


def sweep_columns(config: RunConfig) -> List[str]:
    return ["run", *sorted(config.sweep.grid), "seed", *REPORT_KEYS, *SWEEP_TOKEN_COLUMNS, "error"]


async def cmd_sweep(config: RunConfig) -> Path:
    rows = await run_sweep(config)
    for index, row in enumerate(rows):
        row["run"] = f"run-{index:03d}"
    directory = config.output.directory
    directory.mkdir(parents=True, exist_ok=True)
    files: List[Path] = []
    path = directory / "sweep.tsv"
    _write(path, format_rows(rows, sweep_columns(config)), files)
    failures = sum(1 for row in rows if row["error"])
    write_manifest(directory, "sweep", config, files, runs=len(rows), failures=failures)
    logger.info("Finished sweep", extra={"path": str(path), "runs": len(rows), "failures": failures})
    return path


__all__ = [
    "OracleResult",
    "RunResult",
    "cmd_generate",
    "cmd_oracle",
    "cmd_perturb",
    "cmd_segment",
    "cmd_stats",
    "cmd_sweep",
    "cmd_vocab",
    "format_top_words",
    "format_trace",
    "grid_points",
    "initial_state",
    "load_run_corpus",
    "run_sweep",
    "segment",
    "sweep_columns",
    "write_manifest",
]
