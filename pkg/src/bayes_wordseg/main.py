"""Command line entry point for the segmentation experiments."""
from __future__ import annotations

import argparse
import asyncio
import json
import logging
import math
import sys
from typing import Any, Dict, Iterable, List, Optional, Tuple

from .config import SWEEPABLE_PARAMETERS, RunConfig, load_config
from .errors import CorpusError, WordsegError
from .runner import cmd_generate, cmd_oracle, cmd_perturb, cmd_segment, cmd_stats, cmd_sweep, cmd_vocab

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2

COMMANDS = ("segment", "sweep", "perturb", "vocab", "generate", "oracle", "stats")

# argparse destination -> dotted configuration key
_FLAG_TO_KEY = {
    "model": "model.kind",
    "corpus": "corpus.path",
    "slice": "corpus.slice",
    "alpha0": "model.alpha0",
    "alpha1": "model.alpha1",
    "p_hash": "model.p_hash",
    "rho": "model.rho",
    "p_dollar": "model.p_dollar",
    "phoneme_dist": "model.phoneme_dist",
    "burn_in": "schedule.burn_in",
    "iters": "schedule.iterations",
    "sample_every": "schedule.sample_every",
    "gamma_max": "schedule.gamma_max",
    "gamma_steps": "schedule.gamma_steps",
    "random_scan": "schedule.random_scan",
    "check_every": "schedule.check_every",
    "init": "init.mode",
    "p_init": "init.p_init",
    "seed": "seed",
    "aggregate": "output.aggregate",
    "top_k": "output.top_k",
    "out": "output.directory",
    "seeds": "sweep.seeds",
    "workers": "sweep.workers",
    "n_utterances": "generate.n_utterances",
    "alphabet": "generate.alphabet",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _boost(value: str) -> float:
    try:
        boost = float(value)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"invalid boost {value!r}") from exc
    if math.isnan(boost) or boost < 1:
        raise argparse.ArgumentTypeError("boost must be at least 1 (or inf)")
    return boost


def _grid_entry(value: str) -> Tuple[str, List[float]]:
    name, sep, values = value.partition("=")
    name = name.strip()
    if not sep or name not in SWEEPABLE_PARAMETERS:
        raise argparse.ArgumentTypeError(
            f"expected NAME=V1,V2,... with NAME in {', '.join(SWEEPABLE_PARAMETERS)}, received {value!r}"
        )
    try:
        numbers = [float(item) for item in values.split(",") if item.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"invalid grid values in {value!r}") from exc
    if not numbers:
        raise argparse.ArgumentTypeError(f"grid entry {value!r} has no values")
    if not all(math.isfinite(number) for number in numbers):
        raise argparse.ArgumentTypeError(f"grid values must be finite, received {value!r}")
    return name, numbers


def _add_common_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", dest="config_path", help="Path to a configuration file (YAML/JSON/TOML)")
    parser.add_argument("--log-level", default="INFO", help="Logging level (default: INFO)")
    parser.add_argument("--model", choices=["unigram", "bigram"])
    parser.add_argument("--corpus", help="Brent-format corpus file")
    parser.add_argument("--slice", type=int, help="Keep only the first N utterances")
    parser.add_argument("--alpha0", type=float)
    parser.add_argument("--alpha1", type=float)
    parser.add_argument("--p-hash", type=float)
    parser.add_argument("--rho", type=float)
    parser.add_argument("--p-dollar", help="Utterance-boundary probability; 'prior' samples it when generating")
    parser.add_argument("--phoneme-dist", choices=["uniform", "empirical"])
    parser.add_argument("--burn-in", type=int)
    parser.add_argument("--iters", type=int, help="Sampling iterations after burn-in")
    parser.add_argument("--sample-every", type=int)
    parser.add_argument("--gamma-max", type=float)
    parser.add_argument("--gamma-steps", type=int)
    parser.add_argument("--random-scan", action="store_true", default=None)
    parser.add_argument("--check-every", type=int, help="Rebuild counts every N sweeps and compare")
    parser.add_argument("--init", choices=["random", "gold"])
    parser.add_argument("--p-init", type=float)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--aggregate", choices=["final", "marginal"])
    parser.add_argument("--top-k", type=int)
    parser.add_argument("--out", help="Output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bayes-wordseg", description="Bayesian unsupervised word segmentation")
    subparsers = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    helps = {
        "segment": "Sample a segmentation and score it against gold",
        "sweep": "Run a parameter grid, one TSV row per run",
        "perturb": "Start from gold with k toggled boundaries",
        "vocab": "Boost hypotheses made of known words",
        "generate": "Write a synthetic corpus drawn from the model",
        "oracle": "Compare Gibbs marginals with exact enumeration",
        "stats": "Print corpus statistics as JSON",
    }
    commands = {name: subparsers.add_parser(name, help=helps[name]) for name in COMMANDS}
    for sub in commands.values():
        _add_common_arguments(sub)

    commands["sweep"].add_argument(
        "--grid", action="append", type=_grid_entry, default=[], help="NAME=V1,V2,... (repeatable)"
    )
    commands["sweep"].add_argument("--seeds", type=int, nargs="+")
    commands["sweep"].add_argument("--workers", type=int)
    commands["perturb"].add_argument("--k", type=int, required=True, help="Number of toggled positions")
    commands["vocab"].add_argument("--vocab-size", type=int, required=True)
    commands["vocab"].add_argument("--boost", type=_boost, required=True, help="Boost factor (accepts inf)")
    commands["generate"].add_argument("--n-utterances", type=int)
    commands["generate"].add_argument("--alphabet", help="Phonemes of the uniform phoneme distribution")
    return parser


def parse_args(argv: Optional[Iterable[str]] = None) -> argparse.Namespace:
    return build_parser().parse_args(list(argv) if argv is not None else None)


def build_overrides(args: argparse.Namespace) -> Dict[str, Any]:
    """Translate the flags that were given into dotted configuration overrides."""

    overrides: Dict[str, Any] = {}
    values = vars(args)
    for dest, key in _FLAG_TO_KEY.items():
        value = values.get(dest)
        if value is not None and dest != "p_dollar":
            overrides[key] = value
    p_dollar = values.get("p_dollar")
    if p_dollar is not None:
        if p_dollar.lower() == "prior":
            if args.command != "generate":
                raise ValueError("--p-dollar prior is only meaningful for the generate command")
            overrides["generate.p_dollar"] = None
        else:
            try:
                probability = float(p_dollar)
            except ValueError as exc:
                raise ValueError(f"--p-dollar expects a probability or 'prior', received {p_dollar!r}") from exc
            overrides["model.p_dollar"] = probability
            if args.command == "generate":
                overrides["generate.p_dollar"] = probability
    if values.get("grid"):
        overrides["sweep.grid"] = {name: numbers for name, numbers in args.grid}
    return overrides


def _print_json(data: Any) -> None:
    print(json.dumps(data, indent=2, default=str))


def dispatch(args: argparse.Namespace, config: RunConfig) -> int:
    command = args.command
    if command == "segment":
        result = cmd_segment(config)
        _print_json(result.report.to_dict() if result.report else {"directory": result.directory})
    elif command == "perturb":
        result = cmd_perturb(config, args.k)
        _print_json(result.report.to_dict() if result.report else {"directory": result.directory})
    elif command == "vocab":
        result = cmd_vocab(config, args.vocab_size, args.boost)
        _print_json(result.report.to_dict() if result.report else {"directory": result.directory})
    elif command == "sweep":
        print(asyncio.run(cmd_sweep(config)))
    elif command == "generate":
        print(cmd_generate(config))
    elif command == "oracle":
        oracle = cmd_oracle(config)
        _print_json({"path": oracle.path, "max_deviation": oracle.max_deviation})
    elif command == "stats":
        _print_json(cmd_stats(config))
    else:  # pragma: no cover - argparse restricts the choices
        raise ValueError(f"Unknown command '{command}'")
    return EXIT_OK


def main(argv: Optional[Iterable[str]] = None) -> int:
    try:
        args = parse_args(argv)
    except SystemExit as exc:
        if exc.code is None:
            return EXIT_OK
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE

    logging.basicConfig(level=getattr(logging, args.log_level.upper(), logging.INFO))
    try:
        config = load_config(args.config_path, build_overrides(args))
        return dispatch(args, config)
    except (ValueError, FileNotFoundError, CorpusError) as exc:
        print(f"bayes-wordseg: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except WordsegError as exc:
        logger.debug("Run failed", exc_info=True)
        print(f"bayes-wordseg: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except KeyboardInterrupt:  # pragma: no cover - manual interrupt
        logger.info("Run interrupted by user")
        return EXIT_RUNTIME


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
