"""
Argument parsing and configuration.

This module builds the subcommand parser and copies parsed values into
frozen configuration objects before they reach domain code.
"""

from __future__ import annotations

import argparse
from dataclasses import dataclass
from typing import Sequence

from sdg.classifier import Hyperparams, TfidfConfig
from sdg.combiner import DEFAULT_THETA
from sdg.common import ConfigurationError, UsageError
from sdg.evaluation import GateConfig

OUTPUT_FORMATS = ("text", "machine")
LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")


@dataclass(frozen=True)
class RunConfig:
    """
    Settings shared by every subcommand.

    Attributes:
        command: Subcommand name
        seed: Seed for every random choice of the run
        threads: Number of worker processes for map and train
        output_format: "text" (aligned tables) or "machine" (JSON lines)
        log_level: Logging level name
        progress_every: Log progress every N completed tasks
    """

    command: str
    seed: int = 0
    threads: int = 1
    output_format: str = "text"
    log_level: str = "INFO"
    progress_every: int = 10

    def __post_init__(self) -> None:
        if self.threads < 1:
            raise ConfigurationError(f"--threads must be >= 1, got {self.threads}")
        if self.output_format not in OUTPUT_FORMATS:
            raise ConfigurationError(f"--format must be one of {OUTPUT_FORMATS}")

    @property
    def machine(self) -> bool:
        return self.output_format == "machine"


class CommandParser(argparse.ArgumentParser):
    """ArgumentParser that raises UsageError instead of exiting."""

    def error(self, message: str):
        raise UsageError(message)


def _number(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None


def _sdg_list(text: str) -> list[int]:
    try:
        return [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated SDG ids, got {text!r}") from None


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("global options")
    g.add_argument("--seed", type=int, default=0, help="Seed for sampling and shuffling")
    g.add_argument(
        "--threads", type=int, default=1, help="Worker processes for map and train"
    )
    g.add_argument(
        "--format",
        dest="output_format",
        choices=OUTPUT_FORMATS,
        default="text",
        help="Result format on stdout: aligned text or JSON lines",
    )
    g.add_argument(
        "--log-level",
        type=str.upper,
        choices=LOG_LEVELS,
        default="INFO",
        help="Diagnostics level (stderr)",
    )
    g.add_argument(
        "--progress-every",
        type=int,
        default=10,
        help="Log progress every N completed tasks (0 = off)",
    )
    return common


def _add_training_options(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("model options")
    g.add_argument("--ratio", type=float, default=10.0, help="Negatives sampled per positive")
    g.add_argument("--min-df", type=int, default=2, help="Minimum document frequency of a term")
    g.add_argument("--max-features", type=int, default=50_000, help="Vocabulary size cap")
    g.add_argument("--iterations", type=int, default=500, help="Gradient descent steps")
    g.add_argument("--learning-rate", type=float, default=0.5, help="Gradient descent step size")
    g.add_argument("--l2", type=float, default=1e-4, help="L2 penalty strength")
    g.add_argument(
        "--threshold", type=_number, default=DEFAULT_THETA, help="Stored default theta"
    )
    g.add_argument("--sdgs", type=_sdg_list, default=None, help="Train only these SDGs (e.g. 1,3,13)")


def create_argument_parser() -> argparse.ArgumentParser:
    """
    Create and configure the argument parser.

    Returns:
        Configured ArgumentParser with one subparser per subcommand
    """
    common = _common_parser()
    ap = CommandParser(
        prog="sdg-mapper",
        description="Map publications to Sustainable Development Goals with Boolean "
        "query banks and a weakly supervised classifier",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Run the bundled query bank
  sdg-mapper map --corpus corpus.jsonl --queries data/queries --out query.jsonl

  # Train on the query output, score, and combine at theta 0.95
  sdg-mapper train --corpus corpus.jsonl --mapping query.jsonl --model-out model.json
  sdg-mapper score --corpus corpus.jsonl --model model.json --out scores.jsonl
  sdg-mapper combine --mapping query.jsonl --scores scores.jsonl --out combined.jsonl

  # Acceptance test for one query (exit 3 on reject)
  sdg-mapper gate --precision 0.93 --recall 0.71 --sample 120
        """,
    )
    sub = ap.add_subparsers(dest="command", metavar="COMMAND", parser_class=CommandParser)
    sub.required = True

    def add(name: str, help: str) -> argparse.ArgumentParser:
        return sub.add_parser(name, help=help, description=help, parents=[common])

    p = add("ingest", "Validate a corpus file and summarise it")
    p.add_argument("--corpus", required=True)
    p.add_argument("--index-out", help="Write the canonical inverted index here")

    p = add("parse", "Check a query bank and print its canonical form")
    p.add_argument("--queries", required=True, help="Bank file or directory of *.txt files")

    p = add("map", "Run a query bank over a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--queries", required=True)
    p.add_argument("--out", required=True, help="Mapping file to write")
    p.add_argument("--naive", action="store_true", help="Scan records instead of using the index")

    p = add("train", "Fit TF-IDF and per-SDG models from query output")
    p.add_argument("--corpus", required=True)
    p.add_argument("--mapping", required=True, help="Query-stage mapping file")
    p.add_argument("--model-out", required=True)
    _add_training_options(p)

    p = add("score", "Write per-SDG probabilities for every record")
    p.add_argument("--corpus", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)

    p = add("combine", "Union query assignments with thresholded model predictions")
    p.add_argument("--mapping", required=True)
    p.add_argument("--scores", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--theta", type=_number, default=DEFAULT_THETA)
    p.add_argument("--include-sdg17", action="store_true", help="Report SDG 17 as well")

    p = add("report-provenance", "Per-SDG counts of query and model assignments")
    p.add_argument("--mapping", required=True)
    p.add_argument("--include-sdg17", action="store_true")
    p.add_argument("--plot-data", help="Write sdg,query_count,ml_count CSV here")

    p = add("evaluate", "F1 matrix of mappings against validation datasets")
    p.add_argument(
        "--method",
        action="append",
        required=True,
        metavar="NAME=MAPPING",
        help="Method name and mapping file (repeatable)",
    )
    p.add_argument(
        "--dataset",
        action="append",
        required=True,
        metavar="[NAME=]PATH",
        help="Validation dataset (repeatable)",
    )
    p.add_argument("--per-class", action="store_true", help="Also print per-SDG F1 per dataset")

    p = add("gate", "Accept or reject a query on precision, recall and sample size")
    p.add_argument("--precision", type=_number, required=True)
    p.add_argument("--recall", type=_number, required=True)
    p.add_argument("--sample", type=int, required=True)
    p.add_argument("--min-precision", type=_number, default=0.90)
    p.add_argument("--min-recall", type=_number, default=0.60)
    p.add_argument("--min-sample", type=int, default=100)

    p = add("sample", "Draw a review worksheet for one SDG")
    p.add_argument("--mapping", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--sdg", type=int, required=True)
    p.add_argument("-n", "--size", type=int, default=100)
    p.add_argument("--out", required=True, help="Worksheet CSV to write")

    p = add("precision", "Estimate precision from a filled worksheet")
    p.add_argument("--worksheet", required=True)

    p = add("recall", "Share of a recall set that a mapping assigns to an SDG")
    p.add_argument("--mapping", required=True)
    p.add_argument("--sdg", type=int, required=True)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--recall-set", help="Validation dataset whose items all carry the SDG")
    src.add_argument("--journal", action="append", help="Specialised journal (repeatable)")
    p.add_argument("--corpus", help="Corpus to draw journal records from (with --journal)")

    p = add("suggest-terms", "Rank candidate terms and phrases from a matched set")
    p.add_argument("--corpus", required=True)
    p.add_argument("--ids", required=True, help="Matched ids, one per line, or a mapping file")
    p.add_argument("--sdg", type=int, help="With a mapping file: take the records of this SDG")
    p.add_argument("-k", "--top", type=int, default=30)
    p.add_argument("--query", help="Existing query; covered terms are flagged")

    p = add("expand-citations", "Records one citation hop from a result set")
    p.add_argument("--corpus", required=True)
    p.add_argument("--ids", required=True, help="Result ids, one per line, or a mapping file")
    p.add_argument("--sdg", type=int, help="With a mapping file: take the records of this SDG")

    p = add("journal-report", "Journals ranked by share of records mapped to an SDG")
    p.add_argument("--mapping", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--sdg", type=int, required=True)
    p.add_argument("--top", type=int, default=0, help="Rows to print (0 = all)")

    p = add("compare", "Per-SDG counts of two mappings and their intersection")
    p.add_argument("--a", required=True, metavar="MAPPING")
    p.add_argument("--b", required=True, metavar="MAPPING")
    p.add_argument("--label-a", default="A")
    p.add_argument("--label-b", default="B")
    p.add_argument("--sdgs", type=_sdg_list, default=None)
    p.add_argument("--csv", help="Also write the table as CSV")

    p = add("synth", "Write a synthetic corpus and validation dataset")
    p.add_argument("--out", required=True, help="Corpus file to write")
    p.add_argument("--validation-out", help="Validation dataset to write")
    p.add_argument("--records", type=int, default=1200)
    p.add_argument("--validation-size", type=int, default=300)

    p = add("key-phrases", "Highest-weight terms of each SDG model")
    p.add_argument("--model", required=True)
    p.add_argument("--sdg", type=int, help="Only this SDG")
    p.add_argument("-k", "--top", type=int, default=20)

    return ap


def parse_args(argv: Sequence[str] | None = None) -> tuple[RunConfig, argparse.Namespace]:
    """
    Parse command-line arguments and create configuration.

    Returns:
        (RunConfig, namespace with the subcommand's own options)

    Raises:
        UsageError: On unknown subcommands or malformed options
        ConfigurationError: On out-of-range global options
    """
    parser = create_argument_parser()
    args = parser.parse_args(argv)
    config = RunConfig(
        command=args.command,
        seed=args.seed,
        threads=args.threads,
        output_format=args.output_format,
        log_level=args.log_level,
        progress_every=args.progress_every,
    )
    return config, args


def tfidf_config(args: argparse.Namespace) -> TfidfConfig:
    return TfidfConfig(min_df=args.min_df, max_features=args.max_features)


def hyperparams(args: argparse.Namespace, seed: int) -> Hyperparams:
    return Hyperparams(
        l2=args.l2,
        learning_rate=args.learning_rate,
        iterations=args.iterations,
        seed=seed,
        negative_ratio=args.ratio,
        threshold=args.threshold,
    )


def gate_config(args: argparse.Namespace) -> GateConfig:
    return GateConfig(args.min_precision, args.min_recall, args.min_sample)
