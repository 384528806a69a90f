"""CLI entry point for the co-writing usage analysis pipeline."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from pydantic import ValidationError

from src import __version__
from src.config import RunConfig
from src.graph import STAGES, run_pipeline
from src.utils import write_text

EXIT_USAGE = 1


class _Parser(argparse.ArgumentParser):
    """argparse with usage errors mapped to exit code 1."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def _k_range(value: str) -> tuple[int, int]:
    try:
        lo, hi = (int(v) for v in value.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError("expected MIN:MAX, e.g. 2:10") from None
    return lo, hi


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON run configuration; flags override it")
    common.add_argument("--data-dir", type=Path, help="Directory of session logs (.jsonl or .csv)")
    common.add_argument("--output-dir", type=Path, help="Where outputs are written (default: out)")
    common.add_argument("--session-index", type=Path, help="CSV of sessionId,genre")
    common.add_argument("--survey", dest="survey_path", type=Path, help="Survey CSV (sessionId,Q1..Qn)")
    common.add_argument("--window-seconds", type=int)
    common.add_argument("--scaling", choices=["pooled", "per-series"])
    common.add_argument("--drop-partial-window", action="store_true", default=None)
    common.add_argument("--k-range", type=_k_range, metavar="MIN:MAX")
    common.add_argument("--k", type=int, help="Skip the elbow scan and fit this many clusters")
    common.add_argument("--seed", type=int)
    common.add_argument("--n-restarts", type=int)
    common.add_argument("--max-iter", type=int)
    common.add_argument("--dba-max-iter", type=int)
    common.add_argument("--barycenter-length", type=int)
    common.add_argument("--dump-distance-matrix", action="store_true", default=None)
    common.add_argument("--similarity", dest="similarity_provider", choices=["lexical", "http"])
    common.add_argument("--embed-url", help="Similarity endpoint (default: $EMBED_URL)")
    common.add_argument("--similarity-cache", type=Path)
    common.add_argument("--max-in-flight", type=int)
    common.add_argument("--holm", action="store_true", default=None, help="Holm-adjust pairwise p-values")
    common.add_argument("--jobs", type=int, help="Parallel workers")
    common.add_argument("-v", "--verbose", action="store_true", help="Enable verbose logging")

    parser = _Parser(
        prog="cowriting-patterns",
        description="Cluster AI-usage patterns in human-AI co-writing logs",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in STAGES:
        sub.add_parser(name, parents=[common], help=f"Run the pipeline through '{name}'")
    return parser


_CONFIG_FIELDS = (
    "data_dir", "output_dir", "session_index", "survey_path", "window_seconds", "scaling",
    "drop_partial_window", "k_range", "k", "seed", "n_restarts", "max_iter", "dba_max_iter",
    "barycenter_length", "dump_distance_matrix", "similarity_provider", "embed_url",
    "similarity_cache", "max_in_flight", "holm", "jobs",
)


def main(argv: list[str] | None = None):
    parser = build_parser()
    args = parser.parse_args(argv)

    level = logging.DEBUG if args.verbose else logging.INFO
    logging.basicConfig(
        level=level,
        format="%(asctime)s %(name)s %(levelname)s: %(message)s",
        datefmt="%H:%M:%S",
    )

    overrides = {name: getattr(args, name) for name in _CONFIG_FIELDS}
    try:
        config = RunConfig.load(args.config, **overrides).resolve()
    except ValidationError as e:
        print(f"Error: invalid configuration:\n{e}", file=sys.stderr)
        sys.exit(EXIT_USAGE)
    except (OSError, ValueError) as e:
        print(f"Error: {e}", file=sys.stderr)
        sys.exit(EXIT_USAGE)

    print(f"Processing: {config.data_dir} ({args.command})")
    write_text(config.output_dir / "run_config.json", config.model_dump_json(indent=2) + "\n")

    state = run_pipeline(config, args.command)

    if state.error:
        print(f"Error: {state.error}", file=sys.stderr)
        sys.exit(state.exit_code or 2)

    for notice in state.notices:
        print(f"Notice: {notice}")
    print(f"Wrote {len(state.artifacts)} files (config {config.config_hash()}, version {__version__})")
    print(f"Output: {config.output_dir}")


if __name__ == "__main__":
    main()
