"""
SDG publication mapper.

Main entry point. Each subcommand is one step of the mapping workflow
(map, train, score, combine, evaluate, gate, ...) and composes with the
others through files; the workflows live in the core/ package.

Usage:
    python run_pipeline.py <command> [options]

For more information:
    python run_pipeline.py --help
    python run_pipeline.py <command> --help

Exit status: 0 success, 1 usage or configuration error, 2 data error,
3 gate rejection.
"""

from __future__ import annotations

import sys
from typing import Sequence

from core import COMMANDS, parse_args, setup_logging
from sdg.common import ConfigurationError, DataError, SdgMapperError, TrainingError, UsageError

EXIT_USAGE = 1
EXIT_DATA = 2


def run(argv: Sequence[str] | None = None) -> int:
    """
    Run one subcommand.

    Returns:
        Process exit status
    """
    try:
        config, args = parse_args(argv)
        setup_logging(config.log_level)
        return COMMANDS[config.command](config, args)
    except SystemExit as e:
        # --help and --version
        return e.code if isinstance(e.code, int) else 0
    except (UsageError, ConfigurationError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, TrainingError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA
    except FileNotFoundError as e:
        print(f"error: file not found: {e.filename}", file=sys.stderr)
        return EXIT_DATA
    except (OSError, SdgMapperError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA


def main() -> None:
    """Main entry point for the console script."""
    sys.exit(run())


if __name__ == "__main__":
    main()
