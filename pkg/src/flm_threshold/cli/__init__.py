"""
Command-line interface

Exit codes: 0 ok, 1 runtime failure, 2 configuration validation error,
3 acceptance verdict failed.
"""

import logging
from typing import Optional, Sequence

from ..core.exceptions import AcceptanceFailure, ConfigValidationError, FLMError
from ..core.logging_setup import configure_logging
from .commands import COMMAND_HANDLERS
from .parser import build_parser

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_CONFIG = 2
EXIT_ACCEPTANCE = 3

logger = logging.getLogger(__name__)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Parse arguments, run one subcommand and map errors to exit codes"""
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.log_level)

    handler = COMMAND_HANDLERS[args.command]
    try:
        return handler(args)
    except ConfigValidationError as e:
        logger.error(f"Invalid configuration: {e}")
        return EXIT_CONFIG
    except AcceptanceFailure as e:
        logger.error(f"Acceptance failed: {e}")
        return EXIT_ACCEPTANCE
    except (FLMError, OSError) as e:
        logger.error(f"{args.command} failed: {e}")
        return EXIT_RUNTIME


__all__ = ['main', 'EXIT_OK', 'EXIT_RUNTIME', 'EXIT_CONFIG', 'EXIT_ACCEPTANCE']
