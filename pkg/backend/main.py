# backend/main.py
"""Command-line entry point of the localization lab."""
import argparse
import sys
from typing import List, Optional

from loguru import logger
from pydantic import ValidationError

from backend.routers import generate, play, scaling, verify, zeta
from backend.services.errors import LocalizationLabError

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rgg-localization",
        description="Localization game on random geometric graphs: simulations, estimates and validators.",
    )
    parser.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    subparsers = parser.add_subparsers(dest="command", required=True)
    # Include all routers
    for router in (generate, play, zeta, verify, scaling):
        router.register(subparsers)
    return parser


def configure_logging(level: str):
    logger.remove()
    logger.add(sys.stderr, level=level, format="{time:HH:mm:ss} | {level:<7} | {message}")


def cli_dispatch(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_USAGE
    configure_logging(args.log_level)
    logger.debug(f"command: {args.command}")
    try:
        return args.handler(args)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_USAGE
    except (ValidationError, ValueError) as e:
        logger.error(f"invalid arguments: {e}")
        return EXIT_USAGE
    except LocalizationLabError as e:
        logger.error(str(e))
        return EXIT_FAILED


def main():
    sys.exit(cli_dispatch())


if __name__ == "__main__":
    main()
