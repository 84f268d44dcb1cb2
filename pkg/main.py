"""
edc-classifier - Main Entry Point
Symbolic binary classification by equation discovery
"""

import logging
import sys

from src.cli.commands import build_parser, run


def setup_logging(verbose: bool = False, quiet: bool = False):
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    logging.basicConfig(
        level=level,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


def main():
    """Main entry point"""
    args = build_parser().parse_args()
    setup_logging(args.verbose, args.quiet)
    sys.exit(run(args))


if __name__ == "__main__":
    main()
