"""
Command line entry point for gibbsposterior
Verbs: run <config> and validate <config>
"""

import argparse
import logging
import os
import sys
from typing import List, Optional

from .config import load_config, summarize, validate
from .errors import ConfigError, GibbsPosteriorError
from .reports import ReportWriter, format_summary

logger = logging.getLogger(__name__)

ENV_LOG_LEVEL = "GIBBSPOST_LOG_LEVEL"
ENV_DEBUG = "GIBBSPOST_DEBUG"

EXIT_PASS = 0
EXIT_THRESHOLD = 1
EXIT_ERROR = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gibbspost",
        description="Gibbs posterior consistency checks on mixing shifts of finite type",
    )
    parser.add_argument(
        "--log-level",
        default=None,
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        help=f"Logging level (default: ${ENV_LOG_LEVEL} or WARNING)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="Run a scenario config and write its reports")
    run.add_argument("config", help="Path to the scenario JSON config")
    run.add_argument("--output-dir", default=None, help="Report directory (overrides config and env)")
    run.add_argument("--threads", type=int, default=1, help="Worker threads for replicates")
    run.add_argument("--seed", type=int, default=None, help="Master seed (overrides config)")

    check = sub.add_parser("validate", help="Dry-run a config without writing anything")
    check.add_argument("config", help="Path to the scenario JSON config")
    return parser


def configure_logging(level: Optional[str] = None) -> None:
    if os.environ.get(ENV_DEBUG, "") not in ("", "0"):
        level = "DEBUG"
    level = level or os.environ.get(ENV_LOG_LEVEL, "WARNING")
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.WARNING),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


def cmd_run(args: argparse.Namespace) -> int:
    try:
        config = load_config(args.config, output_dir=args.output_dir, seed=args.seed)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_ERROR
    except GibbsPosteriorError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_ERROR

    writer = ReportWriter(config.output_dir / config.scenario, config.header())
    runner = config.runner(writer=writer, threads=args.threads)
    logger.info("running %s, output in %s", config.scenario, writer.output_dir)
    result, success = runner.execute(**config.inputs)
    print(format_summary(result.to_dict()))
    if result.error is not None:
        return EXIT_ERROR
    return EXIT_PASS if success else EXIT_THRESHOLD


def cmd_validate(args: argparse.Namespace) -> int:
    diagnostics = validate(args.config)
    if diagnostics:
        for line in diagnostics:
            print(f"diagnostic: {line}")
        return EXIT_ERROR
    for line in summarize(load_config(args.config)):
        print(line)
    print("config is valid")
    return EXIT_PASS


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)
    if args.command == "run":
        return cmd_run(args)
    return cmd_validate(args)


if __name__ == "__main__":
    sys.exit(main())
