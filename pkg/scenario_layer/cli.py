"""
Command-line entry point.

    probgeo run <config>        run a scenario, write CSV outputs
    probgeo validate <config>   parse and validate a config only
    probgeo list-scenarios      show the scenario table

Exit status: 0 when every check passes, 1 for a failed check or a runtime
error, 2 for a config error.
"""

import argparse
import logging
import sys

from probability_geometry.errors import GeometryError

from .config import load_config
from .errors import ConfigError, OutputError
from .runner import run
from .scenarios import list_scenarios

logger = logging.getLogger("scenario_layer.cli")

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_CONFIG = 2


def build_parser():
    parser = argparse.ArgumentParser(
        prog="probgeo",
        description="Run probability-geometry scenarios and write their residual reports as CSV",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="Log per-step and per-relation detail")
    commands = parser.add_subparsers(dest="command", required=True)

    run_parser = commands.add_parser("run", help="Run the scenario described by a config file")
    run_parser.add_argument("config", help="Path to a scenario config file")

    validate_parser = commands.add_parser("validate", help="Check a config file without running it")
    validate_parser.add_argument("config", help="Path to a scenario config file")

    commands.add_parser("list-scenarios", help="List the available scenarios")
    return parser


def _command_run(args):
    config = load_config(args.config)
    result = run(config)
    for line in result.summary_lines():
        print(line)
    print(f"Outputs written to {result.output_dir}")
    return result.exit_code


def _command_validate(args):
    config = load_config(args.config)
    print(f"OK: {config.description}")
    for section, key, value in config.parameters:
        print(f"  {section}.{key} = {value}")
    return EXIT_PASS


def _command_list(args):
    for name, description in list_scenarios():
        print(f"{name:20s} {description}")
    return EXIT_PASS


COMMANDS = {
    "run": _command_run,
    "validate": _command_validate,
    "list-scenarios": _command_list,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s [%(name)s] %(levelname)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        logger.error(f"Config error: {exc}")
        print(f"Error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (GeometryError, OutputError) as exc:
        logger.error(f"{type(exc).__name__}: {exc}")
        print(f"Error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
