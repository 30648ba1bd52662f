import argparse
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path
from typing import Any, Optional, Sequence

import dotenv

from hclp.commands import EXIT_ERROR, CommandResult, CommandRunner, ResultEnvelope
from hclp.errors import ConfigurationError, HclpError
from hclp.models import Combiner, PreferenceStatement, parse_query
from hclp.oracle import OracleSettings
from hclp.problem import load_problem
from hclp.reduction import Cnf3

logger = logging.getLogger(__name__)

_INTERNAL_ARGS = {"command", "verbose", "oracle_cap", "tie"}

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


def configure_logging(level: Optional[str] = None, verbose: bool = False) -> None:
    """Configure logging.

    Standard output carries only the JSON envelope, so records go to
    standard error.

    Raises:
        ConfigurationError: The level is not a standard logging level name.
    """
    if level is None:
        level = "DEBUG" if verbose else os.getenv("HCLP_LOG_LEVEL") or "WARNING"
    level = level.strip().upper()
    if level not in LOG_LEVELS:
        raise ConfigurationError(
            f"HCLP_LOG_LEVEL must be one of {', '.join(LOG_LEVELS)} (got {level!r})"
        )
    logging.basicConfig(
        level=level,
        format="%(asctime)s - %(levelname)s - %(name)s - %(message)s",
        stream=sys.stderr,
    )


def _add_problem(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("problem", type=Path, help="problem file (JSON)")


def _add_model_class(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--max-level-size",
        type=int,
        default=None,
        help="at most T evaluations per level (defaults to the problem file)",
    )
    parser.add_argument(
        "--full-sigma", action="store_true", help="only models using every evaluation"
    )
    parser.add_argument(
        "--equivalence",
        action="store_true",
        help="levels are the classes of the problem file's partition",
    )


def _add_reduction(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--dimacs", type=Path, required=True, help="3-CNF in DIMACS")
    parser.add_argument("--t", type=int, required=True, help="level-size bound (>= 2)")
    parser.add_argument(
        "--combiner",
        choices=[c.value for c in Combiner],
        default=Combiner.SUM.value,
        help="level combiner of the generated table",
    )


def build_parser() -> argparse.ArgumentParser:
    """The command-line surface."""
    parser = argparse.ArgumentParser(
        prog="hclp",
        description="Consistency and deduction for lexicographic preference models.",
    )
    parser.add_argument("--verbose", action="store_true", help="debug logging")
    parser.add_argument(
        "--oracle-cap",
        type=int,
        default=None,
        help="largest evaluation count the exhaustive oracle accepts",
    )
    parser.add_argument(
        "--tie",
        type=lambda value: tuple(name.strip() for name in value.split(",")),
        default=None,
        help="comma-separated evaluation order for Cons-check tie breaking",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    for name, help_text in [
        ("check", "is the problem consistent"),
        ("mib", "maximal inconsistency base"),
        ("repair", "drop the inconsistency base and add the non-strict closure"),
        ("strong-check", "is some model using every evaluation consistent"),
    ]:
        _add_problem(subparsers.add_parser(name, help=help_text))

    for name, help_text in [
        ("deduce", "is the query entailed"),
        ("strong-deduce", "is the query entailed by models using every evaluation"),
    ]:
        sub = subparsers.add_parser(name, help=help_text)
        _add_problem(sub)
        sub.add_argument("--query", required=True, help='e.g. "alpha <= beta"')

    brute = subparsers.add_parser(
        "brute-deduce", help="entailment by exhaustive enumeration"
    )
    _add_problem(brute)
    brute.add_argument("--query", required=True, help='e.g. "alpha <= beta"')
    _add_model_class(brute)

    enumerate_parser = subparsers.add_parser("enumerate", help="enumerate models")
    _add_problem(enumerate_parser)
    _add_model_class(enumerate_parser)
    enumerate_parser.add_argument(
        "--count-only", action="store_true", help="print only the number of models"
    )

    translate = subparsers.add_parser(
        "translate", help="convert between preference and ordering statements"
    )
    _add_problem(translate)
    direction = translate.add_mutually_exclusive_group(required=True)
    direction.add_argument("--to-ordering", action="store_true")
    direction.add_argument("--from-ordering", action="store_true")

    reduce_parser = subparsers.add_parser(
        "reduce-3sat", help="build the entailment instance for a 3-CNF formula"
    )
    _add_reduction(reduce_parser)
    reduce_parser.add_argument(
        "--emit", type=Path, default=None, help="write the instance as a problem file"
    )

    verify = subparsers.add_parser(
        "verify-reduction", help="compare satisfiability with non-entailment"
    )
    _add_reduction(verify)
    return parser


def _arguments(args: argparse.Namespace) -> dict[str, Any]:
    return {
        key: str(value) if isinstance(value, Path) else value
        for key, value in vars(args).items()
        if key not in _INTERNAL_ARGS and value is not None
    }


def _runner(args: argparse.Namespace) -> CommandRunner:
    settings = OracleSettings.from_env()
    if args.oracle_cap is not None:
        settings = replace(settings, max_evaluations=args.oracle_cap)
    return CommandRunner(tie=args.tie, settings=settings)


def _dispatch(runner: CommandRunner, args: argparse.Namespace) -> CommandResult:
    command = args.command
    arguments = _arguments(args)

    def action():
        if command in ("reduce-3sat", "verify-reduction"):
            cnf = Cnf3.from_dimacs(args.dimacs.read_bytes())
            combiner = Combiner(args.combiner)
            if command == "reduce-3sat":
                return runner.reduce_3sat(cnf, args.t, combiner, args.emit)
            return runner.verify_reduction(cnf, args.t, combiner)

        problem = load_problem(args.problem)
        if command == "check":
            return runner.check(problem)
        if command == "mib":
            return runner.mib(problem)
        if command == "repair":
            return runner.repair(problem)
        if command == "strong-check":
            return runner.strong_check(problem)
        if command == "deduce":
            return runner.deduce(problem, PreferenceStatement.from_string(args.query))
        if command == "strong-deduce":
            return runner.strong_deduce(problem, parse_query(args.query))
        if command == "brute-deduce":
            return runner.brute_deduce(
                problem,
                PreferenceStatement.from_string(args.query),
                args.max_level_size,
                args.full_sigma,
                args.equivalence,
            )
        if command == "enumerate":
            return runner.enumerate(
                problem,
                args.max_level_size,
                args.full_sigma,
                args.equivalence,
                args.count_only,
            )
        return runner.translate(problem, to_ordering=args.to_ordering)

    return runner.run(command, action, arguments)


def run_command(argv: Optional[Sequence[str]] = None) -> CommandResult:
    """Parse arguments and run one subcommand.

    Usage errors exit through argparse with status 2.

    Args:
        argv: Arguments without the program name; defaults to sys.argv.

    Returns:
        The envelope and exit code.
    """
    args = build_parser().parse_args(argv)
    try:
        runner = _runner(args)
    except ConfigurationError as error:
        return CommandResult(ResultEnvelope.failure(args.command, error), EXIT_ERROR)
    try:
        return _dispatch(runner, args)
    except OSError as error:
        wrapped = HclpError(f"{error.strerror}: {error.filename}")
        wrapped.code = "io"
        return CommandResult(ResultEnvelope.failure(args.command, wrapped), EXIT_ERROR)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Run the hclp command line."""
    dotenv.load_dotenv()
    args = build_parser().parse_args(argv)
    try:
        configure_logging(verbose=args.verbose)
    except ConfigurationError as error:
        result = CommandResult(ResultEnvelope.failure(args.command, error), EXIT_ERROR)
    else:
        logger.info("Running hclp %s", args.command)
        result = run_command(argv)
    print(result.envelope.dumps())
    print(result.summary().to_string(index=False), file=sys.stderr)
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
