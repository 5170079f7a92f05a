"""
Command line interface (CLI)
============================

:mod:`probpts` provides a command line interface for analyzing, running and checking programs.


Example usage
-------------

Print the points-to type after every statement of ``pointers.prog``:

.. code:: bash

    probpts analyze pointers.prog

Print the same analysis as JSON, analyzing loops without the zero-iteration case:

.. code:: bash

    probpts analyze pointers.prog --format json --while-mode paper

Run a program from an initial environment, listing every final environment with its weight:

.. code:: bash

    probpts run pointers.prog --init c=3,a=&d

Check the analysis of a program against its executions, then against 1000 random programs:

.. code:: bash

    probpts check pointers.prog
    probpts fuzz --seed 1 --count 1000

Serve the analyzer over HTTP:

.. code:: bash

    probpts serve --port 8080


Exit codes
----------

``0``
    Success. For ``check`` and ``fuzz``, no final state escaped the analysis.

``1``
    The program text does not parse.

``2``
    Invalid arguments or initial bindings, a ``par`` with no fixpoint, or a ``par`` with too many threads to run.

``3``
    A final state escaped the analysis.

``4``
    ``check`` could not run every path to completion within its fuel.


Command reference
-----------------

You can view this reference at any time with ``probpts --help``, or ``probpts <command> --help``.

.. code:: bash

{help}
"""
import argparse
import logging
import sys
from fractions import Fraction
from typing import Any, Callable, Dict, Optional, Sequence, Type, TypeVar
import probpts
from probpts import analyzer, fuzz, interp, server
from probpts.analyzer import WHILE_MODES, AnalysisError, AnalyzerConfig, analyze_program
from probpts.check import InitError, check_program, parse_init
from probpts.fuzz import FuzzConfig, run_fuzz
from probpts.interp import PermutationCapError, RunConfig, WeightedEnv, aggregate, run
from probpts.report import build_entries, build_report, dump_report, format_outcomes, format_table
from probpts.syntax import ParseError, Program, parse


logger = logging.getLogger(__name__)

DEFAULTS: Dict[str, Any] = {}
HELP: Dict[str, str] = {}
for module in (interp, analyzer, fuzz, server):
    DEFAULTS.update(module.DEFAULTS)  # type: ignore
    HELP.update(module.HELP)  # type: ignore


parser = argparse.ArgumentParser(
    prog="probpts",
    description="Probabilistic points-to analysis for fork-join programs.",
)
commands = parser.add_subparsers(dest="command", metavar="command")
commands.required = True

common = argparse.ArgumentParser(add_help=False)


def add_argument(target: argparse.ArgumentParser, name: str, *aliases: str, **kwargs: Any) -> None:
    varname = kwargs.get("dest", name.strip("-").replace("-", "_"))
    # Format help.
    kwargs.setdefault("help", HELP.get(varname, "").replace("``", ""))
    assert kwargs["help"]
    # Parse action.
    kwargs.setdefault("action", "store")
    if kwargs["action"] in ("append", "count"):
        kwargs["help"] += " Can be specified multiple times."
    if kwargs["action"] == "count":
        kwargs.setdefault("default", 0)
    if kwargs["action"] in ("append", "store"):
        kwargs.setdefault("default", DEFAULTS.get(varname))
        kwargs.setdefault("type", type(kwargs["default"]))
        assert not isinstance(None, kwargs["type"])
    target.add_argument(name, *aliases, **kwargs)


add_argument(
    common,
    "--verbose",
    "-v",
    action="count",
    help="Increase verbosity.",
)
add_argument(
    common,
    "--quiet",
    "-q",
    action="count",
    help="Decrease verbosity.",
)
add_argument(
    parser,
    "--version",
    action="version",
    help="Display version information.",
    version=f"probpts v{probpts.__version__}",
)


def add_program_arguments(target: argparse.ArgumentParser) -> None:
    add_argument(
        target,
        "file",
        type=str,
        help="Path to the program text.",
    )


def add_analyzer_arguments(target: argparse.ArgumentParser) -> None:
    add_argument(
        target,
        "--while-mode",
        choices=WHILE_MODES,
    )
    add_argument(
        target,
        "--par-round-cap",
    )
    add_argument(
        target,
        "--no-parfor-stabilize",
        dest="parfor_stabilize",
        action="store_false",
        help="Do not warn when parfor supports still grow at the annotated copy count.",
    )


def add_run_arguments(target: argparse.ArgumentParser) -> None:
    add_argument(
        target,
        "--fuel",
    )
    add_argument(
        target,
        "--parcap",
        dest="permutation_cap",
    )


def add_init_argument(target: argparse.ArgumentParser) -> None:
    add_argument(
        target,
        "--init",
        type=str,
        default="",
        help="Initial bindings in the form 'x=3,y=&z'. Unbound variables start at 0.",
    )


analyze_parser = commands.add_parser(
    "analyze",
    parents=[common],
    help="Print the points-to type at every program point.",
    description="Print the points-to type at every program point.",
)
add_program_arguments(analyze_parser)
add_argument(
    analyze_parser,
    "--format",
    type=str,
    default="table",
    choices=("table", "json"),
    help="Output format. Defaults to 'table'.",
)
add_argument(
    analyze_parser,
    "--pre",
    type=str,
    default="bottom",
    choices=("bottom",),
    help="Type before the program. Defaults to 'bottom'.",
)
add_analyzer_arguments(analyze_parser)

run_parser = commands.add_parser(
    "run",
    parents=[common],
    help="Run a program, listing every final environment with its weight.",
    description="Run a program, listing every final environment with its weight.",
)
add_program_arguments(run_parser)
add_run_arguments(run_parser)
add_init_argument(run_parser)

check_parser = commands.add_parser(
    "check",
    parents=[common],
    help="Check that every final state of a program is modelled by its analysis.",
    description="Check that every final state of a program is modelled by its analysis.",
)
add_program_arguments(check_parser)
add_analyzer_arguments(check_parser)
add_run_arguments(check_parser)
add_init_argument(check_parser)

fuzz_parser = commands.add_parser(
    "fuzz",
    parents=[common],
    help="Check the analysis against random programs.",
    description="Check the analysis against random programs.",
)
for option in ("--seed", "--count", "--max-vars", "--max-threads", "--max-loop-bound", "--max-depth", "--threads"):
    add_argument(fuzz_parser, option, help=fuzz.HELP[option[2:].replace("-", "_")].replace("``", ""))
add_analyzer_arguments(fuzz_parser)
add_run_arguments(fuzz_parser)

serve_parser = commands.add_parser(
    "serve",
    parents=[common],
    help="Serve the analyzer over HTTP.",
    description="Serve the analyzer over HTTP.",
)
add_argument(
    serve_parser,
    "--host",
    type=str,
    action="append",
)
add_argument(
    serve_parser,
    "--port",
    "-p",
)
add_argument(
    serve_parser,
    "--unix-socket",
    type=str,
)
add_argument(
    serve_parser,
    "--unix-socket-perms",
)
add_argument(
    serve_parser,
    "--backlog",
)
add_argument(
    serve_parser,
    "--threads",
    help=server.HELP["threads"].replace("``", ""),
)
add_argument(
    serve_parser,
    "--max-request-body-size",
)
add_argument(
    serve_parser,
    "--shutdown-timeout",
)


Config = TypeVar("Config")


def build_config(target: argparse.ArgumentParser, cls: Type[Config], **kwargs: Any) -> Config:
    try:
        return cls(**kwargs)  # type: ignore
    except AssertionError as ex:
        target.error(str(ex))
        raise  # pragma: no cover


def read_program(path: str) -> Program:
    with open(path, encoding="utf-8") as handle:
        return parse(handle.read())


def analyzer_config(target: argparse.ArgumentParser, kwargs: Dict[str, Any]) -> AnalyzerConfig:
    return build_config(
        target,
        AnalyzerConfig,
        while_mode=kwargs.pop("while_mode"),
        par_round_cap=kwargs.pop("par_round_cap"),
        parfor_stabilize=kwargs.pop("parfor_stabilize"),
    )


def run_config(target: argparse.ArgumentParser, kwargs: Dict[str, Any]) -> RunConfig:
    return build_config(target, RunConfig, fuel=kwargs.pop("fuel"), permutation_cap=kwargs.pop("permutation_cap"))


def cmd_analyze(kwargs: Dict[str, Any]) -> int:
    cfg = analyzer_config(analyze_parser, kwargs)
    program = read_program(kwargs["file"])
    result = analyze_program(program, cfg=cfg)
    entries = build_entries(program, result)
    if kwargs["format"] == "json":
        print(dump_report(build_report(entries, result, path=kwargs["file"], mode=cfg.while_mode)))
    else:
        print(format_table(entries, result.final))
        for warning in result.warnings:
            print(f"warning: {warning}")
    return 0


def cmd_run(kwargs: Dict[str, Any]) -> int:
    cfg = run_config(run_parser, kwargs)
    program = read_program(kwargs["file"])
    env = parse_init(kwargs["init"], program.vars)
    outcomes = run(program.body, WeightedEnv(env, Fraction(1)), cfg)
    print(format_outcomes(aggregate(outcomes)))
    return 0


def cmd_check(kwargs: Dict[str, Any]) -> int:
    analyzer_cfg = analyzer_config(check_parser, kwargs)
    run_cfg = run_config(check_parser, kwargs)
    program = read_program(kwargs["file"])
    env = parse_init(kwargs["init"], program.vars)
    result = check_program(program, env, analyzer_cfg, run_cfg)
    print(result.verdict)
    if result.counterexample is not None:
        print(result.counterexample)
    return result.exit_code


def cmd_fuzz(kwargs: Dict[str, Any]) -> int:
    analyzer_cfg = analyzer_config(fuzz_parser, kwargs)
    run_cfg = run_config(fuzz_parser, kwargs)
    cfg = build_config(fuzz_parser, FuzzConfig, **kwargs)
    summary = run_fuzz(cfg, analyzer_cfg, run_cfg)
    print(summary.format())
    return summary.exit_code


def cmd_serve(kwargs: Dict[str, Any]) -> int:  # pragma: no cover
    server.serve(**kwargs)
    return 0


COMMANDS: Dict[str, Callable[[Dict[str, Any]], int]] = {
    "analyze": cmd_analyze,
    "run": cmd_run,
    "check": cmd_check,
    "fuzz": cmd_fuzz,
    "serve": cmd_serve,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    # Parse the args.
    kwargs = vars(parser.parse_args(sys.argv[1:] if argv is None else argv))
    command = COMMANDS[kwargs.pop("command")]
    # Set up logging.
    verbosity = (kwargs.pop("verbose") - kwargs.pop("quiet")) * 10
    logging.basicConfig(level=max(logging.ERROR - verbosity, logging.DEBUG), format="%(message)s")
    logging.getLogger("aiohttp").setLevel(max(logging.INFO - verbosity, logging.DEBUG))
    logging.getLogger("probpts").setLevel(max(logging.INFO - verbosity, logging.DEBUG))
    # Run!
    try:
        return command(kwargs)
    except ParseError as ex:
        logger.error("%s: %s", kwargs.get("file"), ex)
        return 1
    except (OSError, InitError, AnalysisError, PermutationCapError) as ex:
        logger.error("%s", ex)
        return 2


if __debug__:
    import textwrap
    __doc__ = __doc__.format(help=textwrap.indent(parser.format_help(), "    "))


if __name__ == "__main__":
    sys.exit(main())
