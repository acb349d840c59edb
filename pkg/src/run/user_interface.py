#run/user_interface.py

"""
Purpose:
- Command-line surface: `run` executes a configured scheduling run, `solve` solves a program dump.
- Sets up the loguru sinks and maps failures onto exit codes (0 ok, 1 config/data, 2 consistency).
Works with:
- main.py
- run/workers.py
"""

import argparse
import json
import sys

from loguru import logger

from ingest.helpers import IngestError
from model.helpers import ModelError
from model.program import parse_program
from run.helpers import ConfigError, ConsistencyError, DataError, load_config
from run.workers import RunWorker
from solve.helpers import SolveLimits, brute_force, solve

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_CONSISTENCY = 2

# CLI flag -> config key
RUN_OVERRIDES = {
    "data": "data",
    "houses": "houses",
    "start": "start",
    "end": "end",
    "strategy": "strategies",
    "min_up": "min_up",
    "min_down": "min_down",
    "jobs": "jobs",
    "out": "out",
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--verbose", action="store_true", help="debug-level logging")
    common.add_argument("--log-file", help="also write the log to this file")

    parser = argparse.ArgumentParser(prog="pyisland", description="Islanded microgrid house scheduling")
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", parents=[common], help="schedule every selected day under every selected strategy")
    run.add_argument("--config", help="flat key = value config file")
    run.add_argument("--data", help="data CSV (overrides config)")
    run.add_argument("--houses", help="comma-separated house ids")
    run.add_argument("--start", help="first date, YYYY-MM-DD")
    run.add_argument("--end", help="last date, YYYY-MM-DD")
    run.add_argument("--strategy", help="comma-separated strategies: A,B,C,A+,B+,C+,SELF")
    run.add_argument("--min-up", type=int, help="minimum up time in steps")
    run.add_argument("--min-down", type=int, help="minimum down time in steps")
    run.add_argument("--jobs", type=int, help="worker processes")
    run.add_argument("--oracle-check", action="store_true", help="cross-check small days by enumeration")
    run.add_argument("--out", help="output directory")

    prog = commands.add_parser("solve", parents=[common], help="solve a binary program text dump and print the result as JSON")
    prog.add_argument("--program", required=True, help="program dump file")
    prog.add_argument("--max-nodes", type=int, default=SolveLimits.max_nodes)
    prog.add_argument("--max-seconds", type=float, default=SolveLimits.max_seconds)
    prog.add_argument("--oracle", action="store_true", help="enumerate instead of branch-and-bound")
    return parser


def configure_logging(verbose: bool = False, log_file: str = None):
    logger.remove()
    logger.add(sys.stderr, level="DEBUG" if verbose else "INFO")
    if log_file:
        logger.add(log_file, level="DEBUG", encoding="utf-8")


def _run(args) -> int:
    overrides = {key: getattr(args, flag) for flag, key in RUN_OVERRIDES.items()}
    if args.oracle_check:
        overrides["oracle_check"] = True
    cfg = load_config(args.config, overrides)
    report = RunWorker(cfg, status_callback=logger.info).run()
    print(f"ok: {len(report.results)} day result(s) in {cfg.out_dir}")
    return EXIT_OK


def _solve(args) -> int:
    with open(args.program, "r", encoding="utf-8") as handle:
        program = parse_program(handle.read())
    if args.oracle:
        result = brute_force(program)
    else:
        result = solve(program, SolveLimits(args.max_nodes, args.max_seconds))
    print(json.dumps(result.as_dict()))
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose, args.log_file)
    try:
        return _run(args) if args.command == "run" else _solve(args)
    except ConsistencyError as e:
        logger.error(f"Consistency failure: {e}")
        return EXIT_CONSISTENCY
    except (ConfigError, DataError, IngestError, ModelError, FileNotFoundError) as e:
        logger.error(str(e))
        return EXIT_INPUT
    except ValueError as e:
        logger.error(f"Bad input: {e}")
        return EXIT_INPUT
