#!/usr/bin/env python3

import argparse
import json
import logging
import sys

from ftsdos.ftsdos import (run_scenario, run_batch, characterize_scenario, margin_scenario, check_scenario,
                           EXIT_OK, EXIT_CONFIG)
from ftsdos.config import ConfigError
from ftsdos.output import jsonable


def print_json(doc):
    print(json.dumps(jsonable(doc), indent=2, sort_keys=True))


def print_reports(reports):
    for bound_id, report in reports.items():
        print("{0:<14s} {1:<7s} intervals={2} points={3} skipped={4} violations={5}".format(
            bound_id, "passed" if report.passed else "FAILED", report.intervals_checked,
            report.points_checked, report.points_skipped, len(report.violations)))


def main(args):
    """
    Dispatch a subcommand.

    :param args: Arguments from argparse
    :return: Exit code
    """
    try:
        if args.command == "run":
            code, result = run_scenario(args.config, args.output_root)
            run = result.get("run")
            if run is not None:
                print("{0}: {1}, settled at {2}, {3} events ({4} transmitted)".format(
                    result["scenario"], run["status"], run["settled_at"], run["n_events"], run["n_transmissions"]))
            else:
                print("{0}: largest settling duty cycle {1}".format(result["scenario"],
                                                                    result["largest_settling_duty"]))
            return code

        if args.command == "batch":
            if args.jobs < 1:
                raise ConfigError("--jobs must be positive", args.directory)
            code, rows = run_batch(args.directory, args.jobs, args.output_root, quiet=args.quiet)
            for row in rows:
                print("{0:<30s} exit={1} status={2} settled_at={3}".format(
                    row["scenario"] or row["file"], row["exit_code"], row["status"], row["settled_at"]))
            return code

        if args.command == "characterize":
            print_json(characterize_scenario(args.config))
            return EXIT_OK

        if args.command == "margin":
            print_json(margin_scenario(args.config))
            return EXIT_OK

        if args.command == "check":
            code, reports = check_scenario(args.config, args.output_root)
            print_reports(reports)
            return code

    except ConfigError as e:
        logging.error(str(e))
        return EXIT_CONFIG
    except OSError as e:
        logging.error("{0}: {1}".format(e.filename, e.strerror))
        return EXIT_CONFIG


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description="Simulate event-triggered finite-time control under DoS attacks")
    parser.add_argument('--output-root', type=str, default=None,
                        help="Output root directory, default $FTSDOS_OUTPUT_ROOT or ./ftsdos_out")
    parser.add_argument('--quiet', default=False, action='store_true', help="Only log warnings and errors")
    parser.add_argument('--verbose', default=False, action='store_true', help="Log every event")
    commands = parser.add_subparsers(dest="command", metavar="command")
    commands.required = True

    run = commands.add_parser("run", help="Run a scenario and write its outputs")
    run.add_argument('config', type=str, help="Scenario file")

    batch = commands.add_parser("batch", help="Run every scenario file in a directory")
    batch.add_argument('directory', type=str, help="Directory of scenario files")
    batch.add_argument('-j', '--jobs', type=int, default=1, help="Number of worker processes")

    characterize = commands.add_parser("characterize", help="Print statistics of a scenario's DoS schedule")
    characterize.add_argument('config', type=str, help="Scenario file")

    margin = commands.add_parser("margin", help="Print the stability margin of a scenario")
    margin.add_argument('config', type=str, help="Scenario file")

    check = commands.add_parser("check", help="Re-run the bound checks on stored outputs")
    check.add_argument('config', type=str, help="Scenario file")

    args = parser.parse_args()

    level = logging.INFO
    if args.quiet:
        level = logging.WARNING
    if args.verbose:
        level = logging.DEBUG
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")

    sys.exit(main(args))
