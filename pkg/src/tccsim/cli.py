"""Command line entry point: ``tccsim run|suite|journal|stress``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from tccsim.errors import ParseError
from tccsim.event_manager import DEFAULT_INTERVAL_MS
from tccsim.scenario.dsl import parse_scenario
from tccsim.scenario.runner import ScenarioRunner
from tccsim.scenario.stress import run_stress
from tccsim.scenario.suite import builtin_suite

EXIT_OK, EXIT_FAILED, EXIT_USAGE = 0, 1, 2


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--event-interval-ms", type=int, default=DEFAULT_INTERVAL_MS,
                        help="period of the event detection loop when a scenario enables it")
    common.add_argument("--audit", action="store_true",
                        help="re-validate every causal snapshot and report violations")
    common.add_argument("--journal-file", type=Path, help="append commit journal lines to this file")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="tccsim", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", parents=[common], help="run one scenario file")
    run.add_argument("file", type=Path)
    sub.add_parser("suite", parents=[common], help="run the builtin scenario suite")
    journal = sub.add_parser("journal", parents=[common],
                             help="print the commit journal of a scenario run or of --journal-file")
    journal.add_argument("file", type=Path, nargs="?")
    stress = sub.add_parser("stress", parents=[common], help="concurrent commit stress run")
    stress.add_argument("--invokers", type=int, default=8)
    stress.add_argument("--commits", type=int, default=200)
    return parser


def _load(path: Path):
    return parse_scenario(path.read_text(encoding="utf-8"), name=path.stem)


def _runner(args) -> ScenarioRunner:
    return ScenarioRunner(audit=args.audit, event_interval_ms=args.event_interval_ms,
                          journal_file=args.journal_file)


def _audit_line(violations: list[str]) -> str:
    return f"admissibility violations: {len(violations)}"


def cmd_run(args) -> int:
    report = _runner(args).run(_load(args.file))
    print(f"scenario: {report.name}")
    for line in report.lines():
        print(line)
    print("journal:")
    for line in report.journal:
        print(f"  {line}")
    if args.audit:
        print(_audit_line(report.audit_violations))
        for v in report.audit_violations:
            print(f"  {v}")
    ok = report.passed and not report.audit_violations
    print("PASSED" if ok else "FAILED")
    return EXIT_OK if ok else EXIT_FAILED


def cmd_suite(args) -> int:
    runner = _runner(args)
    scenarios = builtin_suite()
    passed = 0
    violations: list[str] = []
    for scenario in scenarios:
        report = runner.run(scenario)
        violations.extend(report.audit_violations)
        if report.passed:
            passed += 1
            print(f"PASS  {report.name}")
        else:
            print(f"FAIL  {report.name}")
            print(f"      {report.failure}")
    print(f"{passed}/{len(scenarios)} passed")
    if args.audit:
        print(_audit_line(violations))
    return EXIT_OK if passed == len(scenarios) and not violations else EXIT_FAILED


def cmd_journal(args) -> int:
    if args.file is not None:
        report = _runner(args).run(_load(args.file))
        lines = report.journal
    elif args.journal_file is not None:
        lines = args.journal_file.read_text(encoding="utf-8").splitlines()
    else:
        print("journal needs a scenario file or --journal-file", file=sys.stderr)
        return EXIT_USAGE
    for line in lines:
        print(line)
    return EXIT_OK


def cmd_stress(args) -> int:
    report = run_stress(args.invokers, args.commits)
    print(f"commits: {report.commits} retries: {report.retries} reads: {report.reads}")
    print(f"torn reads: {len(report.torn_reads)} journal problems: {len(report.journal_problems)}")
    for problem in report.torn_reads + report.journal_problems:
        print(f"  {problem}")
    return EXIT_OK if report.ok else EXIT_FAILED


COMMANDS = {"run": cmd_run, "suite": cmd_suite, "journal": cmd_journal, "stress": cmd_stress}


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
