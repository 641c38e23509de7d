import itertools
import re

import pytest

from tccsim.cli import main
from tccsim.errors import ParseError
from tccsim.quizzes import participant_exists_report
from tccsim.scenario import builtin_suite, parse_scenario, run_scenario
from tccsim.scenario.dsl import (
    AdjustVersion,
    AssertField,
    EventLoop,
    Invoke,
    TriggerEvents,
)
from tccsim.scenario.suite import SETUP

LINE = re.compile(r"^\d+ .+ -> (OK|FAIL(:.+)?)$")


def test_parse_steps():
    scenario = parse_scenario(
        """
        scenario demo run  # trailing comment
        $ce = invoke createCourseExecution 2024-1 "1:Ana Maria"
        adjust-version -1
        trigger-events * $ce
        event-loop on 50
        invoke addParticipant 3 2 expect abort INVARIANT_BREAK
        assert-field $ce students.1.name "Ana Maria"
        """
    )
    assert scenario.name == "demo run"
    assert scenario.steps == [
        Invoke("createCourseExecution", ("2024-1", "1:Ana Maria"), bind="$ce"),
        AdjustVersion(-1),
        TriggerEvents(None, "$ce"),
        EventLoop(True, 50),
        Invoke("addParticipant", ("3", "2"), "INVARIANT_BREAK"),
        AssertField("$ce", "students.1.name", "Ana Maria"),
    ]
    assert str(scenario.steps[0]) == "$ce = invoke createCourseExecution 2024-1 '1:Ana Maria'"
    assert str(scenario.steps[1]) == "adjust-version -1"


def test_steps_print_back_to_themselves():
    for scenario in builtin_suite():
        text = "\n".join(str(s) for s in scenario.steps)
        assert parse_scenario(text).steps == scenario.steps


@pytest.mark.parametrize(
    "text, line",
    [
        ("bogus step", 1),
        ("\n\nadjust-version x", 3),
        ("invoke f expect abort NOPE", 1),
        ("invoke f expect maybe", 1),
        ("x = invoke f", 1),
        ("$x = adjust-version 1", 1),
        ("assert-field notaref path 1", 1),
        ("event-loop sideways", 1),
        ("event-loop on 0", 1),
        ('invoke f "unterminated', 1),
        ("assert-handled", 1),
    ],
)
def test_parse_errors(text, line):
    with pytest.raises(ParseError) as exc:
        parse_scenario(text)
    assert exc.value.line == line


def test_builtin_suite():
    suite = builtin_suite()
    assert len(suite) >= 7
    for scenario in suite:
        report = run_scenario(scenario, audit=True)
        assert report.passed, report.failure
        assert all(LINE.match(line) for line in report.lines())
        assert report.audit_violations == []


def test_runs_are_deterministic():
    first = [run_scenario(s).journal for s in builtin_suite()]
    second = [run_scenario(s).journal for s in builtin_suite()]
    assert first == second


def test_failures_are_reported_and_stop_the_run():
    scenario = parse_scenario(
        SETUP
        + """
        assert-field $t start_time 1999-01-01T00:00:00
        assert-version $t 2
        """
    )
    report = run_scenario(scenario)
    assert not report.passed
    assert report.lines()[-1] == (
        "4 assert-field $t start_time 1999-01-01T00:00:00 -> "
        "FAIL:start_time='2024-03-01T10:00:00', expected '1999-01-01T00:00:00'"
    )


@pytest.mark.parametrize(
    "script, detail",
    [
        ("invoke addParticipant $t 9", "aborted"),
        ("invoke addParticipant $t 2 expect abort INVARIANT_BREAK", "expected abort"),
        ("invoke noSuchThing", "bad invocation"),
        ("assert-version $nope 1", "not bound"),
        ("assert-handled 0", "no trigger-events"),
        ("adjust-version -100", "adjusted"),
        ("assert-field $t participants.7.name x", "no element"),
    ],
)
def test_step_failures(script, detail):
    report = run_scenario(parse_scenario(SETUP + script))
    assert detail in report.failure.detail


def test_event_loop_steps():
    scenario = parse_scenario(
        SETUP
        + """
        invoke addParticipant $t 2
        event-loop on 20
        invoke updateStudentName $ce 2 Robert
        sleep 300
        event-loop off
        assert-field $t participants.2.name Robert
        """
    )
    assert run_scenario(scenario).passed


# Interleaving oracle: whatever order and overlap the three functionalities
# run in, and wherever events are processed, draining the events must leave
# every participant mirroring the course execution.

OPS = {
    "rename": "invoke updateStudentName $ce 2 Robert",
    "join": "invoke addParticipant $t 2",
    "creator": "invoke updateStudentName $ce 1 Alicia",
}


def interleavings():
    for order in itertools.permutations(OPS):
        for overlap in itertools.product((False, True), repeat=2):
            for triggers in itertools.product((False, True), repeat=3):
                lines = []
                for i, op in enumerate(order):
                    concurrent = i > 0 and overlap[i - 1]
                    if concurrent:
                        lines.append("adjust-version -1")
                    lines.append(OPS[op])
                    if concurrent:
                        lines.append("adjust-version 1")
                    if triggers[i]:
                        lines.append("trigger-events")
                yield "\n".join(lines)


def test_every_interleaving_converges():
    scripts = list(interleavings())
    assert len(scripts) == 6 * 4 * 8
    for script in scripts:
        report = run_scenario(parse_scenario(SETUP + script), keep_engine=True, audit=True)
        assert report.passed, (script, report.failure)
        engine = report.engine
        engine.events.drain()
        t = engine.store.latest(3).payload
        assert participant_exists_report(engine) == {}, script
        assert (t.participant(2).name, t.creator.name) == ("Robert", "Alicia"), script
        assert report.audit_violations == []


# -- command line ----------------------------------------------------------

GOOD = SETUP + "invoke addParticipant $t 2\nassert-field $t participants.2.name Bob\n"


def test_cli_run(tmp_path, capsys):
    path = tmp_path / "ok.scn"
    path.write_text(GOOD)
    assert main(["run", str(path)]) == 0
    out = capsys.readouterr().out
    assert "4 invoke addParticipant $t 2 -> OK" in out
    assert "commit 3 addParticipant 3 -" in out


def test_cli_exit_codes(tmp_path, capsys):
    failing = tmp_path / "bad.scn"
    failing.write_text(SETUP + "assert-version $t 99\n")
    broken = tmp_path / "broken.scn"
    broken.write_text("frobnicate\n")
    assert main(["run", str(failing)]) == 1
    assert main(["run", str(broken)]) == 2
    assert main(["run", str(tmp_path / "missing.scn")]) == 2
    assert "line 1" in capsys.readouterr().err


def test_cli_suite(capsys):
    assert main(["suite", "--audit", "--event-interval-ms", "20"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[-2:] == ["7/7 passed", "admissibility violations: 0"]


def test_cli_journal(tmp_path, capsys):
    scenario = tmp_path / "ok.scn"
    scenario.write_text(GOOD)
    journal = tmp_path / "journal.log"
    assert main(["run", str(scenario), "--journal-file", str(journal)]) == 0
    capsys.readouterr()
    assert main(["journal", "--journal-file", str(journal)]) == 0
    from_file = capsys.readouterr().out
    assert main(["journal", str(scenario)]) == 0
    assert capsys.readouterr().out == from_file
    assert from_file.splitlines()[0] == "commit 1 createCourseExecution 1 -"
    assert main(["journal"]) == 2


def test_shipped_example_scenarios():
    from pathlib import Path

    files = sorted((Path(__file__).parent.parent / "scenarios").glob("*.scn"))
    assert files
    for path in files:
        assert main(["run", str(path), "--audit"]) == 0
