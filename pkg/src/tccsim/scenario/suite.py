"""Canonical interleavings of functionalities and event processing.

Concurrency is scripted by lowering the version counter before the second
functionality so that it starts from the same snapshot as the first, and
raising it by the same amount afterwards. Fresh engines number versions
deterministically, so absolute versions are asserted.
"""

from __future__ import annotations

from tccsim.scenario.dsl import Scenario, parse_scenario

SETUP = """
$ce = invoke createCourseExecution 2024-1 1:Alice,2:Bob,3:Carol
$t = invoke createTournament $ce 1 2024-03-01T10:00 2024-03-01T12:00 algebra,logic
$q = invoke tournamentQuiz $t
"""
# setup commits: course execution v1, tournament + quiz v2

RENAME_THEN_JOIN = """
scenario Sequential: update student, add participant, event
invoke updateStudentName $ce 2 Robert
# the rename is not for a participant yet, so addParticipant reads it freely
invoke addParticipant $t 2
assert-field $t participants.2.name Robert
trigger-events
assert-handled 0
assert-field $t course_execution_version 3
assert-version $t 4
"""

JOIN_THEN_RENAME = """
scenario Sequential: add participant, update student, event
invoke addParticipant $t 2
invoke updateStudentName $ce 2 Robert
assert-field $t participants.2.name Bob
trigger-events
assert-handled 1
assert-field $t participants.2.name Robert
assert-field $t course_execution_version 4
assert-version $t 5
"""

CONCURRENT_JOIN_COMMITS_FIRST = """
scenario Concurrent: update student starts, add participant commits first, event
invoke addParticipant $t 2
adjust-version -1
invoke updateStudentName $ce 2 Robert
adjust-version 1
assert-version $ce 4
assert-field $t participants.2.name Bob
trigger-events
assert-handled 1
assert-field $t participants.2.name Robert
assert-version $t 6
"""

CONCURRENT_RENAME_COMMITS_FIRST = """
scenario Concurrent: update student commits first, event detected twice
invoke updateStudentName $ce 2 Robert
trigger-events
# not detected: the tournament does not have the student as participant
assert-handled 0
adjust-version -1
invoke addParticipant $t 2
adjust-version 1
assert-field $t participants.2.name Bob
assert-field $t course_execution_version 1
trigger-events
assert-handled 1
assert-field $t participants.2.name Robert
assert-field $t course_execution_version 3
"""

CONCURRENT_TOURNAMENT_UPDATES = """
scenario Concurrent complex functionalities: two tournament updates merge
invoke updateTournament $t 2024-03-02T10:00 2024-03-02T12:00 algebra,geometry
adjust-version -1
invoke updateTournament $t 2024-03-03T09:00 2024-03-03T11:00 logic,sets
adjust-version 1
assert-version $t 4
assert-version $q 4
assert-field $t start_time 2024-03-03T09:00:00
assert-field $t end_time 2024-03-03T11:00:00
assert-field $t topics logic,sets
assert-field $q available_date 2024-03-03T09:00:00
assert-field $q conclusion_date 2024-03-03T11:00:00
assert-field $q question_ids logic-q1,logic-q2,sets-q1,sets-q2
"""

INTENTION_ABORT = """
scenario Intention abort: concurrent start-only and end-only updates
invoke updateTournament $t 2024-03-01T09:00 - -
adjust-version -1
invoke updateTournament $t - 2024-03-01T13:00 - expect abort AGGREGATE_MERGE_FAILURE
adjust-version 1
assert-version $t 3
assert-field $t start_time 2024-03-01T09:00:00
assert-field $t end_time 2024-03-01T12:00:00
assert-field $q conclusion_date 2024-03-01T12:00:00
"""

CREATOR_PARTICIPANT_ABORT = """
scenario Creator/participant abort: creator joins while being anonymized
invoke anonymizeStudent $ce 1
trigger-events
assert-handled 1
assert-field $t creator.name ANONYMOUS-1
# addParticipant starts before the anonymization and reads the old name
adjust-version -2
invoke addParticipant $t 1 expect abort INVARIANT_BREAK
adjust-version 2
assert-version $t 4
trigger-events
assert-handled 0
"""

SCRIPTS = (RENAME_THEN_JOIN, JOIN_THEN_RENAME, CONCURRENT_JOIN_COMMITS_FIRST, CONCURRENT_RENAME_COMMITS_FIRST, CONCURRENT_TOURNAMENT_UPDATES, INTENTION_ABORT, CREATOR_PARTICIPANT_ABORT)


def builtin_suite() -> list[Scenario]:
    return [parse_scenario(SETUP + script) for script in SCRIPTS]
