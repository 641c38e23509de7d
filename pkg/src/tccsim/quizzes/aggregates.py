"""CourseExecution, Tournament and Quiz aggregates and their contracts.

CourseExecution is upstream of Tournament: tournaments copy student data
into their participants and keep them in sync through events. Quiz is
upstream too but owned by its tournament, which writes both in one commit.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from datetime import datetime
from enum import Enum

from tccsim.aggregate import AggregateContract, WorkingCopy
from tccsim.events import Event, EventSubscription
from tccsim.merge import keyed_union, take_max


class EventType:
    # declaration order is the application order for same-commit events
    UNENROLL_STUDENT = "UNENROLL_STUDENT"
    ANONYMIZE_STUDENT = "ANONYMIZE_STUDENT"
    UPDATE_STUDENT_NAME = "UPDATE_STUDENT_NAME"


class StudentState(Enum):
    ACTIVE = "ACTIVE"
    INACTIVE = "INACTIVE"


def anonymous_name(student_id: int) -> str:
    return f"ANONYMOUS-{student_id}"


@dataclass(frozen=True)
class Student:
    student_id: int
    name: str
    state: StudentState = StudentState.ACTIVE


@dataclass(frozen=True)
class Participant:
    student_id: int
    name: str
    state: StudentState = StudentState.ACTIVE


def _by_student(x) -> int:
    return x.student_id


# -- CourseExecution ------------------------------------------------------


@dataclass(frozen=True)
class CourseExecution:
    course_id: int
    academic_term: str
    students: tuple[Student, ...] = ()

    def student(self, student_id: int) -> Student | None:
        return next((s for s in self.students if s.student_id == student_id), None)


def _unique_students(ce: CourseExecution) -> bool:
    ids = [s.student_id for s in ce.students]
    return len(ids) == len(set(ids))


COURSE_EXECUTION = AggregateContract(
    type_name="CourseExecution",
    payload_type=CourseExecution,
    intra_invariants={"UNIQUE_STUDENTS": _unique_students},
    changeable_fields=frozenset({"students"}),
    merge_hooks={"students": keyed_union(_by_student)},
)


# -- Quiz -------------------------------------------------------------------


@dataclass(frozen=True)
class Quiz:
    available_date: datetime
    conclusion_date: datetime
    question_ids: frozenset[str] = frozenset()
    tournament_id: int | None = None


def select_questions(topics) -> frozenset[str]:
    """Deterministic stand-in for picking questions by topic."""
    return frozenset(f"{topic}-q{n}" for topic in topics for n in (1, 2))


QUIZ = AggregateContract(
    type_name="Quiz",
    payload_type=Quiz,
    intra_invariants={
        "AVAILABLE_BEFORE_CONCLUSION": lambda q: q.available_date < q.conclusion_date,
    },
    changeable_fields=frozenset({"available_date", "conclusion_date", "question_ids"}),
    intentions=(frozenset({"available_date", "conclusion_date"}),),
)


# -- Tournament -------------------------------------------------------------


@dataclass(frozen=True)
class Tournament:
    start_time: datetime
    end_time: datetime
    course_execution_id: int
    # sender version of the course execution events absorbed so far
    course_execution_version: int
    creator: Participant
    participants: tuple[Participant, ...] = ()
    topics: frozenset[str] = frozenset()
    quiz_id: int | None = None

    def participant(self, student_id: int) -> Participant | None:
        return next((p for p in self.participants if p.student_id == student_id), None)

    def member_ids(self) -> set[int]:
        return {p.student_id for p in self.participants} | {self.creator.student_id}


def _start_before_end(t: Tournament) -> bool:
    return t.start_time < t.end_time


def _unique_participants(t: Tournament) -> bool:
    ids = [p.student_id for p in t.participants]
    return len(ids) == len(set(ids))


def _creator_participant_consistent(t: Tournament) -> bool:
    p = t.participant(t.creator.student_id)
    return p is None or (p.name == t.creator.name and p.state == t.creator.state)


def _concerns_member(event: Event, tournament: Tournament) -> bool:
    return event.data.get("student_id") in tournament.member_ids()


def tournament_subscriptions(t: Tournament) -> set[EventSubscription]:
    return {
        EventSubscription(t.course_execution_id, t.course_execution_version, event_type, _concerns_member)
        for event_type in (
            EventType.UNENROLL_STUDENT,
            EventType.ANONYMIZE_STUDENT,
            EventType.UPDATE_STUDENT_NAME,
        )
    }


def _advance(t: Tournament, event: Event) -> int:
    return max(t.course_execution_version, event.sender_version)


def rename_participant(copy: WorkingCopy, event: Event) -> None:
    """Copy a student's new name into the participant and creator entries."""
    t: Tournament = copy.payload
    sid, name = event.data["student_id"], event.data["name"]
    creator = replace(t.creator, name=name) if t.creator.student_id == sid else t.creator
    copy.update(
        participants=tuple(replace(p, name=name) if p.student_id == sid else p for p in t.participants),
        creator=creator,
        course_execution_version=_advance(t, event),
    )


# anonymization only differs from a rename in where the name comes from
anonymize_participant = rename_participant


def deactivate_participant(copy: WorkingCopy, event: Event) -> None:
    t: Tournament = copy.payload
    sid = event.data["student_id"]
    inactive = StudentState.INACTIVE
    creator = replace(t.creator, state=inactive) if t.creator.student_id == sid else t.creator
    copy.update(
        participants=tuple(replace(p, state=inactive) if p.student_id == sid else p for p in t.participants),
        creator=creator,
        course_execution_version=_advance(t, event),
    )


TOURNAMENT = AggregateContract(
    type_name="Tournament",
    payload_type=Tournament,
    intra_invariants={
        "START_BEFORE_END": _start_before_end,
        "UNIQUE_PARTICIPANTS": _unique_participants,
        "CREATOR_PARTICIPANT_CONSISTENT": _creator_participant_consistent,
    },
    changeable_fields=frozenset(
        {"start_time", "end_time", "course_execution_version", "creator", "participants", "topics"}
    ),
    intentions=(frozenset({"start_time", "end_time"}),),
    merge_hooks={
        "participants": keyed_union(_by_student),
        "course_execution_version": take_max,
    },
    subscriptions=tournament_subscriptions,
    event_appliers={
        EventType.UNENROLL_STUDENT: deactivate_participant,
        EventType.ANONYMIZE_STUDENT: anonymize_participant,
        EventType.UPDATE_STUDENT_NAME: rename_participant,
    },
)


def participant_exists_violations(tournament: Tournament, course_execution: CourseExecution) -> list[int]:
    """Active participants that do not mirror an active student of the same name."""
    bad = []
    for p in tournament.participants:
        if p.state is StudentState.INACTIVE:
            continue
        s = course_execution.student(p.student_id)
        if s is None or s.state is StudentState.INACTIVE or s.name != p.name:
            bad.append(p.student_id)
    return bad
