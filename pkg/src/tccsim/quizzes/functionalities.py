"""Quizzes functionalities, each executed as one causal transaction."""

from __future__ import annotations

from dataclasses import replace
from datetime import datetime
from typing import Any, Callable, Iterable

from tccsim.aggregate import AggregateState, WorkingCopy
from tccsim.engine import Engine
from tccsim.errors import NotFound, StateError, TypeMismatch
from tccsim.quizzes.aggregates import (
    COURSE_EXECUTION,
    QUIZ,
    TOURNAMENT,
    CourseExecution,
    EventType,
    Participant,
    Quiz,
    Student,
    StudentState,
    Tournament,
    anonymous_name,
    participant_exists_violations,
    select_questions,
)
from tccsim.unit_of_work import UnitOfWork


def _read(uow: UnitOfWork, aggregate_id: int, contract) -> WorkingCopy:
    copy = uow.read(aggregate_id)
    if copy.contract is not contract:
        raise TypeMismatch(f"expected a {contract.type_name}, found {copy.type_name}", aggregate_id)
    return copy


def _require_active(copy: WorkingCopy) -> None:
    if copy.state is not AggregateState.ACTIVE:
        raise StateError(f"{copy.type_name} is {copy.state.value}", copy.aggregate_id)


def _student(ce: WorkingCopy, student_id: int) -> Student:
    student = ce.payload.student(student_id)
    if student is None:
        raise NotFound(f"student {student_id} is not enrolled", ce.aggregate_id)
    return student


def _sorted(items) -> tuple:
    return tuple(sorted(items, key=lambda x: x.student_id))


def _set_student(ce: WorkingCopy, student: Student) -> None:
    students = tuple(s for s in ce.payload.students if s.student_id != student.student_id)
    ce.update(students=_sorted(students + (student,)))


class QuizzesFunctionalities:
    def __init__(self, engine: Engine):
        self.engine = engine
        self.units = engine.units

    # -- course executions ------------------------------------------------

    def create_course_execution(
        self, academic_term: str, students: Iterable[tuple[int, str]], course_id: int = 1
    ) -> int:
        roster = tuple(Student(sid, name) for sid, name in students)
        with self.units.transaction("createCourseExecution") as uow:
            ce = uow.register_new(
                COURSE_EXECUTION,
                CourseExecution(course_id, academic_term, _sorted(roster)),
            )
        return ce.aggregate_id

    def enroll_student(self, course_execution_id: int, student_id: int, name: str) -> None:
        with self.units.transaction("enrollStudent") as uow:
            ce = _read(uow, course_execution_id, COURSE_EXECUTION)
            _require_active(ce)
            # duplicates are rejected by UNIQUE_STUDENTS at commit
            ce.update(students=_sorted(ce.payload.students + (Student(student_id, name),)))
            uow.register_changed(ce)

    def update_student_name(self, course_execution_id: int, student_id: int, name: str) -> None:
        with self.units.transaction("updateStudentName") as uow:
            ce = _read(uow, course_execution_id, COURSE_EXECUTION)
            _set_student(ce, replace(_student(ce, student_id), name=name))
            uow.emit(ce, EventType.UPDATE_STUDENT_NAME, student_id=student_id, name=name)

    def anonymize_student(self, course_execution_id: int, student_id: int) -> None:
        with self.units.transaction("anonymizeStudent") as uow:
            ce = _read(uow, course_execution_id, COURSE_EXECUTION)
            name = anonymous_name(student_id)
            _set_student(ce, replace(_student(ce, student_id), name=name))
            uow.emit(ce, EventType.ANONYMIZE_STUDENT, student_id=student_id, name=name)

    def unenroll_student(self, course_execution_id: int, student_id: int) -> None:
        with self.units.transaction("unenrollStudent") as uow:
            ce = _read(uow, course_execution_id, COURSE_EXECUTION)
            student = _student(ce, student_id)
            if student.state is not StudentState.ACTIVE:
                raise StateError(f"student {student_id} is already inactive", course_execution_id)
            _set_student(ce, replace(student, state=StudentState.INACTIVE))
            uow.emit(ce, EventType.UNENROLL_STUDENT, student_id=student_id)

    def get_course_execution(self, course_execution_id: int) -> dict[str, Any]:
        with self.units.transaction("getCourseExecution") as uow:
            ce = _read(uow, course_execution_id, COURSE_EXECUTION)
            return {
                "id": ce.aggregate_id,
                "version": ce.version,
                "academic_term": ce.payload.academic_term,
                "students": [(s.student_id, s.name, s.state.value) for s in ce.payload.students],
            }

    # -- tournaments -----------------------------------------------------

    def create_tournament(
        self,
        course_execution_id: int,
        creator_id: int,
        start_time: datetime,
        end_time: datetime,
        topics: Iterable[str],
    ) -> int:
        """Create a tournament and the quiz it owns in a single commit."""
        topics = frozenset(topics)
        with self.units.transaction("createTournament") as uow:
            ce = _read(uow, course_execution_id, COURSE_EXECUTION)
            creator = _student(ce, creator_id)
            if creator.state is not StudentState.ACTIVE:
                raise StateError(f"creator {creator_id} is not active", course_execution_id)
            quiz = uow.register_new(QUIZ, Quiz(start_time, end_time, select_questions(topics)))
            tournament = uow.register_new(
                TOURNAMENT,
                Tournament(
                    start_time=start_time,
                    end_time=end_time,
                    course_execution_id=course_execution_id,
                    course_execution_version=ce.version,
                    creator=Participant(creator.student_id, creator.name),
                    topics=topics,
                    quiz_id=quiz.aggregate_id,
                ),
            )
            quiz.update(tournament_id=tournament.aggregate_id)
        return tournament.aggregate_id

    def add_participant(self, tournament_id: int, student_id: int) -> None:
        with self.units.transaction("addParticipant") as uow:
            # the tournament goes into the snapshot first so the course
            # execution version is chosen consistently with it
            t = _read(uow, tournament_id, TOURNAMENT)
            _require_active(t)
            ce = _read(uow, t.payload.course_execution_id, COURSE_EXECUTION)
            student = _student(ce, student_id)
            if student.state is not StudentState.ACTIVE:
                raise StateError(f"student {student_id} is not active", ce.aggregate_id)
            participants = t.payload.participants + (Participant(student_id, student.name),)
            t.update(
                participants=_sorted(participants),
                course_execution_version=max(t.payload.course_execution_version, ce.version),
            )
            uow.register_changed(t)

    def leave_tournament(self, tournament_id: int, student_id: int) -> None:
        with self.units.transaction("leaveTournament") as uow:
            t = _read(uow, tournament_id, TOURNAMENT)
            _require_active(t)
            if t.payload.participant(student_id) is None:
                raise NotFound(f"student {student_id} is not a participant", tournament_id)
            t.update(participants=tuple(p for p in t.payload.participants if p.student_id != student_id))
            uow.register_changed(t)

    def update_tournament(
        self,
        tournament_id: int,
        start_time: datetime | None = None,
        end_time: datetime | None = None,
        topics: Iterable[str] | None = None,
    ) -> None:
        """Change dates and/or topics; the owned quiz follows in the same commit."""
        with self.units.transaction("updateTournament") as uow:
            t = _read(uow, tournament_id, TOURNAMENT)
            _require_active(t)
            t_changes: dict[str, Any] = {}
            q_changes: dict[str, Any] = {}
            if start_time is not None:
                t_changes["start_time"] = q_changes["available_date"] = start_time
            if end_time is not None:
                t_changes["end_time"] = q_changes["conclusion_date"] = end_time
            if topics is not None:
                t_changes["topics"] = frozenset(topics)
                q_changes["question_ids"] = select_questions(t_changes["topics"])
            if not t_changes:
                return
            t.update(**t_changes)
            uow.register_changed(t)
            quiz = _read(uow, t.payload.quiz_id, QUIZ)
            quiz.update(**q_changes)
            uow.register_changed(quiz)

    def cancel_tournament(self, tournament_id: int) -> None:
        self._retire(tournament_id, AggregateState.INACTIVE, "cancelTournament")

    def remove_tournament(self, tournament_id: int) -> None:
        self._retire(tournament_id, AggregateState.DELETED, "removeTournament")

    def _retire(self, tournament_id: int, state: AggregateState, name: str) -> None:
        with self.units.transaction(name) as uow:
            t = _read(uow, tournament_id, TOURNAMENT)
            _require_active(t)
            quiz = _read(uow, t.payload.quiz_id, QUIZ)
            for copy in (t, quiz):
                copy.state = state
                uow.register_changed(copy)

    def get_tournament(self, tournament_id: int) -> dict[str, Any]:
        """Tournament together with its quiz, read from one causal snapshot."""
        with self.units.transaction("getTournament") as uow:
            t = _read(uow, tournament_id, TOURNAMENT)
            quiz = _read(uow, t.payload.quiz_id, QUIZ)
            p: Tournament = t.payload
            q: Quiz = quiz.payload
            return {
                "id": t.aggregate_id,
                "version": t.version,
                "state": t.state.value,
                "start_time": p.start_time,
                "end_time": p.end_time,
                "topics": sorted(p.topics),
                "creator": (p.creator.student_id, p.creator.name),
                "participants": [(x.student_id, x.name, x.state.value) for x in p.participants],
                "quiz": {
                    "id": quiz.aggregate_id,
                    "version": quiz.version,
                    "available_date": q.available_date,
                    "conclusion_date": q.conclusion_date,
                    "question_ids": sorted(q.question_ids),
                },
            }

    def tournament_quiz(self, tournament_id: int) -> int:
        with self.units.transaction("tournamentQuiz") as uow:
            return _read(uow, tournament_id, TOURNAMENT).payload.quiz_id

    def get_quiz(self, quiz_id: int) -> dict[str, Any]:
        with self.units.transaction("getQuiz") as uow:
            quiz = _read(uow, quiz_id, QUIZ)
            return {
                "id": quiz.aggregate_id,
                "version": quiz.version,
                "available_date": quiz.payload.available_date,
                "conclusion_date": quiz.payload.conclusion_date,
                "question_ids": sorted(quiz.payload.question_ids),
            }


def participant_exists_report(engine: Engine) -> dict[int, list[int]]:
    """PARTICIPANT_EXISTS violations between latest tournaments and course executions."""
    store = engine.store
    report = {}
    for agg_id in store.aggregate_ids(TOURNAMENT.type_name):
        t = store.latest(agg_id)
        if t.state is not AggregateState.ACTIVE:
            continue
        ce = store.latest(t.payload.course_execution_id)
        bad = participant_exists_violations(t.payload, ce.payload)
        if bad:
            report[agg_id] = bad
    return report


# -- catalog for the scenario harness ---------------------------------------


def _optional(convert: Callable[[str], Any]) -> Callable[[str], Any]:
    return lambda text: None if text == "-" else convert(text)


def _topics(text: str) -> frozenset[str]:
    return frozenset(t for t in text.split(",") if t)


def _students(text: str) -> list[tuple[int, str]]:
    roster = []
    for item in filter(None, text.split(",")):
        sid, _, name = item.partition(":")
        roster.append((int(sid), name))
    return roster


when = datetime.fromisoformat

# name -> (method, argument converters); arguments are positional strings
CATALOG: dict[str, tuple[str, tuple[Callable[[str], Any], ...]]] = {
    "createCourseExecution": ("create_course_execution", (str, _students)),
    "enrollStudent": ("enroll_student", (int, int, str)),
    "updateStudentName": ("update_student_name", (int, int, str)),
    "anonymizeStudent": ("anonymize_student", (int, int)),
    "unenrollStudent": ("unenroll_student", (int, int)),
    "getCourseExecution": ("get_course_execution", (int,)),
    "createTournament": ("create_tournament", (int, int, when, when, _topics)),
    "addParticipant": ("add_participant", (int, int)),
    "leaveTournament": ("leave_tournament", (int, int)),
    "updateTournament": (
        "update_tournament",
        (int, _optional(when), _optional(when), _optional(_topics)),
    ),
    "cancelTournament": ("cancel_tournament", (int,)),
    "removeTournament": ("remove_tournament", (int,)),
    "getTournament": ("get_tournament", (int,)),
    "tournamentQuiz": ("tournament_quiz", (int,)),
    "getQuiz": ("get_quiz", (int,)),
}


def invoke(functionalities: QuizzesFunctionalities, name: str, args: list[str]) -> Any:
    """Run a catalog functionality with positional string arguments."""
    try:
        method, converters = CATALOG[name]
    except KeyError:
        raise KeyError(f"unknown functionality {name!r}") from None
    if len(args) != len(converters):
        raise TypeError(f"{name} takes {len(converters)} arguments, got {len(args)}")
    return getattr(functionalities, method)(*(c(a) for c, a in zip(converters, args)))
