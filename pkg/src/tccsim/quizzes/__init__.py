"""Tournament, Quiz and CourseExecution bounded contexts."""

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
)
from tccsim.quizzes.functionalities import (
    CATALOG,
    QuizzesFunctionalities,
    invoke,
    participant_exists_report,
)

__all__ = [
    "CATALOG",
    "COURSE_EXECUTION",
    "CourseExecution",
    "EventType",
    "Participant",
    "QUIZ",
    "Quiz",
    "QuizzesFunctionalities",
    "Student",
    "StudentState",
    "TOURNAMENT",
    "Tournament",
    "invoke",
    "participant_exists_report",
]
