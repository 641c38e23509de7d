"""Executes scenarios against a fresh engine, one step at a time."""

from __future__ import annotations

import dataclasses
import time
from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from pathlib import Path
from typing import Any

from tccsim.engine import Engine
from tccsim.errors import TccError
from tccsim.event_manager import DEFAULT_INTERVAL_MS
from tccsim.quizzes.functionalities import QuizzesFunctionalities, invoke
from tccsim.scenario.dsl import (
    AdjustVersion,
    AssertField,
    AssertHandled,
    AssertVersion,
    EventLoop,
    Invoke,
    Scenario,
    Sleep,
    Step,
    TriggerEvents,
)


class StepFailed(Exception):
    pass


@dataclass
class StepOutcome:
    index: int
    step: Step
    ok: bool
    detail: str = ""

    def __str__(self) -> str:
        status = "OK" if self.ok else f"FAIL:{self.detail}" if self.detail else "FAIL"
        return f"{self.index} {self.step} -> {status}"


@dataclass
class ScenarioReport:
    name: str
    outcomes: list[StepOutcome] = field(default_factory=list)
    journal: list[str] = field(default_factory=list)
    audit_violations: list[str] = field(default_factory=list)
    engine: Engine | None = field(default=None, repr=False)

    @property
    def passed(self) -> bool:
        return all(o.ok for o in self.outcomes)

    @property
    def failure(self) -> StepOutcome | None:
        return next((o for o in self.outcomes if not o.ok), None)

    def lines(self) -> list[str]:
        return [str(o) for o in self.outcomes]


def render(value: Any) -> str:
    """Canonical text form used by assert-field comparisons."""
    if value is None:
        return "-"
    if isinstance(value, datetime):
        return value.isoformat()
    if isinstance(value, Enum):
        return value.name
    if isinstance(value, (set, frozenset)):
        return ",".join(sorted(render(v) for v in value))
    if isinstance(value, tuple) and not dataclasses.is_dataclass(value):
        return ",".join(render(v) for v in value)
    return str(value)


def resolve_path(record, path: str) -> Any:
    """Walk ``path`` from a committed record.

    ``state`` and ``version`` address the record itself; other segments are
    payload attributes, and an integer segment selects the element of a
    collection with that ``student_id``.
    """
    segments = path.split(".")
    if segments == ["state"]:
        return record.state
    if segments == ["version"]:
        return record.version
    value: Any = record.payload
    for seg in segments:
        if seg.isdigit() and isinstance(value, tuple):
            value = next((x for x in value if getattr(x, "student_id", None) == int(seg)), None)
            if value is None:
                raise StepFailed(f"no element {seg} in {path}")
        elif dataclasses.is_dataclass(value) and hasattr(value, seg):
            value = getattr(value, seg)
        else:
            raise StepFailed(f"cannot resolve {seg!r} in {path}")
    return value


class ScenarioRunner:
    def __init__(
        self,
        *,
        audit: bool = False,
        event_interval_ms: int = DEFAULT_INTERVAL_MS,
        journal_file: str | Path | None = None,
    ):
        self.audit = audit
        self.event_interval_ms = event_interval_ms
        self.journal_file = journal_file

    def run(self, scenario: Scenario, *, keep_engine: bool = False) -> ScenarioReport:
        """Run every step in order, stopping at the first failed expectation.

        The event loop starts disabled. With ``keep_engine`` the report keeps
        the engine so callers can keep inspecting the final state.
        """
        engine = Engine(
            simulation=True,
            audit=self.audit,
            journal_file=self.journal_file,
            event_interval_ms=self.event_interval_ms,
        )
        run = _Run(engine)
        report = ScenarioReport(scenario.name)
        try:
            for index, step in enumerate(scenario.steps, start=1):
                try:
                    run.execute(step)
                except StepFailed as exc:
                    report.outcomes.append(StepOutcome(index, step, False, str(exc)))
                    break
                report.outcomes.append(StepOutcome(index, step, True))
        finally:
            engine.events.set_loop(False)
        report.journal = engine.store.journal()
        report.audit_violations = list(engine.units.audit_violations)
        if keep_engine:
            report.engine = engine
        return report


class _Run:
    def __init__(self, engine: Engine):
        self.engine = engine
        self.functionalities = QuizzesFunctionalities(engine)
        self.vars: dict[str, int] = {}
        self.last_handled: int | None = None

    def ref(self, token: str) -> int:
        if token.startswith("$"):
            try:
                return self.vars[token]
            except KeyError:
                raise StepFailed(f"{token} is not bound") from None
        return int(token)

    def args(self, tokens) -> list[str]:
        return [str(self.ref(t)) if t.startswith("$") else t for t in tokens]

    def execute(self, step: Step) -> None:
        method = getattr(self, f"_{type(step).__name__}")
        method(step)

    def _Invoke(self, step: Invoke) -> None:
        try:
            result = invoke(self.functionalities, step.functionality, self.args(step.args))
        except TccError as exc:
            if step.expect == exc.code.value:
                return
            raise StepFailed(f"aborted {exc}") from None
        except (KeyError, TypeError, ValueError) as exc:
            raise StepFailed(f"bad invocation: {exc}") from None
        if step.expect is not None:
            raise StepFailed(f"expected abort {step.expect}, committed")
        if step.bind:
            if not isinstance(result, int):
                raise StepFailed(f"{step.functionality} returned no aggregate id")
            self.vars[step.bind] = result

    def _AdjustVersion(self, step: AdjustVersion) -> None:
        try:
            self.engine.store.adjust_version(step.delta)
        except TccError as exc:
            raise StepFailed(str(exc)) from None

    def _TriggerEvents(self, step: TriggerEvents) -> None:
        subscriber = self.ref(step.subscriber) if step.subscriber else None
        self.last_handled = self.engine.events.detect_and_process(step.event_type, subscriber)

    def _EventLoop(self, step: EventLoop) -> None:
        self.engine.events.set_loop(step.enabled, step.interval_ms)

    def _Sleep(self, step: Sleep) -> None:
        time.sleep(step.ms / 1000)

    def _latest(self, ref: str):
        record = self.engine.store.latest(self.ref(ref))
        if record is None:
            raise StepFailed(f"{ref} has no committed version")
        return record

    def _AssertField(self, step: AssertField) -> None:
        actual = render(resolve_path(self._latest(step.ref), step.path))
        if actual != step.expected:
            raise StepFailed(f"{step.path}={actual!r}, expected {step.expected!r}")

    def _AssertVersion(self, step: AssertVersion) -> None:
        actual = self._latest(step.ref).version
        if actual != step.expected:
            raise StepFailed(f"version {actual}, expected {step.expected}")

    def _AssertHandled(self, step: AssertHandled) -> None:
        if self.last_handled is None:
            raise StepFailed("no trigger-events step ran yet")
        if self.last_handled != step.count:
            raise StepFailed(f"handled {self.last_handled}, expected {step.count}")


def run_scenario(scenario: Scenario, **options) -> ScenarioReport:
    keep = options.pop("keep_engine", False)
    return ScenarioRunner(**options).run(scenario, keep_engine=keep)
