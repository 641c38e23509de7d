"""Scenario files: one step per line, ``#`` starts a comment.

    scenario <name...>
    [$var =] invoke <functionality> [args...] [expect ok | expect abort <CODE>]
    adjust-version <delta>
    trigger-events [<EVENT_TYPE> | *] [<aggregate ref>]
    event-loop on [<interval ms>] | event-loop off
    sleep <ms>
    assert-field <aggregate ref> <attribute path> <expected>
    assert-version <aggregate ref> <expected version>
    assert-handled <count>

Tokens are split shell-style, so quote arguments that contain spaces.
Aggregate refs are either integer ids or ``$names`` bound by an earlier
invoke.
"""

from __future__ import annotations

import re
import shlex
from dataclasses import dataclass, field

from tccsim.errors import ErrorCode, ParseError

_VAR = re.compile(r"^\$[A-Za-z_][A-Za-z0-9_]*$")
_PLAIN = re.compile(r"^[\w$@%+=:,./-]+$")


def _quote(token: str) -> str:
    return token if _PLAIN.match(token) and not token.startswith("#") else shlex.quote(token)


def _join(tokens) -> str:
    return " ".join(_quote(t) for t in tokens)


def _ref(token: str, line: int) -> str:
    if _VAR.match(token) or token.isdigit():
        return token
    raise ParseError(f"expected an aggregate reference, got {token!r}", line)


def _int(token: str, line: int, what: str) -> int:
    try:
        return int(token)
    except ValueError:
        raise ParseError(f"{what} must be an integer, got {token!r}", line) from None


@dataclass(frozen=True)
class Invoke:
    functionality: str
    args: tuple[str, ...] = ()
    expect: str | None = None  # None means the invocation must succeed
    bind: str | None = None
    line: int = field(default=0, compare=False)

    def __str__(self) -> str:
        head = f"{self.bind} = " if self.bind else ""
        tail = f" expect abort {self.expect}" if self.expect else ""
        return f"{head}invoke {_join([self.functionality, *self.args])}{tail}"


@dataclass(frozen=True)
class AdjustVersion:
    delta: int
    line: int = field(default=0, compare=False)

    def __str__(self) -> str:
        return f"adjust-version {self.delta:+d}"


@dataclass(frozen=True)
class TriggerEvents:
    event_type: str | None = None
    subscriber: str | None = None
    line: int = field(default=0, compare=False)

    def __str__(self) -> str:
        parts = ["trigger-events", self.event_type or "*"]
        if self.subscriber:
            parts.append(self.subscriber)
        return " ".join(parts)


@dataclass(frozen=True)
class EventLoop:
    enabled: bool
    interval_ms: int | None = None
    line: int = field(default=0, compare=False)

    def __str__(self) -> str:
        text = f"event-loop {'on' if self.enabled else 'off'}"
        return f"{text} {self.interval_ms}" if self.interval_ms else text


@dataclass(frozen=True)
class Sleep:
    ms: int
    line: int = field(default=0, compare=False)

    def __str__(self) -> str:
        return f"sleep {self.ms}"


@dataclass(frozen=True)
class AssertField:
    ref: str
    path: str
    expected: str
    line: int = field(default=0, compare=False)

    def __str__(self) -> str:
        return f"assert-field {self.ref} {self.path} {_quote(self.expected)}"


@dataclass(frozen=True)
class AssertVersion:
    ref: str
    expected: int
    line: int = field(default=0, compare=False)

    def __str__(self) -> str:
        return f"assert-version {self.ref} {self.expected}"


@dataclass(frozen=True)
class AssertHandled:
    count: int
    line: int = field(default=0, compare=False)

    def __str__(self) -> str:
        return f"assert-handled {self.count}"


Step = Invoke | AdjustVersion | TriggerEvents | EventLoop | Sleep | AssertField | AssertVersion | AssertHandled


@dataclass
class Scenario:
    name: str
    steps: list[Step] = field(default_factory=list)


def _parse_invoke(tokens: list[str], bind: str | None, n: int) -> Invoke:
    if not tokens:
        raise ParseError("invoke needs a functionality name", n)
    expect = None
    if "expect" in tokens:
        at = tokens.index("expect")
        tail = tokens[at + 1:]
        tokens = tokens[:at]
        if tail == ["ok"]:
            expect = None
        elif len(tail) == 2 and tail[0] == "abort":
            if tail[1] not in ErrorCode.__members__:
                raise ParseError(f"unknown error code {tail[1]!r}", n)
            expect = tail[1]
        else:
            raise ParseError("expected 'expect ok' or 'expect abort <CODE>'", n)
        if not tokens:
            raise ParseError("invoke needs a functionality name", n)
    return Invoke(tokens[0], tuple(tokens[1:]), expect, bind, n)


def _parse_line(tokens: list[str], n: int, scenario: Scenario) -> Step | None:
    bind = None
    if len(tokens) >= 2 and tokens[1] == "=":
        if not _VAR.match(tokens[0]):
            raise ParseError(f"invalid variable name {tokens[0]!r}", n)
        bind, tokens = tokens[0], tokens[2:]
        if not tokens or tokens[0] != "invoke":
            raise ParseError("only invoke results can be bound", n)
    keyword, rest = tokens[0], tokens[1:]

    def arity(lo: int, hi: int) -> None:
        if not lo <= len(rest) <= hi:
            raise ParseError(f"{keyword} takes {lo}..{hi} arguments, got {len(rest)}", n)

    if keyword == "scenario":
        if not rest:
            raise ParseError("scenario needs a name", n)
        scenario.name = " ".join(rest)
        return None
    if keyword == "invoke":
        return _parse_invoke(rest, bind, n)
    if keyword == "adjust-version":
        arity(1, 1)
        return AdjustVersion(_int(rest[0], n, "delta"), n)
    if keyword == "trigger-events":
        arity(0, 2)
        event_type = rest[0] if rest and rest[0] != "*" else None
        subscriber = _ref(rest[1], n) if len(rest) == 2 else None
        return TriggerEvents(event_type, subscriber, n)
    if keyword == "event-loop":
        arity(1, 2)
        if rest[0] not in ("on", "off"):
            raise ParseError("event-loop takes 'on' or 'off'", n)
        interval = _int(rest[1], n, "interval") if len(rest) == 2 else None
        if interval is not None and interval <= 0:
            raise ParseError("interval must be positive", n)
        return EventLoop(rest[0] == "on", interval, n)
    if keyword == "sleep":
        arity(1, 1)
        return Sleep(_int(rest[0], n, "sleep"), n)
    if keyword == "assert-field":
        arity(3, 3)
        return AssertField(_ref(rest[0], n), rest[1], rest[2], n)
    if keyword == "assert-version":
        arity(2, 2)
        return AssertVersion(_ref(rest[0], n), _int(rest[1], n, "version"), n)
    if keyword == "assert-handled":
        arity(1, 1)
        return AssertHandled(_int(rest[0], n, "count"), n)
    raise ParseError(f"unknown step {keyword!r}", n)


def parse_scenario(text: str, name: str = "scenario") -> Scenario:
    scenario = Scenario(name)
    for n, raw in enumerate(text.splitlines(), start=1):
        try:
            tokens = shlex.split(raw, comments=True)
        except ValueError as exc:
            raise ParseError(str(exc), n) from None
        if not tokens:
            continue
        step = _parse_line(tokens, n, scenario)
        if step is not None:
            scenario.steps.append(step)
    return scenario
