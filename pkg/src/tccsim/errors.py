"""Error types raised by the engine.

Every error carries a stable :class:`ErrorCode` so scenario scripts can
state the expected abort reason by name.
"""

from __future__ import annotations

from enum import Enum


class ErrorCode(str, Enum):
    NOT_FOUND = "NOT_FOUND"
    DELETED = "DELETED"
    CAUSAL_INCONSISTENCY = "CAUSAL_INCONSISTENCY"
    INVARIANT_BREAK = "INVARIANT_BREAK"
    AGGREGATE_MERGE_FAILURE = "AGGREGATE_MERGE_FAILURE"
    FOREIGN_COPY = "FOREIGN_COPY"
    UNDERFLOW = "UNDERFLOW"
    TYPE_MISMATCH = "TYPE_MISMATCH"
    STATE = "STATE"
    ADJUST_DISABLED = "ADJUST_DISABLED"
    PARSE_ERROR = "PARSE_ERROR"


class TccError(Exception):
    code: ErrorCode

    def __init__(self, message: str = "", aggregate_id: int | None = None):
        self.aggregate_id = aggregate_id
        prefix = self.code.value
        if aggregate_id is not None:
            prefix = f"{prefix}[{aggregate_id}]"
        super().__init__(f"{prefix}: {message}" if message else prefix)


class NotFound(TccError):
    code = ErrorCode.NOT_FOUND


class Deleted(TccError):
    code = ErrorCode.DELETED


class CausalInconsistency(TccError):
    code = ErrorCode.CAUSAL_INCONSISTENCY


class InvariantBreak(TccError):
    code = ErrorCode.INVARIANT_BREAK

    def __init__(self, violations: dict[int | None, list[str]] | list[str], aggregate_id: int | None = None):
        if isinstance(violations, list):
            violations = {aggregate_id: violations}
        self.violations = violations
        detail = "; ".join(
            f"{agg}: {','.join(names)}" for agg, names in violations.items()
        )
        super().__init__(detail, aggregate_id)


class AggregateMergeFailure(TccError):
    """Concurrent versions could not be reconciled.

    ``intention`` is set when the failure comes from an intention violation,
    ``attribute`` when a merge hook refused to merge a value.
    """

    code = ErrorCode.AGGREGATE_MERGE_FAILURE

    def __init__(
        self,
        message: str = "",
        aggregate_id: int | None = None,
        *,
        intention: frozenset[str] | None = None,
        attribute: str | None = None,
    ):
        self.intention = intention
        self.attribute = attribute
        super().__init__(message, aggregate_id)


class ForeignCopy(TccError):
    code = ErrorCode.FOREIGN_COPY


class Underflow(TccError):
    code = ErrorCode.UNDERFLOW


class TypeMismatch(TccError):
    code = ErrorCode.TYPE_MISMATCH


class StateError(TccError):
    code = ErrorCode.STATE


class AdjustDisabled(TccError):
    code = ErrorCode.ADJUST_DISABLED


class ParseError(TccError):
    code = ErrorCode.PARSE_ERROR

    def __init__(self, message: str, line: int):
        self.line = line
        super().__init__(f"line {line}: {message}")
