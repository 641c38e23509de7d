"""Append-only multi-version aggregate storage.

All committed state lives in one immutable :class:`_Snapshot` that is
swapped atomically under the commit lock. Readers grab the current snapshot
reference and never block, so they can never observe half of a commit.
"""

from __future__ import annotations

import bisect
import itertools
import logging
import threading
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Any, Iterable, Iterator, NamedTuple

from tccsim.errors import AdjustDisabled, Deleted, NotFound, Underflow

if TYPE_CHECKING:
    from tccsim.aggregate import AggregateContract, AggregateState
    from tccsim.events import Event

logger = logging.getLogger(__name__)

NO_VERSION = 0


@dataclass(frozen=True)
class VersionedRecord:
    """One committed, immutable version of one aggregate."""

    aggregate_id: int
    version: int
    prev_version: int | None
    state: AggregateState
    payload: Any
    contract: AggregateContract = field(repr=False, compare=False)
    emitted_events: tuple[Event, ...] = ()

    @property
    def type_name(self) -> str:
        return self.contract.type_name


class _Snapshot(NamedTuple):
    index: dict[int, tuple[VersionedRecord, ...]]
    events: tuple[Event, ...]
    last_committed: int
    highest: int
    commit_log: tuple[tuple[int, str], ...]


class VersionStore:
    """Shared store with a global last-committed version counter.

    ``allow_version_adjust`` enables :meth:`adjust_version`, the hook used by
    the scenario harness to simulate concurrent functionalities.
    """

    def __init__(self, journal_path: str | Path | None = None, *, allow_version_adjust: bool = False):
        self._lock = threading.RLock()
        self._state = _Snapshot({}, (), NO_VERSION, NO_VERSION, ())
        self._ids = itertools.count(1)
        self._id_lock = threading.Lock()
        self._journal: list[str] = []
        self._journal_path = Path(journal_path) if journal_path else None
        self.allow_version_adjust = allow_version_adjust

    # -- counter ---------------------------------------------------------

    def current_version(self) -> int:
        return self._state.last_committed

    def next_commit_version(self) -> int:
        # The counter can be lowered by adjust_version, so never hand out a
        # number at or below an already committed version.
        state = self._state
        return max(state.last_committed, state.highest) + 1

    def adjust_version(self, delta: int) -> int:
        if not self.allow_version_adjust:
            raise AdjustDisabled("version adjustment is a simulation-only hook")
        with self._lock:
            state = self._state
            value = state.last_committed + delta
            if value < 0:
                raise Underflow(f"counter {state.last_committed} adjusted by {delta}")
            self._state = state._replace(last_committed=value)
            logger.debug("version counter adjusted by %d to %d", delta, value)
            return value

    def allocate_id(self) -> int:
        with self._id_lock:
            return next(self._ids)

    # -- reads -----------------------------------------------------------

    def versions_of(self, aggregate_id: int) -> list[VersionedRecord]:
        return list(self._state.index.get(aggregate_id, ()))

    def latest(self, aggregate_id: int) -> VersionedRecord | None:
        versions = self._state.index.get(aggregate_id)
        return versions[-1] if versions else None

    def latest_before(self, aggregate_id: int, bound: int) -> VersionedRecord:
        """Committed version of ``aggregate_id`` with the greatest number below ``bound``."""
        versions = self._state.index.get(aggregate_id, ())
        pos = bisect.bisect_left([r.version for r in versions], bound)
        if pos == 0:
            raise NotFound(f"no version below {bound}", aggregate_id)
        record = versions[pos - 1]
        if record.state.name == "DELETED":
            raise Deleted(f"version {record.version} is deleted", aggregate_id)
        return record

    def aggregate_ids(self, type_name: str | None = None) -> list[int]:
        index = self._state.index
        return sorted(
            agg_id
            for agg_id, versions in index.items()
            if type_name is None or versions[-1].type_name == type_name
        )

    def events(self) -> tuple[Event, ...]:
        return self._state.events

    def events_before(self, bound: int) -> tuple[Event, ...]:
        return tuple(e for e in self._state.events if e.sender_version < bound)

    def commit_log(self) -> list[tuple[int, str]]:
        return list(self._state.commit_log)

    def journal(self) -> list[str]:
        with self._lock:
            return list(self._journal)

    # -- commit ----------------------------------------------------------

    @contextmanager
    def critical_section(self) -> Iterator[None]:
        """The serializable commit section; re-entrant."""
        with self._lock:
            yield

    def commit_atomic(
        self,
        records: Iterable[VersionedRecord],
        events: Iterable[Event],
        commit_version: int,
        functionality: str = "-",
    ) -> int:
        records = tuple(records)
        events = tuple(events)
        with self._lock:
            state = self._state
            if not records and not events:
                return state.last_committed
            expected = self.next_commit_version()
            if commit_version != expected:
                raise ValueError(f"commit version {commit_version}, expected {expected}")
            index = dict(state.index)
            for record in records:
                if record.version != commit_version:
                    raise ValueError(f"record {record.aggregate_id} carries version {record.version}")
                history = index.get(record.aggregate_id, ())
                if record.prev_version is not None:
                    if not any(r.version == record.prev_version for r in history):
                        raise ValueError(
                            f"record {record.aggregate_id} prev {record.prev_version} is not committed"
                        )
                index[record.aggregate_id] = history + (record,)
            for event in events:
                if event.sender_version != commit_version:
                    raise ValueError(f"event {event} does not carry version {commit_version}")
            self._state = _Snapshot(
                index,
                state.events + events,
                commit_version,
                max(state.highest, commit_version),
                state.commit_log + ((commit_version, functionality),),
            )
            self._write_journal(commit_version, functionality, records, events)
            return commit_version

    def _write_journal(self, version, functionality, records, events) -> None:
        ids = ",".join(str(r.aggregate_id) for r in records) or "-"
        types = ",".join(e.event_type for e in events) or "-"
        line = f"commit {version} {functionality or '-'} {ids} {types}"
        self._journal.append(line)
        if self._journal_path is not None:
            with self._journal_path.open("a", encoding="utf-8", newline="\n") as fh:
                fh.write(line + "\n")
