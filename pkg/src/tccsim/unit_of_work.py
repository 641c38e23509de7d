"""Causal transactions: one :class:`UnitOfWork` per functionality execution."""

from __future__ import annotations

import logging
import threading
from contextlib import contextmanager
from enum import Enum
from itertools import combinations
from typing import Any, Iterator

from tccsim.aggregate import (
    AggregateContract,
    AggregateState,
    WorkingCopy,
    clone_for_write,
    verify_intra_invariants,
)
from tccsim.errors import (
    AggregateMergeFailure,
    CausalInconsistency,
    Deleted,
    ForeignCopy,
    InvariantBreak,
    NotFound,
    StateError,
    TccError,
)
from tccsim.events import Event, pair_admissible, snapshot_admissible
from tccsim.merge import merge_versions
from tccsim.store import VersionedRecord, VersionStore

logger = logging.getLogger(__name__)

MAX_MERGE_RETRIES = 3


class FunctionalityKind(Enum):
    QUERY = "QUERY"
    SIMPLE = "SIMPLE"
    COMPLEX = "COMPLEX"


class UnitOfWork:
    """Snapshot, write set and pending events of one functionality.

    Obtain instances from :meth:`UnitOfWorkService.begin`; a unit of work is
    confined to the thread running its functionality.
    """

    def __init__(self, service: UnitOfWorkService, name: str, version: int):
        self.service = service
        self.store = service.store
        self.name = name
        self.version = version
        self.snapshot: dict[int, WorkingCopy] = {}
        self.read_set: dict[int, VersionedRecord] = {}
        self.changed: dict[int, WorkingCopy] = {}
        self.pending_events: list[tuple[int, str, dict[str, Any]]] = []
        self.status = "active"
        self.committed_version: int | None = None
        self.kind: FunctionalityKind | None = None

    def __repr__(self) -> str:
        return f"UnitOfWork({self.name!r}, version={self.version}, {self.status})"

    @property
    def changed_ids(self) -> list[int]:
        return list(self.changed)

    def _check_active(self) -> None:
        if self.status != "active":
            raise StateError(f"unit of work {self.name} is {self.status}")

    # -- reads and writes -----------------------------------------------

    def read(self, aggregate_id: int) -> WorkingCopy:
        """Add ``aggregate_id`` to the causal snapshot and return its working copy.

        Picks the newest version below this unit's version. If that version
        is inconsistent with the event processing state of what was already
        read, older versions are tried before giving up.
        """
        self._check_active()
        if aggregate_id in self.snapshot:
            return self.snapshot[aggregate_id]
        candidates = [r for r in self.store.versions_of(aggregate_id) if r.version < self.version]
        if not candidates:
            raise NotFound(f"no version below {self.version}", aggregate_id)
        if candidates[-1].state is AggregateState.DELETED:
            raise Deleted(f"version {candidates[-1].version} is deleted", aggregate_id)
        members = list(self.read_set.values())
        events = self.store.events_before(self.version) if members else ()
        for record in reversed(candidates):
            if not members or snapshot_admissible(record, members, events):
                if record is not candidates[-1]:
                    logger.debug(
                        "%s: read %d at v%d instead of v%d",
                        self.name, aggregate_id, record.version, candidates[-1].version,
                    )
                copy = clone_for_write(record, owner=self)
                self.read_set[aggregate_id] = record
                self.snapshot[aggregate_id] = copy
                return copy
        raise CausalInconsistency(
            f"no version below {self.version} is consistent with the snapshot", aggregate_id
        )

    def register_changed(self, copy: WorkingCopy) -> None:
        self._check_active()
        if copy.owner is not self or self.snapshot.get(copy.aggregate_id) is not copy:
            raise ForeignCopy("copy does not belong to this unit of work", copy.aggregate_id)
        self.changed[copy.aggregate_id] = copy

    def register_new(
        self, contract: AggregateContract, payload: Any, state: AggregateState = AggregateState.ACTIVE
    ) -> WorkingCopy:
        self._check_active()
        copy = WorkingCopy(
            aggregate_id=self.store.allocate_id(),
            contract=contract,
            payload=payload,
            state=state,
            prev=None,
            owner=self,
        )
        self.snapshot[copy.aggregate_id] = copy
        self.changed[copy.aggregate_id] = copy
        return copy

    def emit(self, sender: WorkingCopy, event_type: str, **data: Any) -> None:
        """Queue an event; it is emitted with the sender's new version on commit."""
        self.register_changed(sender)
        self.pending_events.append((sender.aggregate_id, event_type, data))

    # -- termination -----------------------------------------------------

    def commit(self) -> int:
        """Run the commit protocol and return the version the writes carry.

        A query (nothing changed) commits nothing and returns the current
        version. On any error the unit of work aborts and the error is
        re-raised.
        """
        self._check_active()
        try:
            return self._commit()
        except TccError:
            self.abort()
            raise

    def _commit(self) -> int:
        n_changed = len(self.changed)
        self.kind = (
            FunctionalityKind.QUERY if n_changed == 0
            else FunctionalityKind.SIMPLE if n_changed == 1
            else FunctionalityKind.COMPLEX
        )
        if not self.changed:
            self._finish("committed")
            return self.store.current_version()

        self._verify(self.changed.values())
        for _ in range(self.service.max_merge_retries + 1):
            self._merge_concurrent()
            with self.store.critical_section():
                if self._stale():
                    continue
                version = self.store.next_commit_version()
                records, events = self._materialize(version)
                self.store.commit_atomic(records, events, version, self.name)
            self.committed_version = version
            self._finish("committed")
            return version
        raise AggregateMergeFailure(
            f"concurrent commits kept landing after {self.service.max_merge_retries} merge retries"
        )

    def abort(self) -> None:
        if self.status != "active":
            return
        self.changed.clear()
        self.pending_events.clear()
        self._finish("aborted")

    def _finish(self, status: str) -> None:
        self.status = status
        self.service._audit(self)
        self.snapshot.clear()

    def _verify(self, copies) -> None:
        violations = {}
        for copy in copies:
            broken = verify_intra_invariants(copy.contract, copy.payload)
            if broken:
                violations[copy.aggregate_id] = broken
        if violations:
            first = next(iter(violations))
            raise InvariantBreak(violations, first if len(violations) == 1 else None)

    def _merge_concurrent(self) -> None:
        for agg_id, copy in list(self.changed.items()):
            if copy.prev is None:
                continue
            head = self.store.latest(agg_id)
            if head.version > copy.prev.version:
                merged = merge_versions(copy, head)
                self._verify([merged])
                self.changed[agg_id] = merged
                self.snapshot[agg_id] = merged

    def _stale(self) -> bool:
        return any(
            copy.prev is not None and self.store.latest(agg_id).version != copy.prev.version
            for agg_id, copy in self.changed.items()
        )

    def _materialize(self, version: int) -> tuple[list[VersionedRecord], list[Event]]:
        events_by_sender: dict[int, list[Event]] = {}
        events = []
        for seq, (sender_id, event_type, data) in enumerate(self.pending_events):
            event = Event(event_type, sender_id, version, seq, dict(data))
            events.append(event)
            events_by_sender.setdefault(sender_id, []).append(event)
        records = [
            VersionedRecord(
                aggregate_id=agg_id,
                version=version,
                prev_version=copy.version,
                state=copy.state,
                payload=copy.payload,
                contract=copy.contract,
                emitted_events=tuple(events_by_sender.get(agg_id, ())),
            )
            for agg_id, copy in self.changed.items()
        ]
        return records, events


class UnitOfWorkService:
    """Creates units of work against a shared store.

    With ``audit`` enabled every finished unit of work has its snapshot
    re-validated pairwise; failures are collected in ``audit_violations``.
    """

    def __init__(self, store: VersionStore, *, audit: bool = False, max_merge_retries: int = MAX_MERGE_RETRIES):
        self.store = store
        self.audit = audit
        self.max_merge_retries = max_merge_retries
        self.audit_violations: list[str] = []
        self.audited_snapshots = 0
        self._audit_lock = threading.Lock()

    def begin(self, name: str) -> UnitOfWork:
        return UnitOfWork(self, name, self.store.current_version() + 1)

    @contextmanager
    def transaction(self, name: str) -> Iterator[UnitOfWork]:
        """Begin a unit of work, commit it on exit and abort it on error."""
        uow = self.begin(name)
        try:
            yield uow
        except BaseException:
            uow.abort()
            raise
        if uow.status == "active":
            uow.commit()

    def _audit(self, uow: UnitOfWork) -> None:
        if not self.audit:
            return
        records = list(uow.read_set.values())
        events = self.store.events_before(uow.version)
        problems = [
            f"{uow.name}@v{uow.version}: {a.aggregate_id}v{a.version} / {b.aggregate_id}v{b.version}"
            for a, b in combinations(records, 2)
            if not pair_admissible(a, b, events)
        ]
        with self._audit_lock:
            self.audited_snapshots += 1
            self.audit_violations.extend(problems)
