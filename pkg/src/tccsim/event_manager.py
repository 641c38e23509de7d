"""Detection and processing of committed events.

Each handler run is an ordinary causal transaction on the subscriber's
latest version, so a handler racing a functionality is reconciled by the
regular merge path at commit.
"""

from __future__ import annotations

import logging
import threading
from itertools import groupby

from tccsim.aggregate import AggregateState, build_subscriptions
from tccsim.errors import TccError
from tccsim.events import Event, matches
from tccsim.store import VersionStore
from tccsim.unit_of_work import UnitOfWorkService

logger = logging.getLogger(__name__)

DEFAULT_INTERVAL_MS = 1000


class EventManager:
    def __init__(self, store: VersionStore, units: UnitOfWorkService, interval_ms: int = DEFAULT_INTERVAL_MS):
        self.store = store
        self.units = units
        self.interval_ms = interval_ms
        self.handler_commits = 0
        self.handler_failures = 0
        self._scan_lock = threading.Lock()
        self._loop_lock = threading.Lock()
        self._stop: threading.Event | None = None
        self._thread: threading.Thread | None = None

    def detect_and_process(self, event_type: str | None = None, subscriber_id: int | None = None) -> int:
        """Run handlers for every pending event; returns the number of handler commits.

        Events are taken in ascending sender version. All events a subscriber
        matches from one sender commit are applied in one handler run, since
        absorbing one of them advances the subscription past the others.
        """
        with self._scan_lock:
            events = [
                e for e in self.store.events() if event_type is None or e.event_type == event_type
            ]
            events.sort(key=lambda e: (e.sender_version, e.sender_id, e.seq))
            processed = 0
            for _, group in groupby(events, key=lambda e: (e.sender_version, e.sender_id)):
                group = list(group)
                for agg_id in self.store.aggregate_ids():
                    if subscriber_id is not None and agg_id != subscriber_id:
                        continue
                    pending = self._pending_for(agg_id, group)
                    if pending and self._handle(agg_id, pending):
                        processed += 1
            return processed

    def drain(self, max_rounds: int = 100) -> int:
        """Process until nothing is pending; returns total handler commits."""
        total = 0
        for _ in range(max_rounds):
            n = self.detect_and_process()
            if n == 0:
                break
            total += n
        return total

    def _pending_for(self, agg_id: int, events: list[Event]) -> list[Event]:
        record = self.store.latest(agg_id)
        if record is None or record.state is not AggregateState.ACTIVE:
            return []
        appliers = record.contract.event_appliers
        subs = build_subscriptions(record.contract, record)
        if not subs:
            return []
        order = {t: i for i, t in enumerate(appliers)}
        pending = [
            e
            for e in events
            if e.event_type in appliers and any(matches(s, e, record.payload) for s in subs)
        ]
        return sorted(pending, key=lambda e: (order[e.event_type], e.seq))

    def _handle(self, agg_id: int, events: list[Event]) -> bool:
        # events arrive in application order, so the name lists them that way
        name = "handle-" + "+".join(dict.fromkeys(e.event_type for e in events))
        uow = self.units.begin(name)
        try:
            copy = uow.read(agg_id)
            subs = build_subscriptions(copy.contract, copy)
            todo = [e for e in events if any(matches(s, e, copy.payload) for s in subs)]
            if not todo:
                uow.abort()
                return False
            order = {t: i for i, t in enumerate(copy.contract.event_appliers)}
            for event in sorted(todo, key=lambda e: (order[e.event_type], e.seq)):
                copy.contract.event_appliers[event.event_type](copy, event)
            uow.register_changed(copy)
            uow.commit()
        except TccError as exc:
            uow.abort()
            self.handler_failures += 1
            logger.info("handler %s on %d aborted: %s", name, agg_id, exc)
            return False
        self.handler_commits += 1
        return True

    # -- periodic loop ---------------------------------------------------

    @property
    def loop_enabled(self) -> bool:
        return self._thread is not None

    def set_loop(self, enabled: bool, interval_ms: int | None = None) -> None:
        if interval_ms is not None:
            if interval_ms <= 0:
                raise ValueError("interval must be positive")
            self.interval_ms = interval_ms
        with self._loop_lock:
            if enabled and self._thread is None:
                self._stop = threading.Event()
                self._thread = threading.Thread(
                    target=self._run_loop, args=(self._stop,), name="event-detection", daemon=True
                )
                self._thread.start()
            elif not enabled and self._thread is not None:
                self._stop.set()
                self._thread.join()
                self._thread = None
                self._stop = None

    def _run_loop(self, stop: threading.Event) -> None:
        # The wait starts when the previous run finishes.
        while not stop.wait(self.interval_ms / 1000):
            try:
                self.detect_and_process()
            except Exception:
                logger.exception("event detection run failed")

    def close(self) -> None:
        self.set_loop(False)
