from __future__ import annotations

from pathlib import Path

from tccsim.event_manager import DEFAULT_INTERVAL_MS, EventManager
from tccsim.store import VersionStore
from tccsim.unit_of_work import UnitOfWorkService


class Engine:
    """Store, unit-of-work service and event manager wired together.

    ``simulation`` enables the version adjustment hook used to script
    concurrent interleavings; production callers leave it off.
    """

    def __init__(
        self,
        *,
        simulation: bool = False,
        audit: bool = False,
        journal_file: str | Path | None = None,
        event_interval_ms: int = DEFAULT_INTERVAL_MS,
    ):
        self.store = VersionStore(journal_file, allow_version_adjust=simulation)
        self.units = UnitOfWorkService(self.store, audit=audit)
        self.events = EventManager(self.store, self.units, event_interval_ms)

    def close(self) -> None:
        self.events.close()

    def __enter__(self) -> Engine:
        return self

    def __exit__(self, *exc) -> None:
        self.close()
