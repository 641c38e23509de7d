"""Transactional causal consistency for microservice aggregates.

A multi-version store, causal units of work with commit-time merges,
versioned event subscriptions, and a scenario harness that replays
concurrent interleavings deterministically.
"""

from tccsim.aggregate import (
    AggregateContract,
    AggregateState,
    WorkingCopy,
    build_subscriptions,
    clone_for_write,
    verify_intra_invariants,
)
from tccsim.engine import Engine
from tccsim.errors import ErrorCode, TccError
from tccsim.events import Event, EventSubscription, matches, snapshot_admissible
from tccsim.merge import NON_MERGEABLE, diff, intention_conflict, merge_versions
from tccsim.store import VersionedRecord, VersionStore
from tccsim.unit_of_work import FunctionalityKind, UnitOfWork, UnitOfWorkService

__all__ = [
    "AggregateContract",
    "AggregateState",
    "Engine",
    "ErrorCode",
    "Event",
    "EventSubscription",
    "FunctionalityKind",
    "NON_MERGEABLE",
    "TccError",
    "UnitOfWork",
    "UnitOfWorkService",
    "VersionStore",
    "VersionedRecord",
    "WorkingCopy",
    "build_subscriptions",
    "clone_for_write",
    "diff",
    "intention_conflict",
    "matches",
    "merge_versions",
    "snapshot_admissible",
    "verify_intra_invariants",
]

__version__ = "0.1.0"
