"""Small generic aggregate used by the engine-level tests."""

from __future__ import annotations

from dataclasses import dataclass

from tccsim.aggregate import AggregateContract, AggregateState
from tccsim.merge import keyed_union, take_max
from tccsim.store import VersionedRecord, VersionStore


@dataclass(frozen=True)
class Item:
    a: int = 0
    b: int = 0
    c: int = 0
    d: int = 0
    entries: tuple[tuple[int, int], ...] = ()


ITEM = AggregateContract(
    type_name="Item",
    payload_type=Item,
    intra_invariants={"NON_NEGATIVE": lambda p: min(p.a, p.b, p.c, p.d) >= 0},
    changeable_fields=frozenset({"a", "b", "c", "d", "entries"}),
    intentions=(frozenset({"a", "b"}),),
    merge_hooks={"d": take_max, "entries": keyed_union(lambda e: e[0])},
)


def record(agg_id, version, payload=None, prev=None, state=AggregateState.ACTIVE, contract=ITEM, events=()):
    return VersionedRecord(agg_id, version, prev, state, payload or Item(), contract, tuple(events))


def put(store: VersionStore, agg_id: int, payload=None, state=AggregateState.ACTIVE) -> VersionedRecord:
    """Commit one new version of ``agg_id`` on top of its latest version."""
    head = store.latest(agg_id)
    version = store.next_commit_version()
    rec = record(agg_id, version, payload, head.version if head else None, state)
    store.commit_atomic([rec], [], version, "put")
    return rec


# criterion number -> (passed, detail); filled by test_acceptance, printed by conftest
ACCEPTANCE: dict[int, tuple[bool, str]] = {}
