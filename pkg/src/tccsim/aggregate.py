"""The contract every domain aggregate type plugs into the engine.

Payloads are frozen dataclasses. A working copy swaps its payload for an
updated one with :meth:`WorkingCopy.update`, so committed payloads are
never mutated in place.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING, Any, Callable, Iterable, Mapping

from tccsim.store import VersionedRecord

if TYPE_CHECKING:
    from tccsim.events import Event, EventSubscription

MergeHook = Callable[[Any, Any, Any], Any]
Invariant = Callable[[Any], bool]
EventApplier = Callable[["WorkingCopy", "Event"], None]


class AggregateState(Enum):
    ACTIVE = "ACTIVE"
    INACTIVE = "INACTIVE"
    DELETED = "DELETED"


@dataclass(frozen=True, eq=False)
class AggregateContract:
    """Per-type hooks: invariants, subscriptions, intentions and merges.

    ``merge_hooks`` receive ``(to_commit_value, committed_value,
    ancestor_value)`` and return the merged value or
    :data:`tccsim.merge.NON_MERGEABLE`. Changeable attributes without a hook
    use last-writer-wins. ``event_appliers`` are kept in declaration order,
    which is also the order same-version events are applied in.
    """

    type_name: str
    payload_type: type
    intra_invariants: Mapping[str, Invariant] = field(default_factory=dict)
    changeable_fields: frozenset[str] = frozenset()
    intentions: tuple[frozenset[str], ...] = ()
    merge_hooks: Mapping[str, MergeHook] = field(default_factory=dict)
    subscriptions: Callable[[Any], Iterable[EventSubscription]] | None = None
    event_appliers: Mapping[str, EventApplier] = field(default_factory=dict)

    def __post_init__(self):
        if not dataclasses.is_dataclass(self.payload_type):
            raise TypeError(f"{self.type_name}: payload type must be a dataclass")
        object.__setattr__(self, "changeable_fields", frozenset(self.changeable_fields))
        object.__setattr__(self, "intentions", tuple(frozenset(i) for i in self.intentions))
        attributes = self.attributes
        if not self.changeable_fields <= attributes:
            raise ValueError(
                f"{self.type_name}: unknown changeable fields {sorted(self.changeable_fields - attributes)}"
            )
        declared = set().union(*self.intentions) | set(self.merge_hooks)
        if not declared <= self.changeable_fields:
            raise ValueError(
                f"{self.type_name}: intentions/merge hooks name non-changeable fields "
                f"{sorted(declared - self.changeable_fields)}"
            )

    @property
    def attributes(self) -> frozenset[str]:
        return frozenset(f.name for f in dataclasses.fields(self.payload_type))


@dataclass(eq=False)
class WorkingCopy:
    """A unit-of-work local, detached version of an aggregate."""

    aggregate_id: int
    contract: AggregateContract
    payload: Any
    state: AggregateState = AggregateState.ACTIVE
    prev: VersionedRecord | None = None
    owner: Any = field(default=None, repr=False)

    @property
    def type_name(self) -> str:
        return self.contract.type_name

    @property
    def version(self) -> int | None:
        """Version of the committed record this copy evolved from."""
        return self.prev.version if self.prev is not None else None

    def update(self, **changes: Any) -> None:
        self.payload = dataclasses.replace(self.payload, **changes)


def verify_intra_invariants(contract: AggregateContract, payload: Any) -> list[str]:
    """Names of the violated intra-invariants; empty when the payload is valid."""
    return [name for name, check in contract.intra_invariants.items() if not check(payload)]


def build_subscriptions(contract: AggregateContract, view: Any) -> frozenset[EventSubscription]:
    # view: a VersionedRecord or WorkingCopy
    if view.state is not AggregateState.ACTIVE or contract.subscriptions is None:
        return frozenset()
    return frozenset(contract.subscriptions(view.payload))


def clone_for_write(record: VersionedRecord, owner: Any = None) -> WorkingCopy:
    if not isinstance(record, VersionedRecord):
        raise TypeError("only committed records can be cloned for write")
    return WorkingCopy(
        aggregate_id=record.aggregate_id,
        contract=record.contract,
        payload=record.payload,
        state=record.state,
        prev=record,
        owner=owner,
    )
