"""Events, versioned subscriptions and snapshot admissibility.

An aggregate version *subscribes* an event when one of its subscriptions
matches it: same sender and type, a sender version newer than the one the
subscriber has already absorbed, and the subscriber's filter accepts it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Mapping

from tccsim.aggregate import build_subscriptions

EventFilter = Callable[["Event", Any], bool]


def _accept_all(event: Event, payload: Any) -> bool:
    return True


@dataclass(frozen=True)
class Event:
    event_type: str
    sender_id: int
    sender_version: int
    seq: int = 0
    data: Mapping[str, Any] = field(default_factory=dict, compare=False, hash=False)

    def __str__(self) -> str:
        return f"{self.event_type}@{self.sender_id}v{self.sender_version}"


@dataclass(frozen=True)
class EventSubscription:
    sender_id: int
    sender_version: int
    event_type: str
    filter: EventFilter = field(default=_accept_all, compare=False, hash=False, repr=False)

    def key(self) -> tuple[int, int, str]:
        return (self.sender_id, self.sender_version, self.event_type)

    def relevant(self, event: Event, subscriber_payload: Any) -> bool:
        """Matches ignoring whether the event was already absorbed."""
        return (
            event.sender_id == self.sender_id
            and event.event_type == self.event_type
            and self.filter(event, subscriber_payload)
        )


def matches(sub: EventSubscription, event: Event, subscriber_payload: Any) -> bool:
    return event.sender_version > sub.sender_version and sub.relevant(event, subscriber_payload)


def subscribes(view: Any, event: Event) -> bool:
    """True when ``event`` is pending for the aggregate version ``view``."""
    return _pending(build_subscriptions(view.contract, view), view, event)


def _pending(subs: Iterable[EventSubscription], view: Any, event: Event) -> bool:
    return any(matches(sub, event, view.payload) for sub in subs)


def _relevant(subs: Iterable[EventSubscription], view: Any, event: Event) -> bool:
    return any(sub.relevant(event, view.payload) for sub in subs)


def emitted_by(view: Any, events: Iterable[Event]) -> list[Event]:
    """Events emitted by the aggregate up to and including ``view``'s version."""
    return [
        e for e in events if e.sender_id == view.aggregate_id and e.sender_version <= view.version
    ]


def pair_admissible(a: Any, b: Any, events: Iterable[Event]) -> bool:
    events = tuple(events)
    subs_a = build_subscriptions(a.contract, a)
    subs_b = build_subscriptions(b.contract, b)
    if subs_a and subs_b:
        for e in events:
            # Two subscribers must agree on events that concern both of them.
            if (
                _relevant(subs_a, a, e)
                and _relevant(subs_b, b, e)
                and _pending(subs_a, a, e) != _pending(subs_b, b, e)
            ):
                return False
    for upstream, downstream, subs in ((a, b, subs_b), (b, a, subs_a)):
        if subs and any(_pending(subs, downstream, e) for e in emitted_by(upstream, events)):
            return False
    return True


def snapshot_admissible(candidate: Any, members: Iterable[Any], events: Iterable[Event]) -> bool:
    """Whether ``candidate`` can join a snapshot already holding ``members``.

    ``events`` should be the committed events visible to the snapshot, i.e.
    those with a sender version below the unit of work's version.
    """
    events = tuple(events)
    return all(pair_admissible(candidate, m, events) for m in members)
