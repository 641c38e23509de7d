"""Reconciling a working copy with a version committed concurrently.

The merge runs against the common ancestor (the committed version the
working copy was cloned from): diff both sides, refuse when an intention
would be split across the two sides, then layer the working copy's changed
attributes on top of the committed payload. Attributes changed on both
sides go through the contract's merge hooks.
Re-checking intra-invariants on the result is left to the caller.
"""

from __future__ import annotations

import dataclasses
from typing import Any, Callable, Hashable, Iterable

from tccsim.aggregate import AggregateContract, AggregateState, WorkingCopy
from tccsim.errors import AggregateMergeFailure, TypeMismatch
from tccsim.store import VersionedRecord


class _NonMergeable:
    def __repr__(self) -> str:
        return "NON_MERGEABLE"


NON_MERGEABLE = _NonMergeable()


def diff(base: Any, variant: Any, contract: AggregateContract | None = None) -> frozenset[str]:
    """Attributes whose values differ between two payloads of the same type."""
    if type(base) is not type(variant):
        raise TypeMismatch(f"{type(base).__name__} vs {type(variant).__name__}")
    if contract is not None and not isinstance(base, contract.payload_type):
        raise TypeMismatch(f"{type(base).__name__} is not a {contract.type_name} payload")
    return frozenset(
        f.name
        for f in dataclasses.fields(base)
        if getattr(base, f.name) != getattr(variant, f.name)
    )


def intention_conflict(
    diff_a: Iterable[str], diff_b: Iterable[str], intentions: Iterable[Iterable[str]]
) -> frozenset[str] | None:
    """The intention split between the two diffs, or None.

    An intention is split when one side changed some of its attributes and
    the other side changed a different one, unless both sides changed all of
    them. With several split intentions the lexicographically first wins.
    """
    a, b = frozenset(diff_a), frozenset(diff_b)
    for intention in sorted((frozenset(i) for i in intentions), key=sorted):
        if intention <= a and intention <= b:
            continue
        mine, theirs = a & intention, b & intention
        if any(x != y for x in mine for y in theirs):
            return intention
    return None


def last_writer_wins(new: Any, committed: Any, ancestor: Any) -> Any:
    return new


def take_max(new: Any, committed: Any, ancestor: Any) -> Any:
    return max(new, committed)


def keyed_union(key: Callable[[Any], Hashable]) -> Callable[[Any, Any, Any], tuple]:
    """Three-way merge of a collection whose elements are identified by ``key``.

    Additions and removals from both sides are kept; an element changed on
    the committing side overrides the committed element with the same key.
    """

    def merge(new: Iterable, committed: Iterable, ancestor: Iterable) -> tuple:
        base = {key(x): x for x in ancestor}
        mine = {key(x): x for x in new}
        result = {key(x): x for x in committed}
        for k in base.keys() - mine.keys():
            result.pop(k, None)
        for k, x in mine.items():
            if base.get(k) != x:
                result[k] = x
        return tuple(result[k] for k in sorted(result))

    return merge


def merge_versions(to_commit: WorkingCopy, committed: VersionedRecord) -> WorkingCopy:
    """Merge ``to_commit`` into the newer ``committed`` version of the same aggregate.

    The returned copy has ``committed`` as its prev, so it supersedes it on
    commit. Raises :class:`AggregateMergeFailure` on intention conflicts and
    on attributes that cannot be merged.
    """
    contract = to_commit.contract
    agg_id = to_commit.aggregate_id
    ancestor = to_commit.prev
    if ancestor is None:
        raise ValueError("a freshly created aggregate has nothing to merge with")
    if committed.aggregate_id != agg_id:
        raise TypeMismatch(f"cannot merge with aggregate {committed.aggregate_id}", agg_id)
    if committed.version <= ancestor.version:
        raise ValueError(f"version {committed.version} is not newer than {ancestor.version}")
    if committed.state is AggregateState.DELETED:
        raise AggregateMergeFailure("aggregate was deleted concurrently", agg_id)

    mine = diff(ancestor.payload, to_commit.payload, contract)
    theirs = diff(ancestor.payload, committed.payload, contract)
    split = intention_conflict(mine, theirs, contract.intentions)
    if split is not None:
        raise AggregateMergeFailure(
            f"intention {{{', '.join(sorted(split))}}} changed on both sides",
            agg_id,
            intention=split,
        )

    changes = {}
    for attr in sorted(mine):
        if attr not in contract.changeable_fields:
            raise AggregateMergeFailure(f"{attr} is not changeable", agg_id, attribute=attr)
        if attr not in theirs:
            # a one-sided change is adopted as is
            changes[attr] = getattr(to_commit.payload, attr)
            continue
        hook = contract.merge_hooks.get(attr, last_writer_wins)
        value = hook(
            getattr(to_commit.payload, attr),
            getattr(committed.payload, attr),
            getattr(ancestor.payload, attr),
        )
        if value is NON_MERGEABLE:
            raise AggregateMergeFailure(f"{attr} cannot be merged", agg_id, attribute=attr)
        changes[attr] = value

    state = to_commit.state if to_commit.state is not ancestor.state else committed.state
    return WorkingCopy(
        aggregate_id=agg_id,
        contract=contract,
        payload=dataclasses.replace(committed.payload, **changes),
        state=state,
        prev=committed,
        owner=to_commit.owner,
    )
