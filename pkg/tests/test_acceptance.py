"""One test per acceptance criterion; each records a PASS/FAIL line."""

import contextlib
import io
import random
import time
from datetime import datetime, timedelta
from itertools import chain, combinations

from support import ACCEPTANCE, ITEM, Item, record

from tccsim.aggregate import AggregateState, clone_for_write, verify_intra_invariants
from tccsim.cli import main
from tccsim.engine import Engine
from tccsim.errors import AggregateMergeFailure, Deleted, NotFound, TccError
from tccsim.merge import intention_conflict, merge_versions
from tccsim.quizzes import QuizzesFunctionalities, participant_exists_report
from tccsim.scenario import builtin_suite, run_scenario
from tccsim.scenario.stress import run_stress
from tccsim.store import VersionStore


@contextlib.contextmanager
def criterion(n: int, label: str):
    detail = {"text": ""}
    ok = False
    try:
        yield detail
        ok = True
    finally:
        line = f"{label}: {detail['text']}"
        ACCEPTANCE[n] = (ok, line)
        print(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {line}")


def test_criterion_1_builtin_suite():
    with criterion(1, "builtin suite") as d:
        start = time.perf_counter()
        reports = [run_scenario(s) for s in builtin_suite()]
        out = io.StringIO()
        with contextlib.redirect_stdout(out):
            code = main(["suite"])
        elapsed = time.perf_counter() - start
        passed = sum(r.passed for r in reports)
        d["text"] = f"{passed}/{len(reports)} scenarios, cli exit {code}, {elapsed:.2f}s (limit 30s)"
        assert len(reports) == 7 and passed == 7
        assert code == 0 and out.getvalue().splitlines()[-1] == "7/7 passed"
        assert elapsed < 30


def random_history(rng: random.Random) -> tuple[VersionStore, list[tuple[int, int, AggregateState]]]:
    """Up to 5 aggregates with up to 10 versions in total, some deleted."""
    store = VersionStore(allow_version_adjust=True)
    flat = []
    n_aggs = rng.randint(1, 5)
    heads: dict[int, int] = {}
    version = 0
    for _ in range(rng.randint(1, 10)):
        version += rng.randint(1, 3)
        store.adjust_version(version - 1 - store.current_version())
        agg_id = rng.randint(1, n_aggs)
        if any(a == agg_id and s is AggregateState.DELETED for a, _, s in flat):
            continue  # deleted aggregates get no further versions
        state = AggregateState.DELETED if agg_id in heads and rng.random() < 0.15 else AggregateState.ACTIVE
        store.commit_atomic([record(agg_id, version, prev=heads.get(agg_id), state=state)], [], version)
        heads[agg_id] = version
        flat.append((agg_id, version, state))
    return store, flat


def oracle_latest_before(flat, agg_id, bound):
    candidates = [(v, s) for a, v, s in flat if a == agg_id and v < bound]
    if not candidates:
        return "NOT_FOUND"
    v, s = max(candidates)
    return "DELETED" if s is AggregateState.DELETED else v


def test_criterion_2_snapshot_rule():
    with criterion(2, "latest-before vs max-filter oracle") as d:
        rng = random.Random(20240301)
        mismatches = 0
        for _ in range(1000):
            store, flat = random_history(rng)
            agg_id = rng.randint(1, 6)
            bound = rng.randint(0, 32)
            try:
                got = store.latest_before(agg_id, bound).version
            except NotFound:
                got = "NOT_FOUND"
            except Deleted:
                got = "DELETED"
            mismatches += got != oracle_latest_before(flat, agg_id, bound)
        d["text"] = f"1000 cases, {mismatches} mismatches"
        assert mismatches == 0


def powerset(items):
    items = sorted(items)
    return [frozenset(c) for c in chain.from_iterable(combinations(items, r) for r in range(len(items) + 1))]


def literal_condition(diff_a, diff_b, intentions):
    """Exists distinct a in A, b in B and intention i with {a, b} <= i, not (i <= A and i <= B)."""
    return [
        i
        for i in intentions
        if any(x != y and {x, y} <= i for x in diff_a for y in diff_b)
        and not (i <= diff_a and i <= diff_b)
    ]


def test_criterion_3_intention_condition():
    with criterion(3, "intention condition, exhaustive over 4 attributes") as d:
        attributes = "abcd"
        diffs = powerset(attributes)
        candidates = [s for s in diffs if 1 <= len(s) <= 3]
        families = [f for r in range(4) for f in combinations(candidates, r)]
        checked = disagreements = 0
        for family in families:
            for a in diffs:
                for b in diffs:
                    expected = literal_condition(a, b, family)
                    got = intention_conflict(a, b, family)
                    want = min(expected, key=sorted) if expected else None
                    checked += 1
                    disagreements += got != want
        d["text"] = f"{len(families)} intention families x {len(diffs) ** 2} diff pairs = {checked} checks, {disagreements} disagreements"
        assert disagreements == 0


def oracle_merge(ancestor: Item, mine: Item, theirs: Item) -> Item:
    """Independent three-way merge: one-sided changes win, both-sided go to the attribute's rule."""
    out = {}
    for name in ("a", "b", "c", "d"):
        o, m, t = getattr(ancestor, name), getattr(mine, name), getattr(theirs, name)
        if m == o:
            out[name] = t
        elif t == o:
            out[name] = m
        else:
            out[name] = max(m, t) if name == "d" else m
    base, m_map, t_map = dict(ancestor.entries), dict(mine.entries), dict(theirs.entries)
    entries = {}
    for key in base.keys() | m_map.keys() | t_map.keys():
        side = m_map if m_map.get(key) != base.get(key) else t_map
        if key in side:
            entries[key] = side[key]
    out["entries"] = tuple(sorted(entries.items()))
    return Item(**out)


def random_item(rng, base: Item | None = None) -> Item:
    if base is None:
        entries = {k: rng.randint(0, 3) for k in rng.sample(range(6), rng.randint(0, 4))}
        return Item(*(rng.randint(0, 5) for _ in range(4)), entries=tuple(sorted(entries.items())))
    changes = {}
    for name in rng.sample(["a", "b", "c", "d"], rng.randint(0, 4)):
        changes[name] = rng.randint(0, 5)
    entries = dict(base.entries)
    if rng.random() < 0.5:
        for _ in range(rng.randint(1, 3)):
            key = rng.randrange(6)
            if key in entries and rng.random() < 0.4:
                del entries[key]
            else:
                entries[key] = rng.randint(0, 3)
    changes["entries"] = tuple(sorted(entries.items()))
    return Item(**{**base.__dict__, **changes})


def test_criterion_4_merge_correctness():
    with criterion(4, "merge vs three-way oracle") as d:
        rng = random.Random(7)
        cases = skipped = mismatches = invariant_failures = 0
        while cases < 500:
            ancestor = random_item(rng)
            mine, theirs = random_item(rng, ancestor), random_item(rng, ancestor)
            base = record(1, 5, ancestor)
            committed = record(1, 9, theirs, prev=5)
            copy = clone_for_write(base)
            copy.update(**mine.__dict__)
            try:
                merged = merge_versions(copy, committed)
            except AggregateMergeFailure:
                skipped += 1  # concurrent updates that split the {a, b} intention
                continue
            cases += 1
            mismatches += merged.payload != oracle_merge(ancestor, mine, theirs)
            invariant_failures += bool(verify_intra_invariants(ITEM, merged.payload))
        d["text"] = (
            f"{cases} non-conflicting merges ({skipped} conflicting skipped), "
            f"{mismatches} mismatches, {invariant_failures} invariant failures"
        )
        assert mismatches == 0 and invariant_failures == 0


def test_criterion_5_query_stability():
    with criterion(5, "queries interleaved with writers") as d:
        rng = random.Random(11)
        engine = Engine(simulation=True)
        app = QuizzesFunctionalities(engine)
        students = [(i, f"s{i}") for i in range(1, 9)]
        ce = app.create_course_execution("2024-1", students)
        start = datetime(2024, 3, 1, 10)
        tournaments = [app.create_tournament(ce, i, start, start + timedelta(hours=2), ["t"]) for i in (1, 2, 3)]
        floor = engine.store.current_version()

        def roster(tid):
            # reads the tournament, then the course execution it depends on
            with engine.units.transaction("getRoster") as uow:
                t = uow.read(tid)
                ce_copy = uow.read(t.payload.course_execution_id)
                return [ce_copy.payload.student(p.student_id) for p in t.payload.participants]

        queries = [
            lambda: app.get_tournament(rng.choice(tournaments)),
            lambda: app.get_course_execution(ce),
            lambda: app.get_quiz(app.tournament_quiz(rng.choice(tournaments))),
            lambda: roster(rng.choice(tournaments)),
        ]
        writers = [
            lambda: app.update_student_name(ce, rng.randint(1, 8), f"n{rng.randint(0, 99)}"),
            lambda: app.anonymize_student(ce, rng.randint(1, 8)),
            lambda: app.add_participant(rng.choice(tournaments), rng.randint(1, 8)),
            lambda: app.leave_tournament(rng.choice(tournaments), rng.randint(1, 8)),
            lambda: app.update_tournament(
                rng.choice(tournaments), start + timedelta(minutes=rng.randint(0, 50)), None, None
            ),
            lambda: engine.events.detect_and_process(),
        ]
        aborts, writer_aborts = [], 0
        for _ in range(200):
            for _ in range(rng.randint(0, 3)):
                try:
                    rng.choice(writers)()
                except TccError:
                    writer_aborts += 1
            # start the query up to three commits in the past
            back = min(rng.randint(0, 3), engine.store.current_version() - floor)
            engine.store.adjust_version(-back)
            try:
                rng.choice(queries)()
            except TccError as exc:
                aborts.append(exc)
            finally:
                engine.store.adjust_version(back)
        d["text"] = f"200 queries, {len(aborts)} aborts ({writer_aborts} writer aborts allowed)"
        assert aborts == []


def test_criterion_6_eventual_convergence():
    with criterion(6, "PARTICIPANT_EXISTS after draining") as d:
        violations = {}
        for scenario in builtin_suite():
            report = run_scenario(scenario, keep_engine=True)
            assert report.passed, report.failure
            report.engine.events.drain()
            bad = participant_exists_report(report.engine)
            if bad:
                violations[scenario.name] = bad
        d["text"] = f"7 scenarios, {len(violations)} with violations {violations or ''}".rstrip()
        assert violations == {}


def test_criterion_7_atomicity_under_threads():
    with criterion(7, "stress 8 invokers x 200 commits") as d:
        report = run_stress(8, 200)
        versions = [int(line.split()[1]) for line in report.journal]
        d["text"] = (
            f"{report.commits} commits, {len(report.journal)} journal lines, "
            f"{len(report.journal_problems)} journal problems, {len(report.torn_reads)} torn reads "
            f"in {report.reads} reads"
        )
        assert report.commits == 1600
        assert versions == sorted(set(versions))
        assert report.journal_problems == [] and report.torn_reads == []


def test_criterion_8_admissibility_audit():
    with criterion(8, "admissibility audit over the suite") as d:
        snapshots = 0
        violations = []
        for scenario in builtin_suite():
            report = run_scenario(scenario, audit=True, keep_engine=True)
            snapshots += report.engine.units.audited_snapshots
            violations += report.audit_violations
        out = io.StringIO()
        with contextlib.redirect_stdout(out):
            code = main(["suite", "--audit"])
        d["text"] = f"{snapshots} snapshots audited, {len(violations)} violations, cli exit {code}"
        assert snapshots > 0 and violations == []
        assert out.getvalue().splitlines()[-1] == "admissibility violations: 0"
