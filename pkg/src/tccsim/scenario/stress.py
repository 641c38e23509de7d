"""Real-thread stress run for commit atomicity.

Unlike scripted scenarios this makes no assertions about interleavings;
it only produces a journal and reader observations to be checked for
monotone versions and torn commits.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from datetime import datetime, timedelta

from tccsim.engine import Engine
from tccsim.errors import TccError
from tccsim.quizzes.functionalities import QuizzesFunctionalities

BASE = datetime(2024, 3, 1, 10, 0)


@dataclass
class StressReport:
    commits: int = 0
    retries: int = 0
    reads: int = 0
    torn_reads: list[str] = field(default_factory=list)
    journal: list[str] = field(default_factory=list)
    journal_problems: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.torn_reads and not self.journal_problems


def check_journal(engine: Engine, journal: list[str]) -> list[str]:
    """Versions must strictly increase and every line must match the store exactly."""
    problems = []
    last = 0
    seen = set()
    by_version: dict[int, set[int]] = {}
    for agg_id in engine.store.aggregate_ids():
        for record in engine.store.versions_of(agg_id):
            by_version.setdefault(record.version, set()).add(agg_id)
    for line in journal:
        _, version, _, ids, _ = line.split(" ")
        version = int(version)
        if version in seen:
            problems.append(f"duplicate version {version}")
        if version <= last:
            problems.append(f"version {version} after {last}")
        seen.add(version)
        last = max(last, version)
        written = set() if ids == "-" else {int(x) for x in ids.split(",")}
        if by_version.get(version, set()) != written:
            problems.append(f"version {version}: journal {sorted(written)} store {sorted(by_version.get(version, ()))}")
    return problems


def run_stress(invokers: int = 8, commits_per_invoker: int = 200, *, engine: Engine | None = None) -> StressReport:
    """Each invoker alternates tournament creations and updates of one shared tournament.

    Both are two-record commits (tournament plus quiz). Aborted attempts are
    retried until every invoker has its quota of commits. A reader thread
    checks that every snapshot shows the shared tournament and its quiz with
    the same dates.
    """
    engine = engine or Engine()
    app = QuizzesFunctionalities(engine)
    ce = app.create_course_execution("stress", [(i, f"student-{i}") for i in range(1, invokers + 1)])
    shared = app.create_tournament(ce, 1, BASE, BASE + timedelta(hours=1), ["setup"])
    report = StressReport()
    lock = threading.Lock()
    done = threading.Event()

    def invoker(n: int) -> None:
        k = 0
        while k < commits_per_invoker:
            start = BASE + timedelta(minutes=n * 10_000 + k)
            try:
                if k % 2 == 0:
                    app.create_tournament(ce, n, start, start + timedelta(hours=1), [f"t{n}"])
                else:
                    app.update_tournament(shared, start, start + timedelta(hours=2), [f"t{n}", f"k{k}"])
            except TccError:
                with lock:
                    report.retries += 1
                continue
            k += 1
            with lock:
                report.commits += 1

    def reader() -> None:
        while not done.is_set():
            view = app.get_tournament(shared)
            quiz = view["quiz"]
            with lock:
                report.reads += 1
                if (view["start_time"], view["end_time"]) != (quiz["available_date"], quiz["conclusion_date"]):
                    report.torn_reads.append(f"tournament v{view['version']} / quiz v{quiz['version']}")

    threads = [threading.Thread(target=invoker, args=(n,)) for n in range(1, invokers + 1)]
    watcher = threading.Thread(target=reader)
    watcher.start()
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    done.set()
    watcher.join()
    report.journal = engine.store.journal()
    report.journal_problems = check_journal(engine, report.journal)
    return report
