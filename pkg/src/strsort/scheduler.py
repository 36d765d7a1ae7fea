"""Thread pool with a central job queue and voluntary work sharing.

Every parallel sorter runs on this pool.  Jobs are plain callables; the
sorters keep their recursion on worker-private stacks (lists of levels,
oldest level first) and only touch the shared queue in two cases: when a
fully parallel stage fans out slice tasks, and when an idle worker raises
the global share flag, prompting a busy worker to donate the bottom level
of its private stack -- the largest pending subproblems -- as independent
jobs.  The flag is a plain attribute: it is written under the queue lock
but read without it, and only eventual visibility is needed.

Termination uses an outstanding-task counter (incremented on submit,
decremented on completion); the pool is quiescent exactly when the
counter is zero and the queue is empty.  A raising job aborts the whole
pool and the failure is re-raised from ``run``.
"""

from __future__ import annotations

import collections
import threading
from dataclasses import dataclass


@dataclass
class SortJob:
    """Schedulable unit of sorting work: a handle range at a known depth."""
    family: str              # "samplesort" | "radix" | "mkqs"
    lo: int
    hi: int
    depth: int
    in_back: bool = False    # live handles currently in the shadow array
    payload: object = None   # family-private state (e.g. a cache array)

    @property
    def size(self) -> int:
        return self.hi - self.lo


class PoolAborted(RuntimeError):
    pass


class ThreadPool:
    def __init__(self, workers: int):
        self.workers = max(1, int(workers))
        self._lock = threading.Lock()
        self._cond = threading.Condition(self._lock)
        self._queue: collections.deque = collections.deque()
        self._outstanding = 0
        self._error: BaseException | None = None
        self.share_requested = False
        self.stats = {"jobs": 0, "shares": 0, "share_requests": 0, "max_queue": 0}

    # -- queue ------------------------------------------------------------

    def submit(self, task) -> None:
        with self._cond:
            self._queue.append(task)
            self._outstanding += 1
            if len(self._queue) > self.stats["max_queue"]:
                self.stats["max_queue"] = len(self._queue)
            self._cond.notify()

    def submit_many(self, tasks) -> int:
        tasks = list(tasks)
        with self._cond:
            self._queue.extend(tasks)
            self._outstanding += len(tasks)
            if len(self._queue) > self.stats["max_queue"]:
                self.stats["max_queue"] = len(self._queue)
            self._cond.notify_all()
        return len(tasks)

    def _execute(self, task) -> None:
        try:
            task()
        except BaseException as exc:  # noqa: BLE001 - abort pool on any job failure
            with self._cond:
                if self._error is None:
                    self._error = exc
                self._cond.notify_all()
        finally:
            with self._cond:
                self._outstanding -= 1
                self.stats["jobs"] += 1
                if self._outstanding == 0 or self._error is not None:
                    self._cond.notify_all()

    # -- workers ----------------------------------------------------------

    def _worker_main(self) -> None:
        while True:
            task = None
            with self._cond:
                while task is None:
                    if self._error is not None:
                        return
                    if self._queue:
                        task = self._queue.popleft()
                        break
                    if self._outstanding == 0:
                        return
                    # queue empty but work in flight: ask the busy workers
                    # to donate their largest pending subproblems
                    if not self.share_requested:
                        self.share_requested = True
                        self.stats["share_requests"] += 1
                    self._cond.wait()
            self._execute(task)

    def run(self, tasks) -> None:
        """Execute ``tasks`` and everything they spawn; blocks until quiescent."""
        for t in tasks:
            self.submit(t)
        threads = [threading.Thread(target=self._worker_main, daemon=True)
                   for _ in range(self.workers)]
        for t in threads:
            t.start()
        with self._cond:
            while self._outstanding > 0 and self._error is None:
                self._cond.wait()
            self._cond.notify_all()
        for t in threads:
            t.join()
        if self._error is not None:
            raise PoolAborted("pool job failed") from self._error

    # -- fork-join stages ---------------------------------------------------

    def run_stage(self, tasks) -> None:
        """Run callables as one barrier stage, called from inside a worker.

        The calling worker executes the first task itself and then helps
        drain the queue until every stage task has completed, so stages
        cannot deadlock even when all workers wait on stages at once.
        """
        tasks = list(tasks)
        if not tasks:
            return
        if len(tasks) == 1:
            tasks[0]()
            return
        remaining = [len(tasks)]

        def wrap(fn):
            def stage_task():
                try:
                    fn()
                finally:
                    with self._cond:
                        remaining[0] -= 1
                        if remaining[0] == 0:
                            self._cond.notify_all()
            return stage_task

        wrapped = [wrap(f) for f in tasks]
        self.submit_many(wrapped[1:])
        wrapped[0]()
        while True:
            task = None
            with self._cond:
                if self._error is not None:
                    raise PoolAborted("pool job failed") from self._error
                if remaining[0] == 0:
                    return
                if self._queue:
                    task = self._queue.popleft()
                else:
                    self._cond.wait()
            if task is not None:
                self._execute(task)


class WorkContext:
    """Worker-private explicit recursion stack with donation hooks.

    The stack is a list of *levels*; each level holds the pending sibling
    segments produced by one recursion step, with the bottom level holding
    the oldest and therefore largest subproblems.  ``poll_share`` is
    called once per outer loop iteration of every sequential sorter; if
    the global flag is up, the whole bottom level is converted to
    independent jobs and the flag is cleared by this (donating) worker.
    """

    def __init__(self, pool: ThreadPool | None, spawn=None):
        self.pool = pool
        self.spawn = spawn
        self.stack: list[list] = []

    def push_level(self, entries) -> None:
        entries = list(entries)
        if entries:
            self.stack.append(entries)

    def pop(self):
        while self.stack:
            level = self.stack[-1]
            if level:
                return level.pop()
            self.stack.pop()
        return None

    def poll_share(self) -> int:
        pool = self.pool
        if pool is None or self.spawn is None or not pool.share_requested:
            return 0
        if not self.stack:
            return 0
        level = self.stack.pop(0)
        for entry in level:
            self.spawn(entry)
        pool.share_requested = False
        pool.stats["shares"] += len(level)
        return len(level)
