"""Fully parallel caching multikey quicksort via block-wise partitioning.

The segment's (handle, cache word) entries are consumed as blocks of
``block_size`` entries, claimed from a shared cursor at block
granularity.  Each worker holds exactly three output blocks, one per
relation to the globally selected pivot word; a block filled during
classification is appended to the matching output set and replaced by an
empty one.  When the input runs dry each worker flushes what it holds, so
a partitioning step ends with at most ``3 * p`` partially filled blocks.
The sets are then written back contiguously in <, =, > order, the caches
of the equal set are advanced by a full word, and the three ranges
recurse with workers divided proportionally.  Below the sequential
threshold the range is finished by ``mkqs_cache_sort`` reusing the caches
in place.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from . import basesort
from .basesort import mkqs_step
from .classifier import _has_zero_byte
from .counters import Counters
from .scheduler import SortJob, ThreadPool, WorkContext
from .strings import WORD_CHARS, StringArena, _pack_keys

BLOCK_SIZE = 128 * 1024


@dataclass
class MkqsParConfig:
    block_size: int = BLOCK_SIZE         # entries per partition block
    t_i: int = basesort.T_INSERTION
    seq_threshold: int | None = None     # below: sequential mkqs; default n/p
    pivot_samples: int = 9               # cache words inspected per pivot


@dataclass
class PartitionSets:
    """Blocks of classified entries, by relation to the pivot."""
    block_size: int
    lt: list = field(default_factory=list)   # (handles, caches, fill) triples
    eq: list = field(default_factory=list)
    gt: list = field(default_factory=list)

    def by_class(self, cls: int) -> list:
        return (self.lt, self.eq, self.gt)[cls]

    @property
    def sizes(self) -> tuple[int, int, int]:
        return (sum(f for _, _, f in self.lt),
                sum(f for _, _, f in self.eq),
                sum(f for _, _, f in self.gt))

    @property
    def partial_blocks(self) -> int:
        return sum(1 for blocks in (self.lt, self.eq, self.gt)
                   for _, _, f in blocks if f < self.block_size)


@njit(cache=True, nogil=True)
def _partition_block(handles, caches, pos, stop, pivot,
                     h_lt, c_lt, h_eq, c_eq, h_gt, c_gt, fills):
    while pos < stop:
        c = caches[pos]
        h = handles[pos]
        pos += 1
        if c < pivot:
            f = fills[0]
            h_lt[f] = h
            c_lt[f] = c
            fills[0] = f + 1
            if f + 1 == h_lt.size:
                return pos, 0
        elif c > pivot:
            f = fills[2]
            h_gt[f] = h
            c_gt[f] = c
            fills[2] = f + 1
            if f + 1 == h_gt.size:
                return pos, 2
        else:
            f = fills[1]
            h_eq[f] = h
            c_eq[f] = c
            fills[1] = f + 1
            if f + 1 == h_eq.size:
                return pos, 1
    return pos, -1


@njit(cache=True, nogil=True)
def _copy_block(h_buf, c_buf, fill, handles, caches, off):
    for i in range(fill):
        handles[off + i] = h_buf[i]
        caches[off + i] = c_buf[i]


def _med3(a: int, b: int, c: int) -> int:
    return sorted((a, b, c))[1]


def select_pivot_global(caches: np.ndarray, block_size: int = BLOCK_SIZE) -> int:
    """Pseudo-median-of-9 cache word from fixed spots in up to three blocks."""
    size = caches.size
    if size == 0:
        raise ValueError("empty segment has no pivot")
    if size < 3:
        return int(caches[0])
    nb = -(-size // block_size)
    meds = []
    for blk in sorted({0, nb // 2, nb - 1}):
        s = blk * block_size
        e = min(s + block_size, size)
        meds.append(_med3(int(caches[s]), int(caches[(s + e - 1) // 2]),
                          int(caches[e - 1])))
    while len(meds) < 3:
        meds.append(meds[-1])
    return _med3(*meds)


def par_ternary_partition(handles: np.ndarray, caches: np.ndarray, pivot: int,
                          workers: int, block_size: int = BLOCK_SIZE,
                          stage_runner=None) -> PartitionSets:
    """Three-way partition the entries of a segment into block sets.

    Input slots are claimed at block granularity through a shared cursor;
    every entry lands in the set matching its cache word's relation to
    the pivot.  ``stage_runner`` executes the per-worker callables (the
    drivers pass the pool's stage primitive; the default uses one thread
    per worker).
    """
    pivot = np.uint64(pivot)
    size = handles.size
    nblocks = -(-size // block_size) if size else 0
    sets = PartitionSets(block_size)
    lock = threading.Lock()
    cursor = [0]

    def reserve():
        with lock:
            if cursor[0] >= nblocks:
                return None
            blk = cursor[0]
            cursor[0] += 1
            return blk

    def flush(buffers, fills, cls):
        h_buf, c_buf = buffers[cls]
        with lock:
            sets.by_class(cls).append((h_buf, c_buf, int(fills[cls])))
        buffers[cls] = (np.empty(block_size, np.int64),
                        np.empty(block_size, np.uint64))
        fills[cls] = 0

    def worker():
        buffers = [(np.empty(block_size, np.int64), np.empty(block_size, np.uint64))
                   for _ in range(3)]
        fills = np.zeros(3, np.int64)
        while True:
            blk = reserve()
            if blk is None:
                break
            pos = blk * block_size
            stop = min(pos + block_size, size)
            while pos < stop:
                pos, full = _partition_block(
                    handles, caches, pos, stop, pivot,
                    buffers[0][0], buffers[0][1],
                    buffers[1][0], buffers[1][1],
                    buffers[2][0], buffers[2][1], fills)
                if full >= 0:
                    flush(buffers, fills, full)
        # second phase: input exhausted, emit the partially filled blocks
        for cls in range(3):
            if fills[cls] > 0:
                flush(buffers, fills, cls)

    tasks = [worker for _ in range(max(1, workers))]
    if stage_runner is not None:
        stage_runner(tasks)
    elif len(tasks) == 1:
        worker()
    else:
        threads = [threading.Thread(target=t) for t in tasks]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
    return sets


def allocate_workers(sizes, workers: int) -> list[int]:
    """Divide workers among child sets: nonempty sets get at least one,
    larger sets get proportionally more."""
    total = sum(sizes)
    if total == 0:
        return [0 for _ in sizes]
    return [0 if s == 0 else max(1, min(workers, -(-s * workers // total)))
            for s in sizes]


class _ParallelMkqs:
    def __init__(self, arena, handles, workers, cfg, counters):
        self.arena = arena
        self.data = arena.data
        self.handles = handles
        self.n = handles.size
        self.caches = np.empty(self.n, np.uint64)
        self.cfg = cfg
        self.counters = counters
        self.pool = ThreadPool(workers)
        self.seq_threshold = cfg.seq_threshold
        if self.seq_threshold is None:
            self.seq_threshold = max(1, -(-self.n // self.pool.workers))

    def sort(self):
        _pack_keys(self.data, self.handles, 0, self.caches)
        if self.counters is not None:
            self.counters.add("fetches", self.n)
        root = SortJob("mkqs", 0, self.n, 0, payload=self.pool.workers)
        self.pool.run([lambda: self._run_tree(root)])
        if self.counters is not None:
            for key, val in self.pool.stats.items():
                self.counters.add(key, val)

    def _spawn(self, job):
        self.pool.submit(lambda: self._run_tree(job))

    def _run_tree(self, job):
        ctx = WorkContext(self.pool, self._spawn)
        ctx.push_level([job])
        while True:
            j = ctx.pop()
            if j is None:
                return
            children = self._process(j)
            if children:
                ctx.push_level(children)
            # donating only after processing guarantees progress per job
            ctx.poll_share()

    def _process(self, job):
        size = job.size
        if size <= 1:
            return None
        if size >= self.seq_threshold:
            return self._parallel_step(job)
        children = mkqs_step(self.data, self.handles, self.caches, job.lo, job.hi,
                             job.depth, self.cfg.t_i, self.counters)
        return [SortJob("mkqs", a, e, d) for a, e, d in children]

    def _parallel_step(self, job):
        lo, hi, depth = job.lo, job.hi, job.depth
        pool = self.pool
        cfg = self.cfg
        if isinstance(job.payload, int) and job.payload > 0:
            p_eff = min(pool.workers, job.payload)
        else:
            p_eff = min(pool.workers, max(1, -(-job.size * pool.workers // self.n)))
        h = self.handles[lo:hi]
        c = self.caches[lo:hi]
        pivot = select_pivot_global(c, cfg.block_size)
        sets = par_ternary_partition(h, c, pivot, p_eff, cfg.block_size,
                                     stage_runner=pool.run_stage)
        n_lt, n_eq, n_gt = sets.sizes
        if self.counters is not None:
            self.counters.add("parallel_partitions")
            self.counters.record_max("partial_blocks_max", sets.partial_blocks)

        # write the sets back contiguously: <, =, > from the left
        copies = []
        off = lo
        for cls in range(3):
            for h_buf, c_buf, fill in sets.by_class(cls):
                copies.append((h_buf, c_buf, fill, off))
                off += fill
        chunks = [copies[t::p_eff] for t in range(p_eff)]

        def copy_task(chunk):
            for h_buf, c_buf, fill, dst in chunk:
                _copy_block(h_buf, c_buf, fill, self.handles, self.caches, dst)

        pool.run_stage([(lambda ch=ch: copy_task(ch)) for ch in chunks if ch])

        eq_lo = lo + n_lt
        eq_hi = eq_lo + n_eq
        children = []
        hints = allocate_workers((n_lt, n_eq, n_gt), p_eff)
        if n_lt > 1:
            children.append(SortJob("mkqs", lo, eq_lo, depth, payload=hints[0]))
        if n_eq > 1 and not _has_zero_byte(np.uint64(pivot)):
            _pack_keys(self.data, self.handles[eq_lo:eq_hi], depth + WORD_CHARS,
                       self.caches[eq_lo:eq_hi])
            if self.counters is not None:
                self.counters.add("fetches", n_eq)
            children.append(SortJob("mkqs", eq_lo, eq_hi, depth + WORD_CHARS,
                                    payload=hints[1]))
        if n_gt > 1:
            children.append(SortJob("mkqs", eq_hi, hi, depth, payload=hints[2]))
        return children


def parallel_mkqs_sort(arena: StringArena, handles: np.ndarray, workers: int = 1,
                       cfg: MkqsParConfig | None = None,
                       counters: Counters | None = None) -> np.ndarray:
    """Fully parallel caching multikey quicksort."""
    cfg = cfg or MkqsParConfig()
    if handles.size > 1:
        _ParallelMkqs(arena, handles, workers, cfg, counters).sort()
    return handles
