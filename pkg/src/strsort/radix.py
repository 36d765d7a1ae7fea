"""MSD radix sort on strings: sequential 8-bit in-place, parallel 8/16-bit.

Classification is a single character (or character pair) at the segment's
common depth, so the machinery is the sample-sort toolkit with a trivial
classifier: histogram, prefix sum, redistribute, recurse per bucket.
Bucket 0 collects strings that end at the current depth; they are mutually
equal from the depth on and need no recursion.  The 16-bit key forces its
low byte to 0 whenever the first character is the terminator, so finished
strings collapse into bucket 0 and reading the second character is always
legal.  Recursive subproblems always use 8-bit keys.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from . import basesort
from .counters import Counters
from .samplesort import (_count_buckets, _distribute_cursors, _even_slices,
                         _permute_cycles)
from .scheduler import SortJob, ThreadPool, WorkContext
from .strings import StringArena


@dataclass
class RadixConfig:
    radix_bits: int = 8                  # top-level parallel key width: 8 or 16
    t_i: int = basesort.T_INSERTION      # below: insertion sort


@njit(cache=True, nogil=True)
def _radix_oracle8(data, handles, depth, out):
    for i in range(handles.size):
        out[i] = data[handles[i] + depth]


@njit(cache=True, nogil=True)
def _radix_oracle16(data, handles, depth, out):
    for i in range(handles.size):
        c = data[handles[i] + depth]
        if c == 0:
            out[i] = 0
        else:
            out[i] = np.uint16(c) * 256 + np.uint16(data[handles[i] + depth + 1])


def radix_key8(arena: StringArena, handle: int, depth: int) -> int:
    """Single-character key at ``depth`` (0 at the end of the string)."""
    return int(arena.data[handle + depth])


def radix_key16(arena: StringArena, handle: int, depth: int) -> int:
    """Two-character key at ``depth``; 0 when the string ends there."""
    c = int(arena.data[handle + depth])
    if c == 0:
        return 0
    return c * 256 + int(arena.data[handle + depth + 1])


def _boundaries(counts: np.ndarray) -> np.ndarray:
    out = np.zeros(counts.size + 1, np.int64)
    np.cumsum(counts, out=out[1:])
    return out


def _seq_radix_step(data, side, lo, hi, depth, oracle):
    """One in-place 8-bit step; returns pending children (buckets 1..255)."""
    seg = side[lo:hi]
    osl = oracle[lo:hi]
    _radix_oracle8(data, seg, depth, osl)
    counts = _count_buckets(osl, 256)
    bounds = _boundaries(counts)
    _permute_cycles(seg, osl, bounds)
    pending = []
    for b in np.nonzero(counts[1:])[0] + 1:
        a = lo + int(bounds[b])
        e = lo + int(bounds[b + 1])
        if e - a > 1:
            pending.append((a, e, depth + 1))
    return pending


def radix_sort_8bit(arena: StringArena, handles: np.ndarray, depth: int = 0,
                    cfg: RadixConfig | None = None,
                    counters: Counters | None = None) -> np.ndarray:
    """Sequential MSD radix sort with in-place cycle-walk permutation."""
    cfg = cfg or RadixConfig()
    n = handles.size
    if n <= 1:
        return handles
    data = arena.data
    oracle = np.empty(n, np.uint8)
    stack = [(0, n, depth)]
    while stack:
        lo, hi, dep = stack.pop()
        size = hi - lo
        if size <= 1:
            continue
        if size < cfg.t_i:
            basesort.insertion_sort(arena, handles[lo:hi], dep)
        else:
            stack.extend(_seq_radix_step(data, handles, lo, hi, dep, oracle))
            if counters is not None:
                counters.add("radix_steps")
    return handles


class _ParallelRadixSort:
    def __init__(self, arena, handles, workers, cfg, counters):
        self.arena = arena
        self.data = arena.data
        self.front = handles
        self.n = handles.size
        self.back = np.empty_like(handles)
        self.oracle = np.empty(self.n, np.uint16 if cfg.radix_bits == 16 else np.uint8)
        self.cfg = cfg
        self.counters = counters
        self.pool = ThreadPool(workers)

    def sort(self):
        root = SortJob("radix", 0, self.n, 0, False)
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

    def _side(self, in_back):
        return self.back if in_back else self.front

    def _complete(self, lo, hi, in_back):
        if in_back:
            self.front[lo:hi] = self.back[lo:hi]

    def _process(self, job):
        lo, hi, depth, in_back = job.lo, job.hi, job.depth, job.in_back
        size = hi - lo
        if size <= 1:
            self._complete(lo, hi, in_back)
            return None
        if size * self.pool.workers >= self.n:
            return self._parallel_step(job)
        side = self._side(in_back)
        if size >= self.cfg.t_i:
            pending = _seq_radix_step(self.data, side, lo, hi, depth, self.oracle)
            covered = sorted((a, e) for a, e, _ in pending)
            at = lo
            for a, e in covered:
                if a > at:
                    self._complete(at, a, in_back)
                at = e
            if at < hi:
                self._complete(at, hi, in_back)
            return [SortJob("radix", a, e, d, in_back) for a, e, d in pending]
        basesort.insertion_sort(self.arena, side[lo:hi], depth)
        self._complete(lo, hi, in_back)
        return None

    def _parallel_step(self, job):
        lo, hi, depth, in_back = job.lo, job.hi, job.depth, job.in_back
        size = hi - lo
        pool = self.pool
        bits = self.cfg.radix_bits
        k = 65536 if bits == 16 else 256
        src = self._side(in_back)
        dst = self._side(not in_back)
        p_eff = min(pool.workers, max(1, -(-size * pool.workers // self.n)))
        slices = _even_slices(lo, hi, p_eff)
        counts_mat = np.zeros((p_eff, k), np.int64)

        def count_task(t, a, b):
            osl = self.oracle[a:b]
            if bits == 16:
                _radix_oracle16(self.data, src[a:b], depth, osl)
            else:
                _radix_oracle8(self.data, src[a:b], depth, osl)
            counts_mat[t] = _count_buckets(osl, k)

        pool.run_stage([(lambda t=t, a=a, b=b: count_task(t, a, b))
                        for t, (a, b) in enumerate(slices)])

        totals = counts_mat.sum(axis=0)
        bounds = lo + _boundaries(totals)
        cursors_mat = np.empty_like(counts_mat)
        cursors_mat[0] = bounds[:-1]
        if p_eff > 1:
            np.cumsum(counts_mat[:-1], axis=0, out=cursors_mat[1:])
            cursors_mat[1:] += bounds[:-1]

        def distribute_task(t, a, b):
            _distribute_cursors(src[a:b], dst, self.oracle[a:b], cursors_mat[t])

        pool.run_stage([(lambda t=t, a=a, b=b: distribute_task(t, a, b))
                        for t, (a, b) in enumerate(slices)])

        if self.counters is not None:
            self.counters.add("parallel_steps")

        children = []
        child_back = not in_back
        for b in np.nonzero(totals)[0]:
            a = int(bounds[b])
            e = int(bounds[b + 1])
            # bucket 0: strings ended at depth; 16-bit low byte 0: ended at depth+1
            done = b == 0 or (bits == 16 and b % 256 == 0)
            if e - a <= 1 or done:
                self._complete(a, e, child_back)
            else:
                step = 2 if bits == 16 else 1
                children.append(SortJob("radix", a, e, depth + step, child_back))
        return children


def parallel_radix_sort(arena: StringArena, handles: np.ndarray, workers: int = 1,
                        cfg: RadixConfig | None = None,
                        counters: Counters | None = None) -> np.ndarray:
    """Fully parallel MSD radix sort; recursion shares the sample-sort toolkit."""
    cfg = cfg or RadixConfig()
    if cfg.radix_bits not in (8, 16):
        raise ValueError("radix_bits must be 8 or 16")
    if handles.size > 1:
        _ParallelRadixSort(arena, handles, workers, cfg, counters).sort()
    return handles
