"""String sample sort, sequential (in-place) and fully parallel.

One classification step draws a random sample of word keys at the
segment's common depth, builds a splitter tree, classifies every string
into one of ``2v + 1`` buckets, and groups the handles by bucket.  The
sequential version permutes the handle array in place by walking the
cycles of the permutation; the fully parallel version runs four stages --
sequential sampling/tree building, parallel classification and counting
over even slices, a sequential global prefix sum, and parallel
out-of-place redistribution into a shadow array whose role then swaps
with the original for the recursion.

Tier dispatch (sizes relative to the root size n and worker count p):
segments of at least n/p run the fully parallel stages, segments down to
``t_m`` run sequential steps, segments down to ``t_i`` fall back to
caching multikey quicksort, and anything smaller is insertion sorted.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from . import basesort
from .basesort import mkqs_step
from .classifier import (SplitterTree, bucket_layout, build_tree, draw_sample,
                         effective_v, oracle_dtype, select_splitters)
from .counters import Counters
from .scheduler import SortJob, ThreadPool, WorkContext
from .strings import StringArena, _pack_one, _pack_keys

T_MEDIUM = 64 * 1024


@dataclass
class SampleSortConfig:
    v: int = 8191            # splitters per step (perfect-tree sized)
    alpha: int = 2           # oversampling factor
    t_m: int = T_MEDIUM      # below: caching multikey quicksort
    t_i: int = basesort.T_INSERTION  # below: insertion sort
    classifier: str = "unroll"       # "unroll" | "equal"
    interleave: int = 3      # independent tree descents in flight
    seed: int = 1            # sample-draw seed (per-segment streams derived)


# ---------------------------------------------------------------------------
# kernels

@njit(cache=True, nogil=True)
def _classify_strings_unrolled(data, handles, depth, level_order, in_order, d, iw, out):
    n = handles.size
    v = in_order.size
    base = 1 << d
    idx = np.empty(iw, np.int64)
    keys = np.empty(iw, np.uint64)
    p = 0
    while p + iw <= n:
        for t in range(iw):
            keys[t] = _pack_one(data, handles[p + t] + depth)
            idx[t] = 1
        for _ in range(d):
            for t in range(iw):
                node = level_order[idx[t]]
                idx[t] = 2 * idx[t] + (1 if keys[t] > node else 0)
        for t in range(iw):
            c = idx[t] - base
            b = 2 * c
            if c < v and in_order[c] == keys[t]:
                b += 1
            out[p + t] = b
        p += iw
    for q in range(p, n):
        k = _pack_one(data, handles[q] + depth)
        i = 1
        for _ in range(d):
            i = 2 * i + (1 if k > level_order[i] else 0)
        c = i - base
        b = 2 * c
        if c < v and in_order[c] == k:
            b += 1
        out[q] = b


@njit(cache=True, nogil=True)
def _classify_strings_equal(data, handles, depth, level_order, in_order, d, out):
    n = handles.size
    base = 1 << d
    for q in range(n):
        k = _pack_one(data, handles[q] + depth)
        i = 1
        b = -1
        for l in range(d):
            node = level_order[i]
            if k == node:
                j = (2 * (i - (1 << l)) + 1) * (1 << (d - 1 - l)) - 1
                while j > 0 and in_order[j - 1] == k:
                    j -= 1
                b = 2 * j + 1
                break
            i = 2 * i + (1 if k > node else 0)
        if b < 0:
            b = 2 * (i - base)
        out[q] = b


@njit(cache=True, nogil=True)
def _count_buckets(oracle, k):
    counts = np.zeros(k, np.int64)
    for i in range(oracle.size):
        counts[oracle[i]] += 1
    return counts


@njit(cache=True, nogil=True)
def _permute_cycles(handles, oracle, boundaries):
    # group handles by bucket in place by walking permutation cycles;
    # the oracle is consumed as positions become final
    k = boundaries.size - 1
    cursor = boundaries[:k].copy()
    for b in range(k):
        i = cursor[b]
        end = boundaries[b + 1]
        while i < end:
            o = oracle[i]
            if o == b:
                i += 1
                continue
            h = handles[i]
            while o != b:
                j = cursor[o]
                cursor[o] = j + 1
                h2 = handles[j]
                o2 = oracle[j]
                handles[j] = h
                oracle[j] = o
                h = h2
                o = o2
            handles[i] = h
            oracle[i] = b
            i += 1
        cursor[b] = i


@njit(cache=True, nogil=True)
def _distribute_cursors(src, dst, oracle, cursors):
    for i in range(src.size):
        o = oracle[i]
        j = cursors[o]
        cursors[o] = j + 1
        dst[j] = src[i]


# ---------------------------------------------------------------------------
# single-step building blocks (public operation surfaces)

def classify_and_count(arena: StringArena, handles: np.ndarray, depth: int,
                       tree: SplitterTree, variant: str = "unroll",
                       interleave: int = 3,
                       oracle: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Fill the bucket-index oracle for a segment, then histogram it.

    Classification and counting run as two separate passes.
    """
    if oracle is None:
        oracle = np.empty(handles.size, oracle_dtype(tree.v))
    if variant == "equal":
        _classify_strings_equal(arena.data, handles, depth, tree.level_order,
                                tree.in_order, tree.depth, oracle)
    else:
        _classify_strings_unrolled(arena.data, handles, depth, tree.level_order,
                                   tree.in_order, tree.depth, max(1, interleave),
                                   oracle)
    counts = _count_buckets(oracle, tree.num_buckets)
    return oracle, counts


def permute_inplace(handles: np.ndarray, oracle: np.ndarray,
                    boundaries: np.ndarray) -> np.ndarray:
    """Reorder a segment by ascending bucket index, in place; consumes the oracle."""
    _permute_cycles(handles, oracle, np.asarray(boundaries, np.int64))
    return handles


def distribute_outofplace(src: np.ndarray, dst: np.ndarray, oracle: np.ndarray,
                          boundaries: np.ndarray) -> np.ndarray:
    """Copy a segment into ``dst`` grouped by bucket index."""
    cursors = np.asarray(boundaries, np.int64)[:-1].copy()
    _distribute_cursors(src, dst, oracle, cursors)
    return dst


def _segment_tree(arena, handles, lo, depth, v, cfg) -> SplitterTree:
    rng = np.random.default_rng((cfg.seed, lo, handles.size, depth))
    sample = draw_sample(arena, handles, depth, v, cfg.alpha, rng)
    return build_tree(select_splitters(sample, v))


def _even_slices(lo: int, hi: int, parts: int) -> list[tuple[int, int]]:
    n = hi - lo
    out = []
    for t in range(parts):
        a = lo + n * t // parts
        b = lo + n * (t + 1) // parts
        out.append((a, b))
    return out


# ---------------------------------------------------------------------------
# sequential driver

def _seq_step(arena, side, lo, hi, depth, cfg, oracle, counters, audit):
    """One in-place classification step; returns (pending, finished) children."""
    seg = side[lo:hi]
    v = effective_v(cfg.v, hi - lo)
    tree = _segment_tree(arena, seg, lo, depth, v, cfg)
    osl = oracle[lo:hi]
    _, counts = classify_and_count(arena, seg, depth, tree, cfg.classifier,
                                   cfg.interleave, osl)
    layout = bucket_layout(counts, tree, depth)
    permute_inplace(seg, osl, layout.boundaries)
    if counters is not None:
        counters.add("sample_steps")
    pending = []
    finished = []
    nonzero = np.nonzero(counts)[0]
    for b in nonzero:
        a = lo + int(layout.boundaries[b])
        e = lo + int(layout.boundaries[b + 1])
        child_depth = depth + int(layout.depth_delta[b])
        if e - a <= 1 or layout.finished[b]:
            finished.append((a, e))
        else:
            if audit is not None:
                audit(side, a, e, child_depth)
            pending.append((a, e, child_depth))
    return pending, finished


def sample_sort(arena: StringArena, handles: np.ndarray, depth: int = 0,
                cfg: SampleSortConfig | None = None,
                counters: Counters | None = None, audit=None) -> np.ndarray:
    """Sequential string sample sort with in-place redistribution."""
    cfg = cfg or SampleSortConfig()
    n = handles.size
    if n <= 1:
        return handles
    if n < cfg.t_i:
        return basesort.insertion_sort(arena, handles, depth)
    oracle = np.empty(n, oracle_dtype(cfg.v))
    stack = [(0, n, depth)]
    while stack:
        lo, hi, dep = stack.pop()
        size = hi - lo
        if size <= 1:
            continue
        if size < cfg.t_i:
            basesort.insertion_sort(arena, handles[lo:hi], dep)
        elif size < cfg.t_m:
            basesort.mkqs_cache_sort(arena, handles[lo:hi], dep, t_i=cfg.t_i,
                                     counters=counters)
        else:
            pending, _ = _seq_step(arena, handles, lo, hi, dep, cfg, oracle,
                                   counters, audit)
            stack.extend(pending)
    return handles


# ---------------------------------------------------------------------------
# fully parallel driver

class _ParallelSampleSort:
    def __init__(self, arena, handles, workers, cfg, counters, audit):
        self.arena = arena
        self.data = arena.data
        self.front = handles
        self.n = handles.size
        self.back = np.empty_like(handles)
        self.oracle = np.empty(self.n, oracle_dtype(cfg.v))
        self.cache_scratch = np.empty(self.n, np.uint64)
        self.cfg = cfg
        self.counters = counters
        self.audit = audit
        self.pool = ThreadPool(workers)

    def sort(self):
        root = SortJob("samplesort", 0, self.n, 0, False)
        self.pool.run([lambda: self._run_tree(root)])
        if self.counters is not None:
            for key, val in self.pool.stats.items():
                self.counters.add(key, val)

    # -- scheduling -------------------------------------------------------

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

    # -- tier dispatch ------------------------------------------------------

    def _process(self, job):
        lo, hi, depth, in_back = job.lo, job.hi, job.depth, job.in_back
        size = hi - lo
        cfg = self.cfg
        if size <= 1:
            self._complete(lo, hi, in_back)
            return None
        if size * self.pool.workers >= self.n:
            return self._parallel_step(job)
        side = self._side(in_back)
        if size >= cfg.t_m:
            pending, finished = _seq_step(self.arena, side, lo, hi, depth, cfg,
                                          self.oracle, self.counters, self.audit)
            for a, e in finished:
                self._complete(a, e, in_back)
            return [SortJob("samplesort", a, e, d, in_back) for a, e, d in pending]
        if size >= cfg.t_i:
            return self._mkqs_piece(job, side)
        basesort.insertion_sort(self.arena, side[lo:hi], depth)
        self._complete(lo, hi, in_back)
        return None

    def _mkqs_piece(self, job, side):
        lo, hi = job.lo, job.hi
        if job.payload is None:
            _pack_keys(self.data, side[lo:hi], job.depth, self.cache_scratch[lo:hi])
            if self.counters is not None:
                self.counters.add("fetches", hi - lo)
        children = mkqs_step(self.data, side, self.cache_scratch, lo, hi,
                             job.depth, self.cfg.t_i, self.counters)
        if not children:
            self._complete(lo, hi, job.in_back)
            return None
        out = [SortJob("mkqs", a, e, d, job.in_back, payload=True)
               for a, e, d in children]
        # parts of [lo,hi) not covered by any pending child are already final
        covered = sorted((a, e) for a, e, _ in children)
        at = lo
        for a, e in covered:
            if a > at:
                self._complete(at, a, job.in_back)
            at = e
        if at < hi:
            self._complete(at, hi, job.in_back)
        return out

    # -- the four fully parallel stages -------------------------------------

    def _parallel_step(self, job):
        lo, hi, depth, in_back = job.lo, job.hi, job.depth, job.in_back
        size = hi - lo
        cfg = self.cfg
        pool = self.pool
        src = self._side(in_back)
        dst = self._side(not in_back)
        p_eff = min(pool.workers, max(1, -(-size * pool.workers // self.n)))

        # stage 1 (sequential): sample and splitter tree
        v = effective_v(cfg.v, size)
        tree = _segment_tree(self.arena, src[lo:hi], lo, depth, v, cfg)
        k = tree.num_buckets

        # stage 2 (parallel): classification, then per-worker counting
        slices = _even_slices(lo, hi, p_eff)
        counts_mat = np.zeros((p_eff, k), np.int64)

        def classify_task(t, a, b):
            osl = self.oracle[a:b]
            if cfg.classifier == "equal":
                _classify_strings_equal(self.data, src[a:b], depth,
                                        tree.level_order, tree.in_order,
                                        tree.depth, osl)
            else:
                _classify_strings_unrolled(self.data, src[a:b], depth,
                                           tree.level_order, tree.in_order,
                                           tree.depth, max(1, cfg.interleave), osl)
            counts_mat[t] = _count_buckets(osl, k)

        pool.run_stage([(lambda t=t, a=a, b=b: classify_task(t, a, b))
                        for t, (a, b) in enumerate(slices)])

        # stage 3 (sequential): global prefix sum over worker-major counts
        totals = counts_mat.sum(axis=0)
        layout = bucket_layout(totals, tree, depth)
        boundaries = lo + layout.boundaries
        cursors_mat = np.empty_like(counts_mat)
        cursors_mat[0] = boundaries[:-1]
        if p_eff > 1:
            np.cumsum(counts_mat[:-1], axis=0, out=cursors_mat[1:])
            cursors_mat[1:] += boundaries[:-1]

        # stage 4 (parallel): out-of-place redistribution into the shadow side
        def distribute_task(t, a, b):
            _distribute_cursors(src[a:b], dst, self.oracle[a:b], cursors_mat[t])

        pool.run_stage([(lambda t=t, a=a, b=b: distribute_task(t, a, b))
                        for t, (a, b) in enumerate(slices)])

        if self.counters is not None:
            self.counters.add("parallel_steps")

        children = []
        child_back = not in_back
        for b in np.nonzero(totals)[0]:
            a = int(boundaries[b])
            e = int(boundaries[b + 1])
            child_depth = depth + int(layout.depth_delta[b])
            if e - a <= 1 or layout.finished[b]:
                self._complete(a, e, child_back)
            else:
                if self.audit is not None:
                    self.audit(dst, a, e, child_depth)
                children.append(SortJob("samplesort", a, e, child_depth, child_back))
        return children


def parallel_sample_sort(arena: StringArena, handles: np.ndarray, workers: int = 1,
                         cfg: SampleSortConfig | None = None,
                         counters: Counters | None = None, audit=None) -> np.ndarray:
    """Fully parallel string sample sort over a work-sharing thread pool."""
    cfg = cfg or SampleSortConfig()
    if handles.size > 1:
        _ParallelSampleSort(arena, handles, workers, cfg, counters, audit).sort()
    return handles
