"""Sequential base-case sorters.

``insertion_sort`` compares strings bytewise from a common depth and is
the terminal case of every other sorter.  ``mkqs_cache_sort`` is multikey
quicksort over a super-alphabet of ``WORD_CHARS`` characters: each handle
travels with a cached key word, ternary partitioning compares whole
words, and only the middle (equal) partition ever rereads the arena, at a
depth advanced by the word width.  That keeps the number of cache block
fills at ``n`` initial fills plus at most ``(D - n) / w`` refills, where D
is the distinguishing prefix size of the segment.

Fill events are counted through the optional ``counters`` argument so the
bound can be checked by instrumented runs.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .counters import Counters
from .strings import WORD_CHARS, StringArena, _compare_from, _pack_keys
from .classifier import _has_zero_byte

#: insertion-sort threshold
T_INSERTION = 64


@njit(cache=True, nogil=True)
def _insertion_strings(data, handles, depth):
    for i in range(1, handles.size):
        h = handles[i]
        j = i
        while j > 0 and _compare_from(data, handles[j - 1], h, depth) > 0:
            handles[j] = handles[j - 1]
            j -= 1
        handles[j] = h


@njit(cache=True, nogil=True, inline="always")
def _cached_less(data, ha, ca, hb, cb, depth):
    # word first; equal non-terminated words fall back to the arena past the cache
    if ca != cb:
        return ca < cb
    if _has_zero_byte(ca):
        return False
    return _compare_from(data, ha, hb, depth + 8) < 0


@njit(cache=True, nogil=True)
def _insertion_cached(data, handles, caches, depth):
    for i in range(1, handles.size):
        h = handles[i]
        c = caches[i]
        j = i
        while j > 0 and _cached_less(data, h, c, handles[j - 1], caches[j - 1], depth):
            handles[j] = handles[j - 1]
            caches[j] = caches[j - 1]
            j -= 1
        handles[j] = h
        caches[j] = c


@njit(cache=True, nogil=True, inline="always")
def _median3(a, b, c):
    if a < b:
        if b < c:
            return b
        return c if a < c else a
    if a < c:
        return a
    return c if b < c else b


@njit(cache=True, nogil=True)
def _ternary_partition(handles, caches, pivot):
    # classic three-way scheme: [0,lt) < pivot, [lt,gt) == pivot, [gt,n) > pivot
    lt = 0
    i = 0
    gt = handles.size
    while i < gt:
        c = caches[i]
        if c < pivot:
            handles[lt], handles[i] = handles[i], handles[lt]
            caches[lt], caches[i] = caches[i], caches[lt]
            lt += 1
            i += 1
        elif c > pivot:
            gt -= 1
            handles[gt], handles[i] = handles[i], handles[gt]
            caches[gt], caches[i] = caches[i], caches[gt]
        else:
            i += 1
    return lt, gt


@njit(cache=True, nogil=True)
def _seg_partition(handles, caches):
    # pivot: pseudo-median of the first, middle, and last cache words.
    # Selection happens inside compiled code: a pivot round-tripped through
    # Python would re-enter the kernel as int64 and uint64-vs-int64
    # comparisons degrade to float64, collapsing keys that differ only in
    # their low bytes.
    size = handles.size
    pivot = _median3(caches[0], caches[size // 2], caches[size - 1])
    lt, gt = _ternary_partition(handles, caches, pivot)
    return lt, gt, pivot


def ternary_partition(handles: np.ndarray, caches: np.ndarray, pivot) -> tuple[int, int]:
    """Three-way partition of (handle, cache) entries by a pivot word, in place."""
    lt, gt = _ternary_partition(handles, caches, np.uint64(pivot))
    return int(lt), int(gt)


def insertion_sort(arena: StringArena, handles: np.ndarray, depth: int = 0) -> np.ndarray:
    """Sort handles in place by string content, comparing from ``depth``."""
    if handles.size > 1:
        _insertion_strings(arena.data, handles, depth)
    return handles


def mkqs_step(data: np.ndarray, handles: np.ndarray, caches: np.ndarray,
              lo: int, hi: int, depth: int, t_i: int,
              counters: Counters | None = None) -> list[tuple[int, int, int]]:
    """One multikey-quicksort step on [lo, hi); returns pending child segments.

    Caches must be valid for ``depth``.  Small segments are finished with
    cached insertion sort; otherwise the segment is partitioned ternary by
    a pseudo-median-of-three pivot word.  The equal partition either
    terminates (pivot word contains the terminator, so its strings are all
    identical) or recurses at ``depth + WORD_CHARS`` with refilled caches.
    """
    size = hi - lo
    if size <= 1:
        return []
    if size < t_i:
        _insertion_cached(data, handles[lo:hi], caches[lo:hi], depth)
        return []
    h = handles[lo:hi]
    c = caches[lo:hi]
    lt, gt, pivot = _seg_partition(h, c)
    children = []
    if gt < size - 1:
        children.append((lo + gt, hi, depth))
    if gt - lt > 1 and not _has_zero_byte(np.uint64(pivot)):
        _pack_keys(data, h[lt:gt], depth + WORD_CHARS, c[lt:gt])
        if counters is not None:
            counters.add("fetches", gt - lt)
        children.append((lo + lt, lo + gt, depth + WORD_CHARS))
    if lt > 1:
        children.append((lo, lo + lt, depth))
    return children


def mkqs_cache_sort(arena: StringArena, handles: np.ndarray, depth: int = 0, *,
                    t_i: int = T_INSERTION, caches: np.ndarray | None = None,
                    counters: Counters | None = None) -> np.ndarray:
    """Sequential caching multikey quicksort with an explicit segment stack."""
    n = handles.size
    if n <= 1:
        return handles
    data = arena.data
    if caches is None:
        caches = np.empty(n, np.uint64)
        _pack_keys(data, handles, depth, caches)
        if counters is not None:
            counters.add("fetches", n)
    stack = [(0, n, depth)]
    while stack:
        lo, hi, dep = stack.pop()
        stack.extend(mkqs_step(data, handles, caches, lo, hi, dep, t_i, counters))
    return handles
