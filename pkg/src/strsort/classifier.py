"""Splitter selection and branch-free key classification.

A classification step picks ``v = 2**d - 1`` word keys (splitters) from a
sorted sample, lays them out both in order and as the level-order array of
a perfect binary search tree, and maps every input key to one of
``2v + 1`` buckets: even buckets hold keys strictly between neighboring
splitters, odd buckets hold keys exactly equal to one splitter.  Equality
buckets matter because all their strings share a full key word, so the
recursion can skip those characters entirely.

Two production classifiers are provided.  The "unroll" variant descends
the full tree with branch-free ``i = 2 i + (key > node)`` updates,
interleaving a few independent descents, and does a single equality test
at the leaf.  The "equal" variant tests equality at every node and leaves
the tree early; the equality bucket is reconstructed from the level-order
node index with bit arithmetic.  Both must agree with ``classify_oracle``,
the direct counting definition, on every input.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .strings import WORD_CHARS, StringArena, pack_keys


class BadSplitterCount(ValueError):
    """Splitter array length must be 2**d - 1."""


def oracle_dtype(v: int):
    """Bucket-index storage width: one byte while 2v+1 fits, two otherwise."""
    return np.uint8 if 2 * v + 1 <= 256 else np.uint16


@dataclass
class SplitterTree:
    level_order: np.ndarray   # uint64, slot 0 unused, root at index 1
    in_order: np.ndarray      # uint64, non-decreasing
    splitter_lcp: np.ndarray  # int64, [0] = 0, [j] = char-lcp of splitters j-1, j
    terminated: np.ndarray    # bool, splitter word contains a terminator byte
    depth: int                # d with v = 2**d - 1

    @property
    def v(self) -> int:
        return self.in_order.size

    @property
    def num_buckets(self) -> int:
        return 2 * self.in_order.size + 1


@dataclass
class BucketLayout:
    counts: np.ndarray       # int64, size 2v+1
    boundaries: np.ndarray   # int64, exclusive prefix sums, size 2v+2
    depth_delta: np.ndarray  # int64, characters gained per bucket
    finished: np.ndarray     # bool, bucket needs no recursion


# ---------------------------------------------------------------------------
# construction

def effective_v(v_max: int, segment_size: int) -> int:
    """Shrink the splitter count for small segments: largest 2**d - 1 <= size/2."""
    m = max(1, segment_size // 2)
    x = (1 << m.bit_length()) - 1
    if x > m:
        x >>= 1
    return max(1, min(v_max, x))


def draw_sample(arena: StringArena, handles: np.ndarray, depth: int, v: int,
                alpha: int, rng: np.random.Generator) -> np.ndarray:
    """Sorted sample of ``alpha * v`` keys drawn with replacement at ``depth``."""
    idx = rng.integers(0, handles.size, alpha * v)
    sample = pack_keys(arena, handles[idx], depth)
    sample.sort()
    return sample


def select_splitters(sample: np.ndarray, v: int) -> np.ndarray:
    """Assign v splitters to in-order tree slots by recursive middle selection.

    The middle sample of the current range becomes the middle splitter;
    scanning skips samples equal to it before recursing on both halves.
    An exhausted sub-range fills its remaining slots with the boundary
    value, so duplicate splitters can occur but the tree stays perfect.
    """
    out = np.empty(v, np.uint64)

    def fill(lo, hi, a, b, fallback):
        if lo > hi:
            return
        if a > b:
            out[lo:hi + 1] = fallback
            return
        mid = (lo + hi) // 2
        m = (a + b) // 2
        x = sample[m]
        out[mid] = x
        b2 = m - 1
        while b2 >= a and sample[b2] == x:
            b2 -= 1
        a2 = m + 1
        while a2 <= b and sample[a2] == x:
            a2 += 1
        fill(lo, mid - 1, a, b2, x)
        fill(mid + 1, hi, a2, b, x)

    fill(0, v - 1, 0, sample.size - 1, sample[0])
    return out


@njit(cache=True, nogil=True)
def _fill_level_order(in_order, level_order, d):
    v = in_order.size
    for i in range(1, v + 1):
        l = 0
        while (1 << (l + 1)) <= i:
            l += 1
        j = (2 * (i - (1 << l)) + 1) * (1 << (d - 1 - l)) - 1
        level_order[i] = in_order[j]


@njit(cache=True, nogil=True)
def _splitter_lcps(in_order, out):
    out[0] = 0
    for j in range(1, in_order.size):
        x = in_order[j - 1] ^ in_order[j]
        if x == np.uint64(0):
            out[j] = 8
        else:
            z = 0
            t = np.uint64(0x8000000000000000)
            while (x & t) == np.uint64(0):
                z += 1
                t >>= np.uint64(1)
            out[j] = z // 8


@njit(cache=True, nogil=True, inline="always")
def _has_zero_byte(word):
    for k in range(8):
        if ((word >> np.uint64(56 - 8 * k)) & np.uint64(0xFF)) == np.uint64(0):
            return True
    return False


@njit(cache=True, nogil=True)
def _terminated_flags(in_order, out):
    for j in range(in_order.size):
        out[j] = _has_zero_byte(in_order[j])


def build_tree(in_order: np.ndarray) -> SplitterTree:
    """Build the level-order layout plus per-splitter LCPs and terminator flags.

    Splitter LCPs come from XOR and a leading-zero-bit count divided by 8,
    capped at the word width for equal splitters.
    """
    v = in_order.size
    d = v.bit_length()
    if v < 1 or (1 << d) - 1 != v:
        raise BadSplitterCount(f"need 2**d - 1 splitters, got {v}")
    in_order = np.ascontiguousarray(in_order, np.uint64)
    level_order = np.zeros(v + 1, np.uint64)
    _fill_level_order(in_order, level_order, d)
    lcps = np.empty(v, np.int64)
    _splitter_lcps(in_order, lcps)
    term = np.empty(v, np.bool_)
    _terminated_flags(in_order, term)
    return SplitterTree(level_order, in_order, lcps, term, d)


def inorder_rank(i: int, level: int, d: int) -> int:
    """In-order rank of level-order node ``i`` (level = floor(log2 i)) in a perfect tree."""
    return (2 * (i - (1 << level)) + 1) * (1 << (d - 1 - level)) - 1


# ---------------------------------------------------------------------------
# classification

def classify_oracle(keys, in_order: np.ndarray):
    """Reference bucket assignment by direct counting.

    With c = number of splitters strictly less than the key, the bucket is
    2c+1 when splitter c equals the key, else 2c.  Accepts a scalar or an
    array; vectorized via binary search, independent of the tree layout.
    """
    scalar = np.isscalar(keys)
    arr = np.atleast_1d(np.asarray(keys, np.uint64))
    v = in_order.size
    c = np.searchsorted(in_order, arr, side="left")
    eq = (c < v) & (in_order[np.minimum(c, v - 1)] == arr)
    buckets = (2 * c + eq).astype(np.int64)
    return int(buckets[0]) if scalar else buckets


@njit(cache=True, nogil=True)
def _classify_unrolled(keys, level_order, in_order, d, iw, out):
    n = keys.size
    v = in_order.size
    base = 1 << d
    idx = np.empty(iw, np.int64)
    p = 0
    while p + iw <= n:
        for t in range(iw):
            idx[t] = 1
        for _ in range(d):
            for t in range(iw):
                node = level_order[idx[t]]
                idx[t] = 2 * idx[t] + (1 if keys[p + t] > node else 0)
        for t in range(iw):
            c = idx[t] - base
            b = 2 * c
            if c < v and in_order[c] == keys[p + t]:
                b += 1
            out[p + t] = b
        p += iw
    for q in range(p, n):
        i = 1
        k = keys[q]
        for _ in range(d):
            i = 2 * i + (1 if k > level_order[i] else 0)
        c = i - base
        b = 2 * c
        if c < v and in_order[c] == k:
            b += 1
        out[q] = b


@njit(cache=True, nogil=True)
def _classify_equal(keys, level_order, in_order, d, out):
    n = keys.size
    base = 1 << d
    for q in range(n):
        k = keys[q]
        i = 1
        b = -1
        for l in range(d):
            node = level_order[i]
            if k == node:
                j = (2 * (i - (1 << l)) + 1) * (1 << (d - 1 - l)) - 1
                # duplicate splitters: report the first equal in-order slot
                while j > 0 and in_order[j - 1] == k:
                    j -= 1
                b = 2 * j + 1
                break
            i = 2 * i + (1 if k > node else 0)
        if b < 0:
            b = 2 * (i - base)
        out[q] = b


def classify_tree_unrolled(keys: np.ndarray, tree: SplitterTree,
                           interleave: int = 3,
                           out: np.ndarray | None = None) -> np.ndarray:
    """Classify a key batch by full branch-free tree descent, descents interleaved."""
    keys = np.ascontiguousarray(keys, np.uint64)
    if out is None:
        out = np.empty(keys.size, oracle_dtype(tree.v))
    _classify_unrolled(keys, tree.level_order, tree.in_order, tree.depth,
                       max(1, interleave), out)
    return out


def classify_tree_equal(keys: np.ndarray, tree: SplitterTree,
                        out: np.ndarray | None = None) -> np.ndarray:
    """Classify a key batch testing equality at every node of the descent."""
    keys = np.ascontiguousarray(keys, np.uint64)
    if out is None:
        out = np.empty(keys.size, oracle_dtype(tree.v))
    _classify_equal(keys, tree.level_order, tree.in_order, tree.depth, out)
    return out


# ---------------------------------------------------------------------------
# bucket layout

def bucket_layout(counts: np.ndarray, tree: SplitterTree, parent_depth: int) -> BucketLayout:
    """Boundaries, per-bucket depth gains, and finished flags for one step.

    The outermost buckets gain nothing, inner even buckets gain the LCP of
    their neighboring splitters, equality buckets gain the full word.  An
    equality bucket whose splitter contains the terminator holds only
    copies of one whole string and is finished.
    """
    v = tree.v
    k = 2 * v + 1
    counts = np.asarray(counts, np.int64)
    boundaries = np.zeros(k + 1, np.int64)
    np.cumsum(counts, out=boundaries[1:])
    delta = np.zeros(k, np.int64)
    delta[1::2] = WORD_CHARS
    if v > 1:
        inner = np.arange(2, 2 * v, 2)
        delta[inner] = tree.splitter_lcp[inner // 2]
    finished = np.zeros(k, np.bool_)
    finished[1::2] = tree.terminated
    return BucketLayout(counts, boundaries, delta, finished)
