"""String arena, handles, packed word keys, and output verification.

All sorters in this package operate on the same representation: the text
lives in one contiguous byte arena where every string is a run of bytes
from 1..255 closed by a single 0 terminator, and the object being sorted
is an array of int64 *handles* (offsets of string starts).  Sorting moves
handles, never characters.

Keys are windows of up to ``WORD_CHARS`` characters packed into one
unsigned 64-bit word, most significant byte first, so that unsigned
integer comparison of two keys equals lexicographic comparison of the
underlying character windows.  The terminator participates in the key and
every byte after it is forced to 0; since 0 is not a valid character, a
short string's key is strictly smaller than the key of any proper
extension.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

#: characters per packed key word (64-bit words, 8-bit characters)
WORD_CHARS = 8


class EmptyInput(ValueError):
    """Raised when an operation needs at least one string."""


# ---------------------------------------------------------------------------
# kernels

@njit(cache=True, nogil=True, inline="always")
def _pack_one(data, off):
    word = np.uint64(0)
    shift = 56
    for _ in range(8):
        c = data[off]
        if c == 0:
            break
        word |= np.uint64(c) << np.uint64(shift)
        shift -= 8
        off += 1
    return word


@njit(cache=True, nogil=True)
def _pack_keys(data, handles, depth, out):
    for i in range(handles.size):
        out[i] = _pack_one(data, handles[i] + depth)


@njit(cache=True, nogil=True)
def _lcp_pair(data, a, b):
    k = 0
    while data[a + k] != 0 and data[a + k] == data[b + k]:
        k += 1
    return k


@njit(cache=True, nogil=True)
def _compare_from(data, a, b, depth):
    i = depth
    while True:
        ca = data[a + i]
        cb = data[b + i]
        if ca != cb:
            return -1 if ca < cb else 1
        if ca == 0:
            return 0
        i += 1


@njit(cache=True, nogil=True)
def _first_unsorted(data, handles):
    for i in range(handles.size - 1):
        if _compare_from(data, handles[i], handles[i + 1], 0) > 0:
            return i
    return -1


@njit(cache=True, nogil=True)
def _string_lengths(data, handles, out):
    # distance to the next terminator for every arena position, then gather;
    # O(arena + n) even in suffix mode where naive scans would be quadratic
    dist = np.empty(data.size, np.int64)
    for i in range(data.size - 1, -1, -1):
        if data[i] == 0:
            dist[i] = 0
        else:
            dist[i] = dist[i + 1] + 1
    for j in range(handles.size):
        out[j] = dist[handles[j]]


@njit(cache=True, nogil=True)
def _adjacent_lcps(data, handles, out):
    for i in range(out.size):
        out[i] = _lcp_pair(data, handles[i], handles[i + 1])


# ---------------------------------------------------------------------------
# arena

class StringArena:
    """Contiguous zero-terminated character storage.

    ``data`` is a read-only-by-convention uint8 array.  In line mode each
    handle points at the byte after a terminator (or offset 0); in suffix
    mode handles may start anywhere and the arena carries exactly one
    terminator, at the very end.
    """

    __slots__ = ("data",)

    def __init__(self, data):
        data = np.ascontiguousarray(data, dtype=np.uint8)
        if data.size and data[-1] != 0:
            raise ValueError("arena must end with a terminator byte")
        self.data = data

    @property
    def sigma(self) -> int:
        """Number of distinct non-zero byte values present."""
        return int(np.unique(self.data[self.data != 0]).size)

    def string_at(self, handle: int) -> bytes:
        """Return one string's bytes, terminator excluded (slow; debugging)."""
        end = handle
        while self.data[end] != 0:
            end += 1
        return self.data[handle:end].tobytes()

    def length_at(self, handle: int) -> int:
        end = handle
        while self.data[end] != 0:
            end += 1
        return end - handle

    def __len__(self):
        return self.data.size


def arena_from_strings(strings) -> tuple[StringArena, np.ndarray]:
    """Build an arena plus handle array from an iterable of bytes/str.

    Embedded zero bytes are rejected; each string gets its own terminator.
    """
    chunks = []
    handles = []
    pos = 0
    for s in strings:
        if isinstance(s, str):
            s = s.encode()
        if 0 in s:
            raise ValueError("strings must not contain byte 0")
        handles.append(pos)
        chunks.append(s)
        pos += len(s) + 1
    if not handles:
        return StringArena(np.zeros(0, np.uint8)), np.zeros(0, np.int64)
    data = np.zeros(pos, np.uint8)
    at = 0
    for s in chunks:
        data[at:at + len(s)] = np.frombuffer(s, np.uint8)
        at += len(s) + 1
    return StringArena(data), np.asarray(handles, np.int64)


# ---------------------------------------------------------------------------
# key extraction and lcp

def pack_keys(arena: StringArena, handles: np.ndarray, depth: int = 0,
              out: np.ndarray | None = None) -> np.ndarray:
    """Extract the packed word key of every handle at character offset ``depth``."""
    if out is None:
        out = np.empty(handles.size, np.uint64)
    _pack_keys(arena.data, handles, depth, out)
    return out


def extract_key(arena: StringArena, handle: int, depth: int = 0) -> int:
    """Packed word key of one string starting at offset ``depth``.

    ``depth`` must not exceed the string length; reading at the terminator
    is legal and yields an all-zero key.
    """
    return int(_pack_one(arena.data, handle + depth))


def lcp(arena: StringArena, a: int, b: int) -> int:
    """Length of the longest common prefix of two strings (terminators excluded)."""
    return int(_lcp_pair(arena.data, a, b))


def compare(arena: StringArena, a: int, b: int, depth: int = 0) -> int:
    """Three-way bytewise comparison of two strings from offset ``depth``."""
    return int(_compare_from(arena.data, a, b, depth))


# ---------------------------------------------------------------------------
# verification

@dataclass(frozen=True)
class VerifyResult:
    ok: bool
    reason: str | None = None   # "not_permutation" | "not_sorted"
    index: int = -1             # offending handle / offending position

    def message(self) -> str:
        if self.ok:
            return "ok"
        if self.reason == "not_permutation":
            return f"not a permutation of the input (first offending handle {self.index})"
        return f"not sorted (first offending index {self.index})"


def verify_sorted_permutation(arena: StringArena, original: np.ndarray,
                              result: np.ndarray) -> VerifyResult:
    """Check that ``result`` is a permutation of ``original`` in non-descending order."""
    if original.size != result.size:
        return VerifyResult(False, "not_permutation", int(result[0]) if result.size else -1)
    a = np.sort(original)
    b = np.sort(result)
    diff = np.nonzero(a != b)[0]
    if diff.size:
        return VerifyResult(False, "not_permutation", int(b[diff[0]]))
    bad = int(_first_unsorted(arena.data, result))
    if bad >= 0:
        return VerifyResult(False, "not_sorted", bad)
    return VerifyResult(True)


# ---------------------------------------------------------------------------
# dataset statistics

@dataclass(frozen=True)
class DatasetStats:
    n: int          # string count
    N: int          # total characters including terminators
    D: int          # distinguishing prefix size
    sigma: int      # alphabet size
    avg_len: float  # mean string length, terminator excluded


def string_lengths(arena: StringArena, handles: np.ndarray) -> np.ndarray:
    out = np.empty(handles.size, np.int64)
    if handles.size:
        _string_lengths(arena.data, handles, out)
    return out


def compute_stats(arena: StringArena, handles: np.ndarray,
                  sorted_handles: np.ndarray | None = None) -> DatasetStats:
    """Characterize a string set: n, N, distinguishing prefix size D, sigma.

    D sums, per string, the prefix length needed to tell it apart from
    every other string; a duplicate contributes its full length plus the
    terminator.  Computed from neighbor LCPs in sorted order, so a sorted
    handle array can be supplied to skip the internal sort.
    """
    n = int(handles.size)
    if n == 0:
        raise EmptyInput("compute_stats needs at least one string")
    lengths = string_lengths(arena, handles)
    total = int(lengths.sum()) + n
    if sorted_handles is None:
        from .basesort import mkqs_cache_sort
        sorted_handles = handles.copy()
        mkqs_cache_sort(arena, sorted_handles)
    if n == 1:
        return DatasetStats(1, total, min(int(lengths[0]) + 1, 1), arena.sigma,
                            float(lengths[0]))
    lcps = np.empty(n - 1, np.int64)
    _adjacent_lcps(arena.data, sorted_handles, lcps)
    best = np.zeros(n, np.int64)
    best[:-1] = lcps
    np.maximum(best[1:], lcps, out=best[1:])
    sorted_lengths = string_lengths(arena, sorted_handles)
    d = int(np.minimum(sorted_lengths + 1, best + 1).sum())
    return DatasetStats(n, total, d, arena.sigma, float(lengths.mean()))
