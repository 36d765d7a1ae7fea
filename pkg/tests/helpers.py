"""Independent oracles and dataset builders for the test suite.

Everything here derives expected values by routes independent of the
library's sorting/classification paths: Python's comparison sort,
character loops, brute-force enumeration, and a prefix-doubling suffix
array built on numpy lexsort.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from strsort import StringArena, arena_from_strings

WORD = 8


# ---------------------------------------------------------------------------
# character-loop oracles

def naive_lcp(a: bytes, b: bytes) -> int:
    k = 0
    while k < len(a) and k < len(b) and a[k] == b[k]:
        k += 1
    return k


def char_window(s: bytes, depth: int, w: int = WORD) -> bytes:
    """The w-character window at depth, zero padded past the terminator."""
    body = s[depth:depth + w]
    return body + b"\x00" * (w - len(body))


def key_of(s: bytes, depth: int = 0) -> int:
    """Packed word key computed by plain byte arithmetic."""
    val = 0
    for c in char_window(s, depth):
        val = (val << 8) | c
    return val


def brute_force_distinguishing(strings: list[bytes]) -> int:
    """Sum over strings of the minimal prefix telling it from all others.

    The terminator counts when one string is a prefix of (or equal to)
    another.
    """
    total = 0
    for i, s in enumerate(strings):
        worst = 0
        for j, t in enumerate(strings):
            if i != j:
                worst = max(worst, naive_lcp(s, t))
        total += min(len(s) + 1, worst + 1)
    return total


# ---------------------------------------------------------------------------
# comparison-sort oracles

def strings_of(arena: StringArena, handles) -> list[bytes]:
    raw = arena.data.tobytes()
    out = []
    for h in handles:
        end = raw.index(0, h)
        out.append(raw[h:end])
    return out


def sorted_handle_oracle(arena: StringArena, handles) -> np.ndarray:
    """One valid sorted arrangement of the handles, via Python's sort."""
    strs = strings_of(arena, handles)
    order = sorted(range(len(strs)), key=strs.__getitem__)
    return np.asarray(handles)[order]


@njit(cache=True)
def _same_contents(data, a, b):
    for i in range(a.size):
        x = a[i]
        y = b[i]
        while True:
            ca = data[x]
            cb = data[y]
            if ca != cb:
                return i
            if ca == 0:
                break
            x += 1
            y += 1
    return -1


def contents_equal(arena: StringArena, got, expected) -> bool:
    """Positionwise string-content equality of two handle arrays."""
    got = np.asarray(got, np.int64)
    expected = np.asarray(expected, np.int64)
    if got.size != expected.size:
        return False
    if got.size == 0:
        return True
    return _same_contents(arena.data, got, expected) == -1


def suffix_array_oracle(text: bytes) -> np.ndarray:
    """Offsets of text suffixes in sorted order, by prefix doubling.

    Matches the library's suffix mode (a single terminator after the
    text): running past the end ranks below every character.
    """
    data = np.frombuffer(text, np.uint8).astype(np.int64)
    n = data.size
    if n == 0:
        return np.zeros(0, np.int64)
    rank = data.copy()
    k = 1
    while True:
        key2 = np.zeros(n, np.int64)
        key2[:n - k] = rank[k:] + 1
        order = np.lexsort((key2, rank))
        comb = rank[order] * (n + 1) + key2[order]
        new_rank = np.zeros(n, np.int64)
        new_rank[order[1:]] = np.cumsum(comb[1:] != comb[:-1])
        rank = new_rank
        if rank[order[-1]] == n - 1:
            return order.astype(np.int64)
        k *= 2


# ---------------------------------------------------------------------------
# dataset builders

def random_strings(n: int, seed: int = 0, max_len: int = 20,
                   lo: int = 33, hi: int = 127) -> list[bytes]:
    rng = np.random.default_rng(seed)
    return [bytes(rng.integers(lo, hi, rng.integers(0, max_len)).tolist())
            for _ in range(n)]


def identical_dataset(n: int, length: int = 17):
    return arena_from_strings([b"q" * length] * n)


def empty_dataset(n: int):
    return arena_from_strings([b""] * n)


def shared_prefix_dataset(n: int, prefix_len: int = 1000, seed: int = 0):
    rng = np.random.default_rng(seed)
    prefix = b"p" * prefix_len
    tails = [bytes(rng.integers(97, 123, rng.integers(0, 16)).tolist())
             for _ in range(n)]
    return arena_from_strings([prefix + t for t in tails])


def word_text(size: int, seed: int = 0) -> bytes:
    """Text stitched from a small vocabulary; moderate suffix LCPs."""
    rng = np.random.default_rng(seed)
    vocab = [bytes(rng.integers(97, 123, rng.integers(2, 9)).tolist())
             for _ in range(500)]
    parts = []
    total = 0
    while total < size:
        w = vocab[rng.integers(0, len(vocab))]
        parts.append(w)
        total += len(w) + 1
    return b" ".join(parts)[:size]
