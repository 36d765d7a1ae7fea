import numpy as np
import pytest

from strsort import (Counters, MkqsParConfig, arena_from_strings,
                     mkqs_cache_sort, pack_keys, parallel_mkqs_sort,
                     verify_sorted_permutation)
from strsort.mkqs_par import (allocate_workers, par_ternary_partition,
                              select_pivot_global)

from helpers import (contents_equal, identical_dataset, random_strings,
                     sorted_handle_oracle)


def entries_of(strs, depth=0):
    arena, handles = arena_from_strings(strs)
    return arena, handles, pack_keys(arena, handles, depth)


# ---------------------------------------------------------------------------
# pivot selection

def test_pivot_single_entry():
    _, _, caches = entries_of([b"alone"])
    assert select_pivot_global(caches) == int(caches[0])


def test_pivot_all_equal():
    _, _, caches = entries_of([b"same"] * 40)
    assert select_pivot_global(caches, block_size=8) == int(caches[0])


def test_pivot_is_member_of_multiset():
    rng = np.random.default_rng(0)
    for trial in range(50):
        caches = rng.integers(0, 2**64, int(rng.integers(1, 200)), dtype=np.uint64)
        pivot = select_pivot_global(caches, block_size=16)
        assert pivot in set(int(x) for x in caches)


# ---------------------------------------------------------------------------
# block-wise ternary partition

@pytest.mark.parametrize("workers", [1, 2, 4])
def test_partition_counts_and_trichotomy(workers):
    strs = random_strings(5000, seed=1)
    arena, handles, caches = entries_of(strs)
    pivot = select_pivot_global(caches, block_size=256)
    sets = par_ternary_partition(handles.copy(), caches.copy(), pivot,
                                 workers, block_size=256)
    n_lt, n_eq, n_gt = sets.sizes
    assert n_lt + n_eq + n_gt == len(strs)
    for cls, rel in ((0, "lt"), (1, "eq"), (2, "gt")):
        for h_buf, c_buf, fill in sets.by_class(cls):
            c = c_buf[:fill]
            if rel == "lt":
                assert np.all(c < np.uint64(pivot))
            elif rel == "eq":
                assert np.all(c == np.uint64(pivot))
            else:
                assert np.all(c > np.uint64(pivot))


def test_partition_multisets_match_sequential_oracle():
    strs = random_strings(3000, seed=2)
    arena, handles, caches = entries_of(strs)
    pivot = np.uint64(select_pivot_global(caches, block_size=128))
    want_lt = sorted(handles[caches < pivot].tolist())
    want_eq = sorted(handles[caches == pivot].tolist())
    want_gt = sorted(handles[caches > pivot].tolist())
    sets = par_ternary_partition(handles, caches, int(pivot), 4, block_size=128)
    got = []
    for cls in range(3):
        members = []
        for h_buf, _, fill in sets.by_class(cls):
            members.extend(h_buf[:fill].tolist())
        got.append(sorted(members))
    assert got == [want_lt, want_eq, want_gt]


@pytest.mark.parametrize("workers", [1, 3, 8])
def test_partial_block_bound(workers):
    strs = random_strings(20_000, seed=3)
    arena, handles, caches = entries_of(strs)
    pivot = select_pivot_global(caches, block_size=512)
    sets = par_ternary_partition(handles, caches, pivot, workers, block_size=512)
    assert sets.partial_blocks <= 3 * workers


def test_worker_allocation():
    assert allocate_workers((100, 0, 100), 4) == [2, 0, 2]
    assert allocate_workers((1, 1, 1), 3) == [1, 1, 1]
    # nonempty sets always get a worker, big sets get proportional shares
    alloc = allocate_workers((1000, 10, 10), 8)
    assert alloc[0] >= 6 and alloc[1] >= 1 and alloc[2] >= 1
    assert allocate_workers((0, 0, 0), 4) == [0, 0, 0]
    rng = np.random.default_rng(4)
    for _ in range(100):
        sizes = tuple(int(x) for x in rng.integers(0, 1000, 3))
        p = int(rng.integers(1, 16))
        alloc = allocate_workers(sizes, p)
        for s, a in zip(sizes, alloc):
            if s == 0:
                assert a == 0
            else:
                assert 1 <= a <= p
                if sum(sizes):
                    assert a >= min(p, s * p // sum(sizes))


# ---------------------------------------------------------------------------
# full parallel sort

@pytest.mark.parametrize("workers", [1, 2, 4, 8])
def test_par_mkqs_matches_oracle(workers):
    strs = random_strings(60_000, seed=5)
    arena, handles = arena_from_strings(strs)
    orig = handles.copy()
    parallel_mkqs_sort(arena, handles, workers, cfg=MkqsParConfig(block_size=2048))
    assert verify_sorted_permutation(arena, orig, handles).ok
    assert contents_equal(arena, handles, sorted_handle_oracle(arena, orig))


def test_par_mkqs_all_identical_terminates():
    arena, handles = identical_dataset(30_000, length=17)
    orig = handles.copy()
    counters = Counters()
    parallel_mkqs_sort(arena, handles, 4,
                       cfg=MkqsParConfig(block_size=1024), counters=counters)
    assert verify_sorted_permutation(arena, orig, handles).ok
    # one fill plus refreshed equal-set caches at depths 8 and 16
    assert counters.get("fetches") == 3 * 30_000


def test_par_mkqs_content_equals_sequential():
    strs = random_strings(25_000, seed=6, lo=97, hi=100)
    arena, handles = arena_from_strings(strs)
    seq = handles.copy()
    mkqs_cache_sort(arena, seq)
    for workers in (1, 2, 4):
        par = handles.copy()
        parallel_mkqs_sort(arena, par, workers, cfg=MkqsParConfig(block_size=512))
        assert contents_equal(arena, par, seq)


def test_par_mkqs_default_block_size_big_blocks():
    # segment smaller than one block still partitions correctly
    strs = random_strings(4000, seed=7)
    arena, handles = arena_from_strings(strs)
    orig = handles.copy()
    parallel_mkqs_sort(arena, handles, 2)
    assert verify_sorted_permutation(arena, orig, handles).ok
