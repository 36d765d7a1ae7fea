import numpy as np
import pytest

from strsort import (Counters, SampleSortConfig, arena_from_strings, lcp,
                     pack_keys, parallel_sample_sort, sample_sort,
                     verify_sorted_permutation)
from strsort.classifier import build_tree, classify_oracle
from strsort.samplesort import (classify_and_count, distribute_outofplace,
                                permute_inplace)

from helpers import (contents_equal, identical_dataset, random_strings,
                     sorted_handle_oracle, strings_of)

SMALL = SampleSortConfig(v=15, t_m=256, t_i=16, seed=3)


def make_tree(arena, handles, v=7):
    keys = np.sort(pack_keys(arena, handles))
    idx = np.linspace(0, keys.size - 1, v).astype(np.int64)
    return build_tree(keys[idx])


# ---------------------------------------------------------------------------
# classify + count

def test_classify_and_count_sums_to_segment_size():
    arena, handles = arena_from_strings(random_strings(777, seed=0))
    tree = make_tree(arena, handles)
    for variant in ("unroll", "equal"):
        _, counts = classify_and_count(arena, handles, 0, tree, variant)
        assert counts.sum() == 777


def test_classify_and_count_matches_oracle_histogram():
    arena, handles = arena_from_strings(random_strings(500, seed=1))
    tree = make_tree(arena, handles)
    oracle, counts = classify_and_count(arena, handles, 0, tree)
    want = classify_oracle(pack_keys(arena, handles), tree.in_order)
    np.testing.assert_array_equal(oracle.astype(np.int64), want)
    np.testing.assert_array_equal(counts, np.bincount(want, minlength=tree.num_buckets))


def test_classify_and_count_single_string():
    arena, handles = arena_from_strings([b"only"])
    tree = make_tree(arena, np.asarray(handles), v=3)
    _, counts = classify_and_count(arena, handles, 0, tree)
    assert counts.sum() == 1
    assert np.count_nonzero(counts) == 1


# ---------------------------------------------------------------------------
# permutation

def boundaries_of(oracle, k):
    counts = np.bincount(oracle, minlength=k)
    out = np.zeros(k + 1, np.int64)
    np.cumsum(counts, out=out[1:])
    return out


def test_permute_inplace_already_grouped():
    handles = np.arange(10, dtype=np.int64)
    oracle = np.asarray([0, 0, 1, 1, 1, 2, 2, 2, 2, 2], np.uint8)
    permute_inplace(handles, oracle.copy(), boundaries_of(oracle, 3))
    assert sorted(handles.tolist()) == list(range(10))
    assert set(handles[:2]) == {0, 1}
    assert set(handles[2:5]) == {2, 3, 4}


def test_permute_inplace_random_multisets_match():
    rng = np.random.default_rng(4)
    k = 17
    oracle = rng.integers(0, k, 10_000).astype(np.uint16)
    handles = np.arange(10_000, dtype=np.int64)
    bounds = boundaries_of(oracle, k)
    want = {b: set(np.nonzero(oracle == b)[0].tolist()) for b in range(k)}
    permute_inplace(handles, oracle.copy(), bounds)
    for b in range(k):
        got = set(handles[bounds[b]:bounds[b + 1]].tolist())
        assert got == want[b]


def test_permute_inplace_blockwise_exchange():
    handles = np.asarray([100, 101, 102, 200, 201, 202], np.int64)
    oracle = np.asarray([1, 1, 1, 0, 0, 0], np.uint8)
    permute_inplace(handles, oracle.copy(), boundaries_of(oracle, 2))
    assert handles.tolist() == [200, 201, 202, 100, 101, 102]


def test_distribute_outofplace_mirrors_inplace():
    rng = np.random.default_rng(5)
    k = 9
    oracle = rng.integers(0, k, 4000).astype(np.uint8)
    src = np.arange(4000, dtype=np.int64)
    bounds = boundaries_of(oracle, k)
    dst = np.zeros_like(src)
    distribute_outofplace(src, dst, oracle, bounds)
    inp = src.copy()
    permute_inplace(inp, oracle.copy(), bounds)
    for b in range(k):
        a, e = bounds[b], bounds[b + 1]
        assert set(dst[a:e].tolist()) == set(inp[a:e].tolist())


# ---------------------------------------------------------------------------
# sequential sample sort

def test_seq_small_input_delegates_to_insertion():
    strs = random_strings(10, seed=2)
    arena, handles = arena_from_strings(strs)
    sample_sort(arena, handles, cfg=SampleSortConfig(t_i=64))
    assert strings_of(arena, handles) == sorted(strs)


@pytest.mark.parametrize("variant", ["unroll", "equal"])
def test_seq_random_matches_oracle(variant):
    strs = random_strings(100_000, seed=8)
    arena, handles = arena_from_strings(strs)
    orig = handles.copy()
    cfg = SampleSortConfig(v=127, t_m=2048, t_i=32, classifier=variant, seed=1)
    sample_sort(arena, handles, cfg=cfg)
    assert verify_sorted_permutation(arena, orig, handles).ok
    assert contents_equal(arena, handles, sorted_handle_oracle(arena, orig))


def test_seq_all_identical_equality_chain():
    # depth advances a full word per step: ceil((len+1)/w) steps for len 17
    arena, handles = identical_dataset(100_000, length=17)
    counters = Counters()
    cfg = SampleSortConfig(v=31, t_m=64, t_i=16)
    sample_sort(arena, handles, cfg=cfg, counters=counters)
    assert counters.get("sample_steps") == 3


def test_seq_deep_recursion_low_alphabet():
    strs = random_strings(30_000, seed=9, lo=97, hi=99, max_len=25)
    arena, handles = arena_from_strings(strs)
    orig = handles.copy()
    sample_sort(arena, handles, cfg=SMALL)
    assert verify_sorted_permutation(arena, orig, handles).ok
    assert contents_equal(arena, handles, sorted_handle_oracle(arena, orig))


def test_eq1_audit_seq():
    # every recursive call's claimed depth is a true lower bound on pairwise lcp
    strs = random_strings(20_000, seed=10)
    arena, handles = arena_from_strings(strs)
    rng = np.random.default_rng(0)
    violations = []

    def audit(side, lo, hi, depth):
        m = hi - lo
        for _ in range(min(100, m)):
            i, j = rng.integers(lo, hi, 2)
            if lcp(arena, int(side[i]), int(side[j])) < depth:
                violations.append((lo, hi, depth))
                return

    sample_sort(arena, handles, cfg=SMALL, audit=audit)
    assert violations == []


# ---------------------------------------------------------------------------
# fully parallel sample sort

def test_par_single_worker_matches_seq_content():
    strs = random_strings(50_000, seed=11)
    arena, handles = arena_from_strings(strs)
    seq = handles.copy()
    sample_sort(arena, seq, cfg=SMALL)
    par = handles.copy()
    parallel_sample_sort(arena, par, 1, cfg=SMALL)
    assert contents_equal(arena, par, seq)


@pytest.mark.parametrize("workers", [2, 4, 8])
@pytest.mark.parametrize("variant", ["unroll", "equal"])
def test_par_content_identical_across_worker_counts(workers, variant):
    strs = random_strings(40_000, seed=12)
    arena, handles = arena_from_strings(strs)
    cfg = SampleSortConfig(v=63, t_m=1024, t_i=24, classifier=variant, seed=5)
    base = handles.copy()
    parallel_sample_sort(arena, base, 1, cfg=cfg)
    got = handles.copy()
    parallel_sample_sort(arena, got, workers, cfg=cfg)
    assert verify_sorted_permutation(arena, handles, got).ok
    assert contents_equal(arena, got, base)


def test_par_child_sizes_sum_to_parent():
    strs = random_strings(5_000, seed=13)
    arena, handles = arena_from_strings(strs)
    seen = []

    def audit(side, lo, hi, depth):
        seen.append((lo, hi, depth))

    parallel_sample_sort(arena, handles, 2,
                         cfg=SampleSortConfig(v=31, t_m=512, t_i=16), audit=audit)
    roots = [s for s in seen if s[2] == 0]
    # depth-0 children plus finished/singleton buckets partition the root range
    assert all(0 <= lo < hi <= 5000 for lo, hi, _ in seen)
    assert sum(hi - lo for lo, hi, _ in roots) <= 5000


def test_eq1_audit_parallel():
    strs = random_strings(100_000, seed=14)
    arena, handles = arena_from_strings(strs)
    import threading
    lock = threading.Lock()
    rng = np.random.default_rng(1)
    violations = []

    def audit(side, lo, hi, depth):
        with lock:
            idx = rng.integers(lo, hi, (min(100, hi - lo), 2))
        for i, j in idx:
            if lcp(arena, int(side[i]), int(side[j])) < depth:
                with lock:
                    violations.append((lo, hi, depth))
                return

    parallel_sample_sort(arena, handles, 2,
                         cfg=SampleSortConfig(v=255, t_m=4096, t_i=32), audit=audit)
    assert violations == []


def test_par_shadow_accounting_identical_strings():
    arena, handles = identical_dataset(20_000, length=17)
    orig = handles.copy()
    parallel_sample_sort(arena, handles, 4, cfg=SampleSortConfig(v=15, t_m=64, t_i=8))
    assert verify_sorted_permutation(arena, orig, handles).ok


def test_par_tiny_inputs():
    for n in (0, 1, 2, 3, 10):
        strs = random_strings(n, seed=n)
        arena, handles = arena_from_strings(strs)
        parallel_sample_sort(arena, handles, 8, cfg=SMALL)
        assert strings_of(arena, handles) == sorted(strs)
