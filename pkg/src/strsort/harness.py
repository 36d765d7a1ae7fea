"""Benchmark harness: datasets, timed runs, verification, CSV reports.

Every timed run rebuilds a fresh handle array from the shared arena, times
only the sort call itself, verifies that the output is a sorted
permutation of the input, and records wall time plus instrumentation
counters.  A failed verification aborts the whole benchmark.  Dataset
construction is bit-reproducible from (generator, n, seed).
"""

from __future__ import annotations

import csv
import io
import os
import statistics
import time
from dataclasses import dataclass, field

import numpy as np

from .basesort import insertion_sort, mkqs_cache_sort
from .counters import Counters
from .mkqs_par import MkqsParConfig, parallel_mkqs_sort
from .radix import RadixConfig, parallel_radix_sort, radix_sort_8bit
from .samplesort import SampleSortConfig, parallel_sample_sort, sample_sort
from .strings import (DatasetStats, StringArena, compute_stats,
                      verify_sorted_permutation)

THREADS_ENV = "STRSORT_THREADS"


class VerificationFailed(RuntimeError):
    pass


class EmbeddedNul(ValueError):
    def __init__(self, offset: int):
        super().__init__(f"input contains byte 0 at offset {offset}")
        self.offset = offset


# ---------------------------------------------------------------------------
# dataset generation and loading

def generate_random(n: int, seed: int = 0) -> tuple[StringArena, np.ndarray]:
    """n strings with lengths uniform in [0, 20) over ASCII bytes [33, 127)."""
    rng = np.random.default_rng(seed)
    lengths = rng.integers(0, 20, n)
    total = int(lengths.sum()) + n
    data = np.zeros(total, np.uint8)
    handles = np.zeros(n, np.int64)
    handles[1:] = np.cumsum(lengths[:-1] + 1)
    mask = np.ones(total, bool)
    mask[handles + lengths] = False
    data[mask] = rng.integers(33, 127, int(lengths.sum()), dtype=np.uint8)
    return StringArena(data), handles


def generate_dna(n: int, length: int = 9, seed: int = 0) -> tuple[StringArena, np.ndarray]:
    """n fixed-length strings over the four-letter alphabet ACGT."""
    rng = np.random.default_rng(seed)
    letters = np.frombuffer(b"ACGT", np.uint8)
    data = np.zeros(n * (length + 1), np.uint8)
    body = letters[rng.integers(0, 4, n * length)]
    handles = np.arange(0, n * (length + 1), length + 1, dtype=np.int64)
    mask = np.ones(data.size, bool)
    mask[handles + length] = False
    data[mask] = body
    return StringArena(data), handles


def _load_bytes(path) -> np.ndarray:
    with open(path, "rb") as f:
        raw = f.read()
    data = np.frombuffer(raw, np.uint8)
    zeros = np.nonzero(data == 0)[0]
    if zeros.size:
        raise EmbeddedNul(int(zeros[0]))
    return data


def load_lines(path) -> tuple[StringArena, np.ndarray]:
    """One string per line; every newline becomes a terminator."""
    data = _load_bytes(path).copy()
    if data.size == 0:
        return StringArena(data), np.zeros(0, np.int64)
    newlines = data == ord("\n")
    data[newlines] = 0
    if data[-1] != 0:
        data = np.append(data, np.uint8(0))
    ends = np.nonzero(data == 0)[0]
    handles = np.zeros(ends.size, np.int64)
    handles[1:] = ends[:-1] + 1
    return StringArena(data), handles


def load_suffixes(path, max_n: int | None = None) -> tuple[StringArena, np.ndarray]:
    """One handle per byte position of the text; one terminator at the end."""
    data = _load_bytes(path)
    n = data.size if max_n is None else min(max_n, data.size)
    data = np.append(data, np.uint8(0))
    return StringArena(data), np.arange(n, dtype=np.int64)


# ---------------------------------------------------------------------------
# benchmark configuration and records

@dataclass
class RunConfig:
    algorithms: list[str] = field(default_factory=lambda: ["par_samplesort"])
    workers: list[int] = field(default_factory=lambda: [1])
    dataset: str = "random"        # random | dna | file
    n: int = 100_000
    path: str | None = None
    suffix: bool = False
    max_n: int | None = None
    dna_length: int = 9
    seed: int = 0
    reps: int = 1
    csv_path: str | None = None
    # tuning knobs
    v: int = 8191
    alpha: int = 2
    t_m: int = 64 * 1024
    t_i: int = 64
    block_size: int = 128 * 1024
    radix_bits: int = 8
    classifier: str = "unroll"
    interleave: int = 3

    def dataset_label(self) -> str:
        if self.dataset == "file":
            mode = "suffix" if self.suffix else "lines"
            return f"file:{os.path.basename(str(self.path))}:{mode}"
        if self.dataset == "dna":
            return f"dna:{self.n}x{self.dna_length}:seed{self.seed}"
        return f"random:{self.n}:seed{self.seed}"


@dataclass
class RunRecord:
    algorithm: str
    workers: int
    dataset: str
    n: int
    N: int
    D: int
    rep: int
    time_ns: int
    speedup: float | None
    verified: bool
    counters: dict

    COUNTER_COLUMNS = ("fetches", "jobs", "shares", "share_requests", "max_queue",
                      "parallel_steps", "parallel_partitions")
    # columns that legitimately vary between identically configured runs:
    # wall time, its derived speedup, and the scheduling counters, which
    # depend on thread timing (everything else is bit-reproducible)
    TIMING_COLUMNS = ("time_ns", "speedup", "jobs", "shares", "share_requests",
                      "max_queue")

    def csv_row(self) -> list:
        row = [self.algorithm, self.workers, self.dataset, self.n, self.N, self.D,
               self.rep, self.time_ns,
               "" if self.speedup is None else f"{self.speedup:.4f}",
               int(self.verified)]
        row.extend(self.counters.get(c, 0) for c in self.COUNTER_COLUMNS)
        return row

    @staticmethod
    def csv_header() -> list[str]:
        return ["algorithm", "workers", "dataset", "n", "N", "D", "rep",
                "time_ns", "speedup", "verified", *RunRecord.COUNTER_COLUMNS]


# ---------------------------------------------------------------------------
# algorithm registry

def _sample_cfg(cfg: RunConfig, classifier=None) -> SampleSortConfig:
    return SampleSortConfig(v=cfg.v, alpha=cfg.alpha, t_m=cfg.t_m, t_i=cfg.t_i,
                            classifier=classifier or cfg.classifier,
                            interleave=cfg.interleave, seed=cfg.seed + 1)


def _run_algorithm(name: str, arena, handles, workers: int, cfg: RunConfig,
                   counters: Counters):
    if name == "insertion":
        insertion_sort(arena, handles)
    elif name == "mkqs_cache":
        mkqs_cache_sort(arena, handles, t_i=cfg.t_i, counters=counters)
    elif name == "samplesort":
        sample_sort(arena, handles, cfg=_sample_cfg(cfg), counters=counters)
    elif name == "radix8":
        radix_sort_8bit(arena, handles, cfg=RadixConfig(8, cfg.t_i), counters=counters)
    elif name in ("par_samplesort", "par_samplesort_unroll", "par_samplesort_equal"):
        variant = {"par_samplesort_unroll": "unroll",
                   "par_samplesort_equal": "equal"}.get(name)
        parallel_sample_sort(arena, handles, workers,
                             cfg=_sample_cfg(cfg, variant), counters=counters)
    elif name == "par_mkqs":
        parallel_mkqs_sort(arena, handles, workers,
                           cfg=MkqsParConfig(cfg.block_size, cfg.t_i),
                           counters=counters)
    elif name in ("par_radix", "par_radix8", "par_radix16"):
        bits = {"par_radix8": 8, "par_radix16": 16}.get(name, cfg.radix_bits)
        parallel_radix_sort(arena, handles, workers,
                            cfg=RadixConfig(bits, cfg.t_i), counters=counters)
    else:
        raise ValueError(f"unknown algorithm {name!r}")


ALGORITHMS = ["insertion", "mkqs_cache", "samplesort", "radix8",
              "par_samplesort_unroll", "par_samplesort_equal", "par_mkqs",
              "par_radix8", "par_radix16"]

PARALLEL_ALGORITHMS = [a for a in ALGORITHMS if a.startswith("par_")]


# ---------------------------------------------------------------------------
# running

def build_dataset(cfg: RunConfig) -> tuple[StringArena, np.ndarray]:
    if cfg.dataset == "random":
        return generate_random(cfg.n, cfg.seed)
    if cfg.dataset == "dna":
        return generate_dna(cfg.n, cfg.dna_length, cfg.seed)
    if cfg.dataset == "file":
        if cfg.path is None:
            raise ValueError("file dataset needs a path")
        if cfg.suffix:
            return load_suffixes(cfg.path, cfg.max_n)
        return load_lines(cfg.path)
    raise ValueError(f"unknown dataset kind {cfg.dataset!r}")


def run_benchmark(cfg: RunConfig, out=None) -> list[RunRecord]:
    """Run every (algorithm, workers, rep) combination and verify each result."""
    arena, handles0 = build_dataset(cfg)
    if handles0.size == 0:
        raise ValueError("dataset is empty")
    sorted_once = mkqs_cache_sort(arena, handles0.copy())
    stats = compute_stats(arena, handles0, sorted_handles=sorted_once)
    label = cfg.dataset_label()
    records = []
    for algo in cfg.algorithms:
        for workers in cfg.workers:
            for rep in range(cfg.reps):
                handles = handles0.copy()
                counters = Counters()
                t0 = time.perf_counter_ns()
                _run_algorithm(algo, arena, handles, workers, cfg, counters)
                elapsed = time.perf_counter_ns() - t0
                check = verify_sorted_permutation(arena, handles0, handles)
                if not check.ok:
                    raise VerificationFailed(
                        f"{algo} with {workers} workers on {label}: {check.message()}")
                records.append(RunRecord(algo, workers, label, stats.n, stats.N,
                                         stats.D, rep, elapsed, None, True,
                                         counters.as_dict()))
                if out is not None:
                    print(f"{algo:24s} p={workers:<3d} rep={rep} "
                          f"{elapsed / 1e6:10.2f} ms  verified", file=out)
    _fill_speedups(records)
    if cfg.csv_path:
        write_csv(records, cfg.csv_path)
    if out is not None:
        _print_medians(records, out)
    return records


def _fill_speedups(records: list[RunRecord]) -> None:
    base: dict[str, float] = {}
    for algo in {r.algorithm for r in records}:
        ts = [r.time_ns for r in records if r.algorithm == algo and r.workers == 1]
        if ts:
            base[algo] = statistics.median(ts)
    for r in records:
        if r.algorithm in base and r.time_ns > 0:
            r.speedup = base[r.algorithm] / r.time_ns


def _print_medians(records: list[RunRecord], out) -> None:
    seen = []
    for r in records:
        key = (r.algorithm, r.workers)
        if key not in seen:
            seen.append(key)
    print("medians:", file=out)
    for algo, workers in seen:
        ts = [r.time_ns for r in records
              if r.algorithm == algo and r.workers == workers]
        med = statistics.median(ts)
        print(f"  {algo:24s} p={workers:<3d} {med / 1e6:10.2f} ms", file=out)


def write_csv(records: list[RunRecord], path) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(RunRecord.csv_header())
    for r in records:
        writer.writerow(r.csv_row())
    with open(path, "w", newline="") as f:
        f.write(buf.getvalue())
