"""Shared-memory parallel string sorting.

Sorters (all reorder an int64 handle array over a shared byte arena):

- :func:`insertion_sort`, :func:`mkqs_cache_sort`, :func:`sample_sort`,
  :func:`radix_sort_8bit` -- sequential
- :func:`parallel_sample_sort`, :func:`parallel_mkqs_sort`,
  :func:`parallel_radix_sort` -- fully parallel over a work-sharing pool
"""

from .basesort import insertion_sort, mkqs_cache_sort
from .counters import Counters
from .harness import (RunConfig, VerificationFailed, generate_dna,
                      generate_random, load_lines, load_suffixes, run_benchmark)
from .mkqs_par import MkqsParConfig, parallel_mkqs_sort
from .radix import RadixConfig, parallel_radix_sort, radix_sort_8bit
from .samplesort import SampleSortConfig, parallel_sample_sort, sample_sort
from .strings import (DatasetStats, EmptyInput, StringArena, WORD_CHARS,
                      arena_from_strings, compute_stats, extract_key, lcp,
                      pack_keys, verify_sorted_permutation)

__all__ = [
    "Counters", "DatasetStats", "EmptyInput", "MkqsParConfig", "RadixConfig",
    "RunConfig", "SampleSortConfig", "StringArena", "VerificationFailed",
    "WORD_CHARS", "arena_from_strings", "compute_stats", "extract_key",
    "generate_dna", "generate_random", "insertion_sort", "lcp", "load_lines",
    "load_suffixes", "mkqs_cache_sort", "pack_keys", "parallel_mkqs_sort",
    "parallel_radix_sort", "parallel_sample_sort", "radix_sort_8bit",
    "run_benchmark", "sample_sort", "verify_sorted_permutation",
]
