"""Command line interface.

    strsort sort <algo> [--threads P[,P...]] (--input FILE [--suffix] | --random N | --dna N)
                 [--seed S] [--reps R] [--csv OUT]
                 [--v V] [--alpha A] [--tm T] [--ti T] [--block-size B]
                 [--radix-bits {8,16}] [--classifier {unroll,equal}] [--interleave K]

``<algo>`` is one of the registry names (or a comma list, or ``all``);
the default thread count comes from $STRSORT_THREADS.  Exit code is 0
only when every run verifies.
"""

from __future__ import annotations

import argparse
import os
import sys

from .harness import (ALGORITHMS, THREADS_ENV, RunConfig, VerificationFailed,
                      run_benchmark)


def _int_list(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="strsort",
                                     description="parallel string sorting benchmark")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("sort", help="run sorters on a dataset and verify output")
    p.add_argument("algo", help="algorithm id, comma list, or 'all': "
                                + ", ".join(ALGORITHMS))
    p.add_argument("--threads", default=None,
                   help=f"worker counts, comma list (default ${THREADS_ENV} or 1)")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--input", metavar="FILE", help="newline-delimited text file")
    src.add_argument("--random", type=int, metavar="N", help="generated random strings")
    src.add_argument("--dna", type=int, metavar="N", help="generated DNA 9-mers")
    p.add_argument("--suffix", action="store_true",
                   help="sort all suffixes of the input file")
    p.add_argument("--max-n", type=int, default=None,
                   help="suffix mode: cap the number of suffixes")
    p.add_argument("--dna-len", type=int, default=9)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--reps", type=int, default=1)
    p.add_argument("--csv", metavar="OUT", default=None)
    p.add_argument("--v", type=int, default=8191, help="splitters per step")
    p.add_argument("--alpha", type=int, default=2, help="oversampling factor")
    p.add_argument("--tm", type=int, default=64 * 1024,
                   help="sequential sample-sort threshold")
    p.add_argument("--ti", type=int, default=64, help="insertion-sort threshold")
    p.add_argument("--block-size", type=int, default=128 * 1024,
                   help="parallel mkqs block size in entries")
    p.add_argument("--radix-bits", type=int, choices=(8, 16), default=8)
    p.add_argument("--classifier", choices=("unroll", "equal"), default="unroll")
    p.add_argument("--interleave", type=int, default=3)
    return parser


def _config_from_args(args) -> RunConfig:
    algos = ALGORITHMS[:] if args.algo == "all" else args.algo.split(",")
    for a in algos:
        if a not in ALGORITHMS and a not in ("par_samplesort", "par_radix"):
            raise SystemExit(f"unknown algorithm {a!r}; choose from {ALGORITHMS}")
    if args.threads is not None:
        workers = _int_list(args.threads)
    else:
        workers = _int_list(os.environ.get(THREADS_ENV, "1"))
    if not workers or min(workers) < 1:
        raise SystemExit("worker counts must be >= 1")
    cfg = RunConfig(algorithms=algos, workers=workers, seed=args.seed,
                    reps=max(1, args.reps), csv_path=args.csv, v=args.v,
                    alpha=args.alpha, t_m=args.tm, t_i=args.ti,
                    block_size=args.block_size, radix_bits=args.radix_bits,
                    classifier=args.classifier, interleave=args.interleave)
    if args.input is not None:
        cfg.dataset = "file"
        cfg.path = args.input
        cfg.suffix = args.suffix
        cfg.max_n = args.max_n
    elif args.dna is not None:
        cfg.dataset = "dna"
        cfg.n = args.dna
        cfg.dna_length = args.dna_len
    else:
        cfg.dataset = "random"
        cfg.n = args.random
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    cfg = _config_from_args(args)
    try:
        run_benchmark(cfg, out=sys.stdout)
    except VerificationFailed as exc:
        print(f"VERIFICATION FAILED: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
