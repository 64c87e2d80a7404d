#!/usr/bin/env python3
"""Benchmark the compiled matching kernel against the pure-Python fallback.

The per-dimple matcher is the inner loop of every judged trial; headless
studies run it tens of thousands of times.  Usage:

    python benchmarks/bench_matching.py [--sizes 1000,10000,100000] [--repeat 5]
"""

import argparse
import random
import timeit

from pantrainer._matchpy import match_sorted as match_py

try:
    from pantrainer._matchcore import match_sorted as match_c
except ImportError:
    match_c = None


def make_instance(rng: random.Random, n: int):
    span = n * 120
    onsets = sorted(rng.randrange(span) for _ in range(n))
    times = sorted(rng.randrange(-200, span + 200) for _ in range(int(n * 1.2)))
    return onsets, times, 150


def bench(fn, instance, repeat: int) -> float:
    onsets, times, window = instance
    timer = timeit.Timer(lambda: fn(onsets, times, window))
    loops = max(1, int(2_000_000 / max(len(onsets), 1)))
    return min(timer.repeat(repeat, loops)) / loops


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", default="1000,10000,100000")
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]

    rng = random.Random(0)
    print(f"{'notes':>8}  {'python':>12}  {'compiled':>12}  {'speedup':>8}")
    for n in sizes:
        instance = make_instance(rng, n)
        t_py = bench(match_py, instance, args.repeat)
        if match_c is None:
            print(f"{n:>8}  {t_py * 1e3:>10.3f}ms  {'(not built)':>12}  {'-':>8}")
            continue
        t_c = bench(match_c, instance, args.repeat)
        assert match_c(*instance) == match_py(*instance)
        print(f"{n:>8}  {t_py * 1e3:>10.3f}ms  {t_c * 1e3:>10.3f}ms  "
              f"{t_py / t_c:>7.1f}x")


if __name__ == "__main__":
    main()
