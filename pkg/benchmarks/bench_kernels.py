"""Timing table: compiled kernels vs the pure-NumPy fallback.

Usage: python3 benchmarks/bench_kernels.py [--repeats 7]

Both backends are imported side by side, so one process measures both; an
end-to-end CLI timing under each DICTLAB_BACKEND setting closes the table.
"""

import argparse
import os
import statistics
import subprocess
import sys
import time

import numpy as np

from dictlab import _kernels_py

try:
    from dictlab import _kernels
except ImportError:
    _kernels = None

from dictlab.boolfn import BooleanFunction, MultilinearPoly, wht
from dictlab.distribution import build_D


def timeit(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times)


def build_cases(rng):
    """(name, setup-result, callable-factory) per kernel, sized to ~10 ms."""
    dist = build_D(7, "1/49")
    thr_hi, thr_lo = dist.thresholds_128()
    atom_bits = dist.atom_bits_array()
    f = BooleanFunction.random_folded(10, rng)
    hi = rng.integers(0, 1 << 64, size=(200_000, 10), dtype=np.uint64)
    lo = rng.integers(0, 1 << 64, size=(200_000, 10), dtype=np.uint64)
    atoms = _kernels_py.sample_atoms(hi, lo, thr_hi, thr_lo)
    patterns = _kernels_py.patterns_from_atoms(atoms, atom_bits, f.values, 7)
    member = dist.predicate.accepting
    int_table = rng.integers(-1, 2, size=1 << 20).astype(np.int64)
    float_table = rng.standard_normal(1 << 20)
    poly = MultilinearPoly.random(12, 4, rng, unit_norm=True)
    masks, coefs = poly.terms()
    points = rng.standard_normal((20_000, 12))

    def case(name, make):
        return name, make

    return [
        case("wht_int64 (2^20)", lambda m: lambda: m.wht_int64(int_table.copy())),
        case("wht_float64 (2^20)", lambda m: lambda: m.wht_float64(float_table.copy())),
        case(
            "sample_atoms (200k x 10)",
            lambda m: lambda: m.sample_atoms(hi, lo, thr_hi, thr_lo),
        ),
        case(
            "patterns_from_atoms (200k x 10)",
            lambda m: lambda: m.patterns_from_atoms(atoms, atom_bits, f.values, 7),
        ),
        case(
            "accept_count (200k)",
            lambda m: lambda: m.accept_count(patterns, member),
        ),
        case(
            "eval_terms_batch (20k x 794 terms)",
            lambda m: lambda: m.eval_terms_batch(points, masks, coefs),
        ),
    ]


def end_to_end(backend):
    env = dict(os.environ, DICTLAB_BACKEND=backend)
    args = [
        sys.executable, "-m", "dictlab.cli", "test", "run",
        "--fn", "builtin:random:1", "--n", "10",
        "--trials", "200000", "--seed", "0",
    ]
    t0 = time.perf_counter()
    out = subprocess.run(args, env=env, capture_output=True, text=True)
    elapsed = time.perf_counter() - t0
    if out.returncode != 0:
        raise RuntimeError(out.stderr)
    return elapsed, out.stdout


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeats", type=int, default=7)
    args = parser.parse_args()
    rng = np.random.default_rng(0)

    if _kernels is None:
        print("compiled backend unavailable; showing the fallback only\n")

    width = 36
    header = f"{'kernel':<{width}} {'python':>10} {'cython':>10} {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for name, make in build_cases(rng):
        py = timeit(make(_kernels_py), args.repeats)
        if _kernels is not None:
            cy = timeit(make(_kernels), args.repeats)
            print(
                f"{name:<{width}} {py * 1e3:>8.2f}ms {cy * 1e3:>8.2f}ms"
                f" {py / cy:>7.1f}x"
            )
        else:
            print(f"{name:<{width}} {py * 1e3:>8.2f}ms {'-':>10} {'-':>8}")

    if _kernels is not None:
        print()
        t_py, out_py = end_to_end("python")
        t_cy, out_cy = end_to_end("cython")
        label = "end-to-end CLI run (200k trials)"
        print(
            f"{label:<{width}} {t_py:>8.2f}s  {t_cy:>8.2f}s "
            f" {t_py / t_cy:>6.1f}x"
        )
        print(
            "outputs byte-identical across backends:",
            out_py == out_cy,
        )


if __name__ == "__main__":
    main()
