"""Compare the numba and numpy backends of the oracle scoring kernel.

    python3 benchmarks/bench_kernels.py [--repeat R]
"""

import argparse
import time

import numpy as np

from chorex._kernels import score_assignments

CASES = [(2, 14, False), (3, 9, False), (3, 8, True), (4, 8, False)]


def timed(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    # compile once outside the timings
    score_assignments(np.ones((2, 2, 2), dtype=np.int64), 4, jit=True)
    print(f"{'n':>2} {'cells':>5} {'partial':>7} {'assignments':>11} {'numba s':>9} {'numpy s':>9} {'speedup':>7}")
    for n, c, partial in CASES:
        vals = rng.integers(0, 1000, size=(n, n, c)).astype(np.int64)
        scale = int(vals.sum(axis=(1, 2)).max())
        t_jit, (c1, f1) = timed(lambda: score_assignments(vals, scale, partial=partial, jit=True), args.repeat)
        t_np, (c2, f2) = timed(lambda: score_assignments(vals, scale, partial=partial, jit=False), args.repeat)
        assert np.array_equal(c1, c2) and np.array_equal(f1, f2), "backends disagree"
        print(f"{n:>2} {c:>5} {str(partial):>7} {len(c1):>11} {t_jit:>9.4f} {t_np:>9.4f} {t_np / t_jit:>7.1f}")


if __name__ == "__main__":
    main()
