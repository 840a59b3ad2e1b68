"""Time the compiled kernels against the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--repeat N] [--quick]

Each kernel runs on the same inputs through both backends; outputs are
compared before timing so a speedup never hides a divergence.
"""

from __future__ import annotations

import argparse
import sys
import timeit

import numpy as np

from rangzen import _core


def cases(scale: float):
    rng = np.random.default_rng(0)
    n_pts = int(400 * scale) or 2
    x, y = rng.uniform(0, 2000, n_pts), rng.uniform(0, 2000, n_pts)
    n_c = int(20_000 * scale) or 10
    ct = np.sort(rng.uniform(0, 1e4, n_c))
    cu = rng.integers(0, 60, n_c).astype(np.int64)
    cv = ((cu + rng.integers(1, 60, n_c)) % 60).astype(np.int64)
    n_ev = int(200_000 * scale) or 10
    ax, ay, bx, by = (rng.uniform(0, 2000, n_ev) for _ in range(4))
    rec = np.linspace(0, 50, 51)
    n_e = int(2000 * scale) or 10
    return {
        "uniform_stream": lambda k: k.uniform_stream(42, int(100_000 * scale) or 10),
        "gillespie_lux": lambda k: k.gillespie_lux(n_e, 0, 0, 1.0, 0.5, 0.5, 50.0, 7, rec),
        "range_pairs": lambda k: k.range_pairs(x, y, 20.0),
        "temporal_hops": lambda k: k.temporal_hops(60, 0, 0.0, ct, cu, cv, 64),
        "cover_mask": lambda k: k.cover_mask(ax, ay, bx, by, 1000.0, 1000.0, 250.0),
    }


def _same(a, b) -> bool:
    if isinstance(a, tuple):
        return len(a) == len(b) and all(_same(p, q) for p, q in zip(a, b))
    if isinstance(a, np.ndarray) or isinstance(b, np.ndarray):
        return np.array_equal(np.asarray(a), np.asarray(b))
    return a == b


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3, help="best of N timings")
    ap.add_argument("--quick", action="store_true", help="small inputs (smoke run)")
    args = ap.parse_args(argv)
    if _core.compiled is None:
        print("compiled kernels are not built; nothing to compare", file=sys.stderr)
        return 1
    scale = 0.05 if args.quick else 1.0
    print(f"{'kernel':<16}{'compiled s':>12}{'python s':>12}{'speedup':>10}")
    for name, fn in cases(scale).items():
        if not _same(fn(_core.compiled), fn(_core.pure)):
            print(f"{name}: backends disagree", file=sys.stderr)
            return 1
        tc = min(timeit.repeat(lambda: fn(_core.compiled), number=1, repeat=args.repeat))
        tp = min(timeit.repeat(lambda: fn(_core.pure), number=1, repeat=args.repeat))
        print(f"{name:<16}{tc:>12.5f}{tp:>12.5f}{tp / tc:>9.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
