#!/usr/bin/env python3
"""Benchmark the pure NumPy kernels against the compiled extension.

Each hot kernel runs on representative grid sizes in both lanes (when
the compiled extension is available) and the table reports the median
per-call time plus the speedup. Lanes are imported directly, so the
ECOLISIM_KERNELS selection does not matter here; it only decides which
lane the package itself uses, shown in the footer for reference.

Run from the repository root after an editable install:

    python3 benchmarks/bench_kernels.py
    python3 benchmarks/bench_kernels.py --size 512 --repeat 9
"""

import argparse
import time

import numpy as np

from ecolisim._kernels import BACKEND as SELECTED
from ecolisim._kernels import _numpy_impl

try:
    from ecolisim._kernels import _speedups
except ImportError:
    _speedups = None


def median_time(fn, args, repeat, number):
    """Median over ``repeat`` trials of the mean per-call time."""
    trials = []
    fn(*args)  # warm-up, also catches signature mismatches early
    for _ in range(repeat):
        t0 = time.perf_counter()
        for _ in range(number):
            fn(*args)
        trials.append((time.perf_counter() - t0) / number)
    return float(np.median(trials))


def build_cases(size, rng):
    n2 = size * size
    f1 = rng.standard_normal(4 * n2)
    u1 = np.abs(rng.standard_normal(4 * n2)) + 0.1
    f2 = rng.standard_normal((size, size))
    u2 = np.abs(rng.standard_normal((size, size))) + 0.1
    h = 1.0 / size

    n = size
    dl = np.full(n, -0.4)
    d = np.full(n, 2.1)
    du = np.full(n, -0.4)
    rhs = rng.standard_normal((n, n))

    return [
        ("laplacian_1d", f"n={4 * n2}", "laplacian_1d", (f1, 1.0 / h**2)),
        ("laplacian_2d", f"{size}x{size}", "laplacian_2d", (f2, 1.0 / h**2, 1.0 / h**2)),
        ("chemo_div_1d", f"n={4 * n2}", "chemo_div_1d", (u1, f1, h)),
        ("chemo_div_2d", f"{size}x{size}", "chemo_div_2d", (u2, f2, h, h)),
        ("max_face_speed_2d", f"{size}x{size}", "max_face_speed_2d", (f2, h, h)),
        ("tridiag_solve", f"n={n}, {n} rhs", "tridiag_solve", (dl, d, du, rhs)),
    ]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=256, help="grid edge length (default 256)")
    ap.add_argument("--repeat", type=int, default=7, help="timing trials per case (default 7)")
    ap.add_argument("--number", type=int, default=20, help="calls per trial (default 20)")
    ap.add_argument("--seed", type=int, default=0, help="input data seed (default 0)")
    args = ap.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    cases = build_cases(args.size, rng)

    header = f"{'kernel':<20} {'shape':<14} {'numpy':>12} {'compiled':>12} {'speedup':>9} {'max diff':>10}"
    print(header)
    print("-" * len(header))
    for label, shape, name, fn_args in cases:
        np_fn = getattr(_numpy_impl, name)
        t_np = median_time(np_fn, fn_args, args.repeat, args.number)
        if _speedups is None:
            print(f"{label:<20} {shape:<14} {t_np * 1e6:>10.1f}us {'-':>12} {'-':>9} {'-':>10}")
            continue
        c_fn = getattr(_speedups, name)
        t_c = median_time(c_fn, fn_args, args.repeat, args.number)
        ref = np.asarray(np_fn(*fn_args))
        got = np.asarray(c_fn(*fn_args))
        diff = float(np.max(np.abs(ref - got))) if ref.shape else float(abs(ref - got))
        print(
            f"{label:<20} {shape:<14} {t_np * 1e6:>10.1f}us {t_c * 1e6:>10.1f}us "
            f"{t_np / t_c:>8.2f}x {diff:>10.2e}"
        )

    if _speedups is None:
        print("\ncompiled extension not built; only the numpy lane was timed")
    print(f"package-selected backend: {SELECTED}")


if __name__ == "__main__":
    main()
