"""Time the numba kernels against the pure-numpy reference path.

    python3 benchmarks/bench_paths.py [--d 30] [--days 5000] [--k 5] [--repeat 3]
"""

import argparse
import time

import numpy as np

from fgleak import _accel
from fgleak.engine import run_strategy
from fgleak.market_data import atlas_config, synthesize_panel


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--d", type=int, default=30)
    ap.add_argument("--days", type=int, default=5000)
    ap.add_argument("--k", type=int, default=5)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if not _accel.NUMBA_ENABLED:
        raise SystemExit("numba is disabled (FGLEAK_DISABLE_NUMBA set or numba missing)")

    cfg = atlas_config(args.d, args.days, seed=0)
    panel = synthesize_panel(cfg)
    # compile (or load from cache) before timing
    synthesize_panel(atlas_config(args.d, 10, seed=0), accelerate=True)
    for mode in ("multiplicative", "additive"):
        run_strategy(panel, args.k, mode, accelerate=True)

    rows = [("synthesize_panel", lambda acc: synthesize_panel(cfg, accelerate=acc))]
    for mode in ("multiplicative", "additive"):
        rows.append((f"run_strategy {mode}", lambda acc, m=mode: run_strategy(panel, args.k, m, accelerate=acc)))

    print(f"d={args.d} days={args.days} k={args.k}, best of {args.repeat}")
    print(f"{'task':<32}{'numba (s)':>12}{'numpy (s)':>12}{'speedup':>10}")
    for name, fn in rows:
        fast = best_of(lambda: fn(True), args.repeat)
        slow = best_of(lambda: fn(False), args.repeat)
        print(f"{name:<32}{fast:>12.4f}{slow:>12.4f}{slow / fast:>9.0f}x")

    a = run_strategy(panel, args.k, "multiplicative", accelerate=True)
    b = run_strategy(panel, args.k, "multiplicative", accelerate=False)
    print(f"max |logV difference| between paths: {np.max(np.abs(a.log_wealth - b.log_wealth)):.2e}")


if __name__ == "__main__":
    main()
