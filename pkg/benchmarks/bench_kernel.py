"""Time one controller evaluation on each available simulation backend.

    python benchmarks/bench_kernel.py [--duration 20] [--repeats 5]
"""
import argparse
import time

import numpy as np

from gaitevo.genome import decode
from gaitevo.kernel import BACKENDS
from gaitevo.sim import run_evaluation


def best_time(params, duration, repeats, backend):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        run_evaluation(params, duration=duration, seed=0, backend=backend)
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--duration", type=float, default=20.0, help="simulated seconds per evaluation")
    ap.add_argument("--repeats", type=int, default=5, help="timed repetitions per backend (best is kept)")
    args = ap.parse_args(argv)

    results = {}
    for mode in ("open", "closed"):
        params = decode(np.full(10, 0.5), mode)
        for name in sorted(BACKENDS):
            # the pure-Python port is slow; one repetition is enough to rank it
            reps = args.repeats if name != "python" else 1
            results[mode, name] = best_time(params, args.duration, reps, name)

    print(f"{'mode':<8}{'backend':<10}{'seconds':>10}{'steps/s':>14}")
    steps = args.duration / 0.002
    for (mode, name), t in results.items():
        print(f"{mode:<8}{name:<10}{t:>10.4f}{steps / t:>14,.0f}")
    if "cython" in BACKENDS:
        for mode in ("open", "closed"):
            print(f"{mode}: compiled speed-up x{results[mode, 'python'] / results[mode, 'cython']:.0f}")


if __name__ == "__main__":
    main()
