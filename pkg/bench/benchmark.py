"""Time the compiled trajectory kernel against the numpy fallback.

    python bench/benchmark.py [--samples 50] [--T 300] [--repeat 3]
"""

import argparse
import time

import numpy as np

from redisgrowth import _kernels_py
from redisgrowth.econ import SCHEME_CODES
from redisgrowth.estimator import ensemble_draws
from redisgrowth.eta import PRESETS

try:
    from redisgrowth import _kernels
except ImportError:
    _kernels = None


def best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--samples", type=int, default=50)
    p.add_argument("--T", type=int, default=300)
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--N", type=int, nargs="+", default=[10, 100])
    args = p.parse_args()

    backends = [("python", _kernels_py.simulate_totals)]
    if _kernels is not None:
        backends.insert(0, ("cython", _kernels.simulate_totals))
    else:
        print("compiled kernel not built; timing the fallback only")

    spec = PRESETS["intermediate"]
    print(f"samples={args.samples} T={args.T}  (seconds per ensemble, best of {args.repeat})")
    print(f"{'N':>5} {'scheme':>13}" + "".join(f" {name:>10}" for name, _ in backends) + "   speedup  max rel diff")
    for n in args.N:
        draws = ensemble_draws(spec, n, args.T, 1, args.samples)
        for scheme, code in SCHEME_CODES.items():
            times, outs = [], []
            for _, fn in backends:
                times.append(best_of(lambda: fn(draws, code, 0.3, 0.2), args.repeat))
                outs.append(fn(draws, code, 0.3, 0.2)[0])
            speed = times[-1] / times[0] if len(times) > 1 else 1.0
            diff = float(np.max(np.abs(outs[0] / outs[-1] - 1.0)))
            print(f"{n:>5} {scheme:>13}" + "".join(f" {t:10.4f}" for t in times)
                  + f"   {speed:6.1f}x  {diff:.1e}")


if __name__ == "__main__":
    main()
