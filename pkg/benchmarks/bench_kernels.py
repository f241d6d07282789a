"""Compare the compiled transfer-block kernels with the pure-Python fallback.

    python benchmarks/bench_kernels.py [--pieces 100000] [--repeat 5]

Also times one end-to-end witness run (m = 3 of the default Liouville preset)
with each backend by swapping the module the selector points at.
"""

import argparse
import importlib
import time
from fractions import Fraction

import numpy as np


def best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--pieces", type=int, default=100_000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    py = importlib.import_module("gordonlab._kernels_py")
    try:
        cy = importlib.import_module("gordonlab._kernels")
    except ImportError:
        cy = None
        print("compiled extension not built; only the fallback is timed")

    rng = np.random.default_rng(0)
    lengths = rng.uniform(0.01, 0.5, args.pieces)
    w = rng.uniform(-4.0, 4.0, args.pieces)

    rows = []
    for name in ("transfer_product", "propagate_pc", "trajectory_pc"):
        def call(mod, name=name, n=args.pieces):
            f = getattr(mod, name)
            return f(lengths[:n], w[:n]) if name == "transfer_product" else f(lengths[:n], w[:n], 1.0, 0.0)

        t_py = best_of(lambda: call(py), args.repeat)
        t_cy = best_of(lambda: call(cy), args.repeat) if cy else float("nan")
        if cy:
            # long random products overflow, so parity is checked on a prefix
            a, b = call(py, n=200), call(cy, n=200)
            err = max(float(np.max(np.abs(np.asarray(x) - np.asarray(y)) / np.maximum(1.0, np.abs(np.asarray(x))))) for x, y in zip(a, b))
        else:
            err = float("nan")
        rows.append((name, t_py, t_cy, err))

    print(f"{args.pieces} pieces, best of {args.repeat}")
    print(f"{'kernel':<18}{'python [s]':>12}{'cython [s]':>12}{'speedup':>10}{'max rel diff':>14}")
    for name, t_py, t_cy, err in rows:
        print(f"{name:<18}{t_py:>12.4f}{t_cy:>12.4f}{t_py / t_cy:>10.1f}{err:>14.1e}")

    from gordonlab import kernels, nodecay, preset
    from gordonlab.potentials import ZERO, QuasiPotential, Step

    q = QuasiPotential(ZERO, Step((0, Fraction(1, 2)), (1, 0)), preset("liouville-default"))
    for label, mod in (("python", py), ("cython", cy)):
        if mod is None:
            continue
        for fn in ("block", "transfer_product", "propagate_pc", "trajectory_pc"):
            setattr(kernels, fn, getattr(mod, fn))
        t = best_of(lambda: nodecay.witness_run(q, 0.5, [3], sample_density=64, verify=False), max(1, args.repeat // 2))
        print(f"witness run m=3, density 64, {label:>6} kernels: {t:.3f} s")


if __name__ == "__main__":
    main()
