"""Compare the compiled and pure-Python kernel backends.

    python benchmarks/bench_kernels.py [--steps 2000] [--order 8] [--repeat 5]

Prints the best-of-``repeat`` wall time per kernel and backend, the speedup,
and the largest elementwise difference between the two outputs.
"""

import argparse
import time

import numpy as np

from weakflow import _kernels_py
from weakflow.linalg import expm_hermitian

try:
    from weakflow import _kernels as _kernels_c
except ImportError:
    _kernels_c = None


def best_time(fn, repeat):
    best = np.inf
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def cases(steps, order, rng):
    h = rng.normal(size=(steps, 2, 2)) + 1j * rng.normal(size=(steps, 2, 2))
    h = 0.5 * (h + np.swapaxes(h.conj(), 1, 2)) * 0.05
    dt = 1.0 / steps
    u = expm_hermitian(h, dt)
    psi = np.array([np.cos(1.2), np.sin(1.2)], dtype=complex)
    g = -1j * dt * rng.normal(size=steps) * 0.05
    return {
        "cumulative_products": lambda k: k.cumulative_products(u),
        "apply_ordered": lambda k: k.apply_ordered(u, psi),
        "series_vector": lambda k: k.series_vector(-1j * dt * h, psi, order),
        "series_scalar": lambda k: k.series_scalar(g, order),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=2000)
    ap.add_argument("--order", type=int, default=8)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    if _kernels_c is None:
        print("compiled extension not built; run `pip install -e . --no-build-isolation`")
        return
    rng = np.random.default_rng(args.seed)
    print(f"steps={args.steps} order={args.order} repeat={args.repeat}")
    print(f"{'kernel':<22}{'python [s]':>12}{'cython [s]':>12}{'speedup':>10}{'max |diff|':>12}")
    for name, run in cases(args.steps, args.order, rng).items():
        tp, yp = best_time(lambda: run(_kernels_py), args.repeat)
        tc, yc = best_time(lambda: run(_kernels_c), args.repeat)
        diff = float(np.max(np.abs(np.asarray(yp) - np.asarray(yc))))
        print(f"{name:<22}{tp:>12.4g}{tc:>12.4g}{tp / tc:>10.1f}{diff:>12.2e}")


if __name__ == "__main__":
    main()
