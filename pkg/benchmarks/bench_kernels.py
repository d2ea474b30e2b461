"""Compare the numba and numpy flavours of the hot kernels.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--size 200000]

Each kernel is warmed up once (numba compiles or loads its cache), then
timed ``--repeat`` times; the best wall time is reported with the
max-abs disagreement between the two backends.
"""
import argparse
import time

import numpy as np

from curvgrf import _kernels
from curvgrf.corrmodel import CorrelationModel, constants
from curvgrf.covariance import build_bundle


def best_of(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases(size, rng):
    raw = rng.integers(0, 2**64, size=(size, 8), dtype=np.uint64)
    yield "box_muller", lambda be: _kernels.box_muller(raw, be)

    n = 3
    bundle = build_bundle(n, constants(CorrelationModel()))
    chol = np.linalg.cholesky(bundle.sigma_n)
    z = rng.standard_normal((size, 9))
    yield "affine_jets n=3", lambda be: _kernels.affine_jets(z, 1.0, chol, n, be)

    for n in (2, 3, 4):
        G = rng.standard_normal((size, n))
        A = rng.standard_normal((size, n, n))
        H = A + np.swapaxes(A, 1, 2)
        yield f"curvatures n={n}", (lambda G, H: lambda be: _kernels.curvatures(G, H, be))(G, H)

    side = int(np.sqrt(size))
    f = rng.standard_normal((side, side))
    yield f"grid_jets {side}x{side}", lambda be: _kernels.grid_jets(f, 0.1, be)


def _max_diff(a, b):
    if isinstance(a, tuple):
        return max(_max_diff(x, y) for x, y in zip(a, b))
    return float(np.max(np.abs(a - b)))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--size", type=int, default=200_000)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    print(f"{'kernel':<22}{'numpy [ms]':>12}{'numba [ms]':>12}{'speedup':>9}{'max |diff|':>12}")
    for name, fn in cases(args.size, rng):
        t_np = best_of(lambda: fn("numpy"), args.repeat)
        t_nb = best_of(lambda: fn("numba"), args.repeat)
        diff = _max_diff(fn("numpy"), fn("numba"))
        print(f"{name:<22}{1e3 * t_np:>12.2f}{1e3 * t_nb:>12.2f}{t_np / t_nb:>9.2f}{diff:>12.2e}")


if __name__ == "__main__":
    main()
