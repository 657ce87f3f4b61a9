"""Compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--sizes 64,128,256] [--grid 1024] [--repeat 3]

For each kernel the best wall time over ``--repeat`` runs is reported for
both backends, together with the speedup and the largest difference between
their outputs. Without the compiled extension only the fallback column is
filled.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from finslerlab._core import _fallback
from finslerlab.czindex import LinearizedPath, cz_spectrum, discretize
from finslerlab.numerics import linalg

try:
    from finslerlab._core import _kernels as compiled
except ImportError:  # pragma: no cover - depends on the build
    compiled = None


def best_time(fn, repeat: int):
    out, best = None, np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def with_backend(mod, fn):
    """Run ``fn`` with the linalg module bound to the given kernel module."""
    saved = linalg.kernels
    linalg.kernels = mod
    try:
        return fn()
    finally:
        linalg.kernels = saved


def cases(sizes, grid):
    rng = np.random.default_rng(0)
    for n in sizes:
        a = rng.standard_normal((n, n))
        a = np.ascontiguousarray(a + a.T)
        yield f"dense_eigh n={n}", lambda a=a: np.asarray(linalg.kernels.dense_eigh(a)[0])
    op = discretize(LinearizedPath.constant(1.0, 4 * np.pi), grid)
    sig = np.linspace(-3.0, 3.0, 64)
    yield (f"periodic_count 2N={2 * grid} x64",
           lambda: np.asarray(op.count_below(sig), dtype=float))
    yield (f"eigenvalues_in 2N={2 * grid}",
           lambda: op.eigenvalues_in(-2.0, 2.0)[0])
    path = LinearizedPath.constant(1.0, 4 * np.pi)
    yield (f"cz_spectrum N={grid}",
           lambda: cz_spectrum(path, 6, grid).tau)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="64,128,256")
    ap.add_argument("--grid", type=int, default=1024)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    sizes = [int(s) for s in args.sizes.split(",")]
    print(f"{'kernel':34s} {'fallback [s]':>13s} {'cython [s]':>11s} {'speedup':>8s} {'max diff':>10s}")
    for name, fn in cases(sizes, args.grid):
        t_py, out_py = with_backend(_fallback, lambda: best_time(fn, args.repeat))
        if compiled is None:
            print(f"{name:34s} {t_py:13.4f} {'-':>11s} {'-':>8s} {'-':>10s}")
            continue
        t_c, out_c = with_backend(compiled, lambda: best_time(fn, args.repeat))
        diff = float(np.abs(np.asarray(out_py) - np.asarray(out_c)).max())
        print(f"{name:34s} {t_py:13.4f} {t_c:11.4f} {t_py / t_c:8.1f} {diff:10.2e}")


if __name__ == "__main__":
    main()
