"""Compare the compiled kernels against the NumPy fallback.

Usage::

    python benchmarks/bench_kernels.py [--repeat 5] [--no-end-to-end]

Prints per-call timings for each kernel on both backends, then the wall time
of one cubature build run once per backend in a fresh interpreter.
"""
import argparse
import os
import subprocess
import sys
import time
import timeit

import numpy as np

from specweight import _kernels_py as py
from specweight import builtins as bi
from specweight import cubature as cb
from specweight.orthogonalization import gram_schmidt

try:
    from specweight import _kernels as cy
except ImportError:
    cy = None

END_TO_END = """
import time
from specweight import builtins as bi, cubature as cb, kernels
from specweight.orthogonalization import gram_schmidt
e = bi.weight_entry("indicator2d")
b = gram_schmidt(e.weight, e.domain, 4)
t = time.perf_counter()
cb.build_rule(b, cb.OptimizerConfig(seed=1, restarts=4), 15)
print(kernels.BACKEND, time.perf_counter() - t)
"""


def cases(rng):
    e = bi.weight_entry("indicator2d")
    b = gram_schmidt(e.weight, e.domain, 6)
    fixed = b.domain.sample(rng, 20)
    seq = cb._Sequential(b, fixed, cb.TIE_BREAK)
    x = b.domain.sample(rng, 1)[0]
    t = rng.uniform(-1, 1, 2000)
    tabs = [py.legendre_table(rng.uniform(-1, 1, 2000), 12) for _ in range(2)]
    from specweight.polycore import enumerate_multi_indices
    exps = np.ascontiguousarray(enumerate_multi_indices(2, 12).exps, dtype=np.intp)
    return {
        "power_table(2000, 12)": lambda m: m.power_table(t, 12),
        "legendre_table(2000, 12)": lambda m: m.legendre_table(t, 12),
        "product_matrix(2000 x 91)": lambda m: m.product_matrix(tabs, exps),
        "point_basis(21 rows)": lambda m: m.point_basis(x, seq.lo, seq.hi, seq.exps, seq.coeffs, seq.q.shape[0]),
        "seq_objective(21 points)": lambda m: m.seq_objective(x, seq.lo, seq.hi, seq.exps, seq.coeffs, seq.q,
                                                              seq.V, seq.u, seq.s, seq.reg),
    }


def bench(fn, repeat):
    n, _ = timeit.Timer(fn).autorange()
    return min(timeit.repeat(fn, number=n, repeat=repeat)) / n


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--no-end-to-end", action="store_true")
    args = ap.parse_args(argv)
    if cy is None:
        print("compiled extension not built; only the fallback is timed")
    print(f"{'kernel':28s} {'python':>12s} {'cython':>12s} {'speedup':>8s}")
    for name, call in cases(np.random.default_rng(0)).items():
        tp = bench(lambda: call(py), args.repeat)
        if cy is None:
            print(f"{name:28s} {tp * 1e6:10.2f}us")
            continue
        tc = bench(lambda: call(cy), args.repeat)
        print(f"{name:28s} {tp * 1e6:10.2f}us {tc * 1e6:10.2f}us {tp / tc:7.1f}x")
    if args.no_end_to_end:
        return
    print("\nend to end: 15-point rule on the 2D indicator weight, degree 4")
    for pure in ("1", "0"):
        t = time.perf_counter()
        out = subprocess.run([sys.executable, "-c", END_TO_END], env={**os.environ, "SPECWEIGHT_PURE": pure},
                             capture_output=True, text=True, check=True).stdout.split()
        print(f"  {out[0]:8s} build {float(out[1]):7.2f}s (process {time.perf_counter() - t:.2f}s)")


if __name__ == "__main__":
    main()
