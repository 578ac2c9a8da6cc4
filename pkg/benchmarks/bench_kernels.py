"""Compare the compiled kernel backend against the NumPy fallback.

Usage: python benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import time

import numpy as np

from gramscope import kernels
from gramscope.kernels import _pykernels


def timeit(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    B = rng.standard_normal((120, 120))
    sym = B + B.T
    P = rng.standard_normal((200_000, 16))
    x = rng.standard_normal(3200)

    cases = [
        ("jacobi_eigh (n=120)", lambda impl: impl.jacobi_eigh(sym)),
        ("gram_accumulate (2e5 x 16)", lambda impl: impl.gram_accumulate(P)),
        ("hermite_design (p=120, 3200 pts)", lambda impl: impl.hermite_design(x, 120)),
    ]

    backends = [("numpy", _pykernels)]
    if kernels.BACKEND == "cython":
        from gramscope.kernels import _ckernels

        backends.append(("cython", _ckernels))
    else:
        print("compiled backend not built; benchmarking the fallback only")

    print(f"active backend: {kernels.BACKEND}\n")
    header = f"{'kernel':36s}" + "".join(f"{name:>12s}" for name, _ in backends)
    if len(backends) == 2:
        header += f"{'speedup':>10s}"
    print(header)
    for label, call in cases:
        times = [timeit(lambda impl=impl: call(impl), args.repeat) for _, impl in backends]
        row = f"{label:36s}" + "".join(f"{t * 1e3:10.1f}ms" for t in times)
        if len(times) == 2:
            row += f"{times[0] / times[1]:9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
