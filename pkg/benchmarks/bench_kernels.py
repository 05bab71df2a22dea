"""Compiled kernels against the NumPy fallback.

Kernel timings call both implementations directly. The end-to-end timing
runs the spectral-rank workload in a subprocess per backend, since the
backend is fixed at import.

    python3 benchmarks/bench_kernels.py [--repeat N] [--elements N]
"""

from __future__ import annotations

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from pencilpres import _pykernels
from pencilpres.rank_trace import COEFF_TRUNCATION, _interpolation_data

try:
    from pencilpres import _ckernels
except ImportError:
    _ckernels = None

WORKLOAD = """
import time
from pencilpres.algebra import BlockAlgebra, random_rank_stratified
from pencilpres.kernels import BACKEND
from pencilpres.rank_trace import spectral_rank
rng = __import__("numpy").random.default_rng(0)
algebras = [BlockAlgebra(d) for d in ([2], [3], [4], [2, 3])]
elements = [random_rank_stratified(alg, rng) for alg in algebras for _ in range({n})]
t = time.perf_counter()
for a in elements:
    spectral_rank(a, trials=8, seed=0)
print(BACKEND, time.perf_counter() - t)
"""


def _kernel_cases(n: int, rng):
    y = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    nodes, vinv = _interpolation_data(n)
    mats = rng.standard_normal((64, n, n)) + 1j * rng.standard_normal((64, n, n))
    return {
        "batch_det(64)": lambda m: m.batch_det(mats),
        "det_poly_coeffs": lambda m: m.det_poly_coeffs(y, a, nodes, vinv),
        "pencil_roots": lambda m: m.pencil_roots(y, a, nodes, vinv, COEFF_TRUNCATION),
    }


def bench_kernels(repeat: int) -> None:
    rng = np.random.default_rng(0)
    print(f"{'kernel':<18}{'n':>4}{'python us':>12}{'cython us':>12}{'speedup':>9}")
    for n in (2, 3, 4, 8, 16):
        for name, call in _kernel_cases(n, rng).items():
            t_py = min(timeit.repeat(lambda: call(_pykernels), number=repeat, repeat=3)) / repeat * 1e6
            if _ckernels is None:
                print(f"{name:<18}{n:>4}{t_py:>12.1f}{'n/a':>12}{'':>9}")
                continue
            t_c = min(timeit.repeat(lambda: call(_ckernels), number=repeat, repeat=3)) / repeat * 1e6
            print(f"{name:<18}{n:>4}{t_py:>12.1f}{t_c:>12.1f}{t_py / t_c:>8.2f}x")


def bench_end_to_end(elements: int) -> None:
    code = WORKLOAD.format(n=elements)
    print(f"\nspectral_rank on {4 * elements} elements (M2, M3, M4, M2+M3), trials=8")
    for pure in ("0", "1"):
        env = dict(os.environ, PENCILPRES_PURE_PYTHON=pure)
        out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
        backend, seconds = out.stdout.split()
        print(f"  {backend:<8}{float(seconds):8.2f} s")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=2000)
    parser.add_argument("--elements", type=int, default=250)
    args = parser.parse_args()
    bench_kernels(args.repeat)
    bench_end_to_end(args.elements)


if __name__ == "__main__":
    main()
