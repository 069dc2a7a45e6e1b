"""Compare the Cython and pure-Python kernel backends.

Times ILU(0) factorization, ILU(0) triangular solves and the Jacobi
eigensolver on both backends, then one full ADI solve per backend (run in
a subprocess, since the backend is fixed at import time).

    python3 benchmarks/bench_kernels.py [--grid 30] [--repeat 3]
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from lyapmix.kernels import BACKENDS
from lyapmix.precision import DOUBLE, SINGLE
from lyapmix.problems import heat_model
from lyapmix.sparse import as_csr, ilu0_factorize, shifted_transpose

ADI_SNIPPET = """
import time
from lyapmix.adi import ADIOptions, PrecisionTriple, adi_solve
from lyapmix.kernels import BACKEND
from lyapmix.problems import gramian_problem, heat_model
from lyapmix.shifts import penzl_shifts
s = heat_model(({g}, {g}))
shifts = penzl_shifts(s.E, s.A, 20, 20, 10, seed=0)
P = gramian_problem(s)
t0 = time.perf_counter()
F, trace = adi_solve(P, PrecisionTriple.from_label("{label}"), shifts, ADIOptions(record_explicit=False))
print(BACKEND, time.perf_counter() - t0, trace.iterations)
"""


def best_of(fn, repeat, number=1):
    return min(timeit.repeat(fn, repeat=repeat, number=number)) / number


def kernel_rows(grid, repeat):
    s = heat_model((grid, grid))
    rows = []
    for p in (DOUBLE, SINGLE):
        M = shifted_transpose(as_csr(s.A, p), as_csr(s.E, p), p.dtype.type(-0.5), p)
        b = np.ones(M.shape[0], dtype=p.dtype)
        times = {}
        for name in sorted(BACKENDS):
            pc = ilu0_factorize(M, backend=name)
            times[name] = (
                best_of(lambda: ilu0_factorize(M, backend=name), repeat),
                best_of(lambda: pc.solve(b, backend=name), repeat, number=20),
            )
        rows.append((f"ilu0 factor n={M.shape[0]} {p.label}", {k: v[0] for k, v in times.items()}))
        rows.append((f"ilu0 solve  n={M.shape[0]} {p.label}", {k: v[1] for k, v in times.items()}))
    rng = np.random.default_rng(0)
    for k in (10, 40):
        W = rng.standard_normal((k, k))
        S = (W + W.T) / 2
        times = {}
        for name, mod in sorted(BACKENDS.items()):
            def run():
                a, v = S.copy(), np.eye(k)
                mod.jacobi_eigh(a, v, 10 * np.finfo(float).eps * np.linalg.norm(S), 30)

            times[name] = best_of(run, repeat)
        rows.append((f"jacobi k={k}", times))
    return rows


def adi_rows(grid, label):
    times = {}
    for name in sorted(BACKENDS):
        env = dict(os.environ, LYAPMIX_KERNELS=name)
        out = subprocess.run(
            [sys.executable, "-c", ADI_SNIPPET.format(g=grid, label=label)],
            env=env, capture_output=True, text=True, check=True,
        ).stdout.split()
        times[out[0]] = float(out[1])
    return [(f"adi {label} heat2d:{grid}x{grid}", times)]


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--grid", type=int, default=30, help="2-D heat grid side length")
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--no-adi", action="store_true", help="skip the end-to-end ADI timing")
    args = parser.parse_args(argv)

    names = sorted(BACKENDS)
    rows = kernel_rows(args.grid, args.repeat)
    if not args.no_adi:
        rows += adi_rows(args.grid, "DDD") + adi_rows(args.grid, "SSS")
    width = max(len(r[0]) for r in rows)
    print(f"{'case':<{width}}  " + "  ".join(f"{n:>12}" for n in names) + "  speedup")
    for case, times in rows:
        cells = "  ".join(f"{times[n] * 1e3:10.3f}ms" for n in names)
        speed = times["python"] / times["cython"] if "cython" in times else float("nan")
        print(f"{case:<{width}}  {cells}  {speed:7.1f}x")


if __name__ == "__main__":
    main()
