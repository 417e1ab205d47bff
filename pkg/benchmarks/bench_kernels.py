"""Compare the compiled and numpy sweep kernels, and time a full resolvent apply.

    python3 benchmarks/bench_kernels.py [--K 256] [--M 1024] [--repeat 5]
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from hinfbvp import kernels


def sweep_inputs(K, M, seed=0):
    rng = np.random.default_rng(seed)
    kp = 0.5 + 5 * rng.random(K) + 1j * rng.standard_normal(K)
    km = 0.5 + 5 * rng.random(K) + 1j * rng.standard_normal(K)
    x = np.linspace(0.0, 8.0, M)
    f = rng.standard_normal((K, M)) + 1j * rng.standard_normal((K, M))
    return kp, km, x, f, kernels.bubble_coefficients(x, f)


def bench_sweeps(K, M, repeat):
    args = sweep_inputs(K, M)
    rows = []
    for name, fn in kernels.available_backends().items():
        t = min(timeit.repeat(lambda: fn(*args), number=1, repeat=repeat))
        rows.append((name, t))
    ref = kernels.available_backends()["python"](*args)
    for name, fn in kernels.available_backends().items():
        F, B = fn(*args)
        err = max(np.abs(F - ref[0]).max(), np.abs(B - ref[1]).max())
        print(f"{name:>9}: {1e3 * dict(rows)[name]:9.2f} ms   max |diff| vs numpy {err:.1e}", flush=True)
    if len(rows) == 2:
        print(f"speed-up: {rows[0][1] / rows[1][1]:.1f}x", flush=True)


def bench_apply(repeat):
    code = (
        "import numpy as np, timeit\n"
        "from hinfbvp import BACKEND, Grid, ResolventEngine, SpectralPoint, laplacian, neumann_bc\n"
        "from hinfbvp.grid import gaussian_field\n"
        "g = Grid(2 * np.pi, 128, 8.0, 512)\n"
        "e = ResolventEngine(laplacian(2, 1.0), neumann_bc(), g)\n"
        "u = gaussian_field(g)\n"
        f"t = min(timeit.repeat(lambda: e.apply(SpectralPoint(1.0, 3.0), u), number=1, repeat={repeat}))\n"
        "print(f'{BACKEND:>9}: {1e3 * t:9.2f} ms per apply on 128 x 512')\n"
    )
    for pure in ("0", "1"):
        env = dict(os.environ, HINFBVP_PURE_PYTHON=pure)
        subprocess.run([sys.executable, "-c", code], env=env, check=True)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--K", type=int, default=256)
    ap.add_argument("--M", type=int, default=1024)
    ap.add_argument("--repeat", type=int, default=5)
    a = ap.parse_args()
    print(f"exponential sweeps, K = {a.K} frequencies, M = {a.M} normal nodes", flush=True)
    bench_sweeps(a.K, a.M, a.repeat)
    print("resolvent apply", flush=True)
    bench_apply(a.repeat)


if __name__ == "__main__":
    main()
