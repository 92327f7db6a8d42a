"""Compare the compiled and numpy propagation kernels.

    python3 benchmarks/bench_kernels.py [--repeat N] [--solve]

Prints per-call times of the forward pass and the phase gradient for a few
SIM sizes, the max relative difference between the two backends, and with
``--solve`` the wall time of one full max-min solve per backend.
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from simrsma import _kernels_py
from simrsma.config import SystemConfig
from simrsma.geometry import realize

try:
    from simrsma import _kernels
except ImportError:
    _kernels = None

SIZES = [(16, 3, 2), (36, 2, 3), (49, 5, 3), (100, 2, 3)]


def bench_size(M, L, K, repeat):
    cfg = SystemConfig(atoms_per_layer=M, layers=L, num_users=K)
    ch = realize(cfg, 1)
    rng = np.random.default_rng(0)
    theta = np.exp(2j * np.pi * rng.random((L, M)))
    C = rng.standard_normal((K, K + 1)) + 1j * rng.standard_normal((K, K + 1))
    backends = [("numpy", _kernels_py)]
    if _kernels is not None:
        backends.append(("cython", _kernels))
    rows = {}
    outs = {}
    for name, mod in backends:
        prop = mod.Propagator(ch.Q1, ch.Qs, ch.H)
        outs[name] = (prop.forward(theta), prop.gradient(theta, C))
        fwd = timeit.timeit(lambda: prop.forward(theta), number=repeat) / repeat
        grad = timeit.timeit(lambda: prop.gradient(theta, C), number=repeat) / repeat
        rows[name] = (fwd, grad)
    diff = None
    if "cython" in outs:
        a_c, g_c = outs["cython"]
        a_p, g_p = outs["numpy"]
        diff = max(np.abs(a_c - a_p).max() / np.abs(a_p).max(),
                   np.abs(g_c - g_p).max() / np.abs(g_p).max())
    return rows, diff


def solve_time(pure):
    code = ("import time; from simrsma import SystemConfig, realize, solve, BACKEND;"
            "c=SystemConfig(); t=time.perf_counter(); solve('sdma', realize(c,0), c, 0);"
            "print(BACKEND, time.perf_counter()-t)")
    env = dict(os.environ, SIMRSMA_PURE_PYTHON="1" if pure else "0")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True,
                         check=True)
    name, secs = out.stdout.split()
    return name, float(secs)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=2000)
    ap.add_argument("--solve", action="store_true", help="also time a full SDMA solve")
    args = ap.parse_args()

    if _kernels is None:
        print("compiled extension not built; only the numpy backend is timed")
    print(f"{'M':>4} {'L':>2} {'K':>2}  {'backend':8} {'forward us':>11} {'gradient us':>12}")
    for M, L, K in SIZES:
        rows, diff = bench_size(M, L, K, args.repeat)
        for name, (fwd, grad) in rows.items():
            print(f"{M:>4} {L:>2} {K:>2}  {name:8} {fwd * 1e6:11.1f} {grad * 1e6:12.1f}")
        if diff is not None:
            speed = rows["numpy"][1] / rows["cython"][1]
            print(f"{'':10}max rel diff {diff:.1e}, gradient speedup {speed:.2f}x")
    if args.solve:
        for pure in (False, True):
            name, secs = solve_time(pure)
            print(f"sdma solve, desk config, {name}: {secs:.2f} s")


if __name__ == "__main__":
    main()
