"""Time the numba kernels against their numpy fallbacks.

Each backend runs in its own interpreter because the switch is read once at
import time (PHASESENSE_DISABLE_NUMBA).  Usage:

    python benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import json
import os
import subprocess
import sys
import timeit

import numpy as np


def cases():
    from phasesense import kernels

    rng = np.random.default_rng(1)
    g = rng.normal(size=(60, 60)) + 1j * rng.normal(size=(60, 60))
    rho = g @ g.conj().T
    rho /= np.trace(rho).real
    c, _ = kernels.overlap_tables(0.7, 90, 60)
    psi_g = np.zeros(32, complex)
    psi_g[0] = 1.0
    omegas = 0.3 * np.exp(1j * np.linspace(0, 6, 2000))
    return {
        "overlap_tables 200x200": lambda: kernels.overlap_tables(1.3, 200, 200),
        "channel_full_sum 90x60": lambda: kernels.channel_full_sum(c, rho),
        "jc_propagate D=32, 2000 steps": lambda: kernels.jc_propagate(psi_g, np.zeros(32, complex), omegas, 1e-3),
    }


def child(repeat):
    from phasesense._accel import USE_NUMBA

    out = {"numba": USE_NUMBA, "times": {}}
    for name, fn in cases().items():
        fn()  # warm-up, includes compilation
        out["times"][name] = min(timeit.repeat(fn, number=1, repeat=repeat))
    print(json.dumps(out))


def run_backend(disable, repeat):
    env = dict(os.environ, PHASESENSE_DISABLE_NUMBA="1" if disable else "0")
    res = subprocess.run([sys.executable, __file__, "--child", "--repeat", str(repeat)],
                         env=env, capture_output=True, text=True, check=True)
    return json.loads(res.stdout)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--child", action="store_true", help=argparse.SUPPRESS)
    args = ap.parse_args()
    if args.child:
        child(args.repeat)
        return
    fast = run_backend(False, args.repeat)
    slow = run_backend(True, args.repeat)
    print(f"{'kernel':34s} {'numba [ms]':>11s} {'numpy [ms]':>11s} {'ratio':>7s}")
    for name, t in fast["times"].items():
        s = slow["times"][name]
        print(f"{name:34s} {1e3 * t:11.3f} {1e3 * s:11.3f} {s / t:7.2f}")


if __name__ == "__main__":
    main()
