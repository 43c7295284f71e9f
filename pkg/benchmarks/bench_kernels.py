"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Also times a full desk-scale Monte Carlo point under each backend, each in a
fresh interpreter since the backend is fixed at import.
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from ehfbl import _pykernels

try:
    from ehfbl import _ckernels
except ImportError:
    _ckernels = None

MC_SNIPPET = """
import time
from ehfbl import kernels
from ehfbl.bounds import ChannelParams, make_schedule
from ehfbl.codec import TrialConfig, monte_carlo
from ehfbl.ehmodel import HarvestModel
p = ChannelParams(1.0, 1.0)
cfg = TrialConfig.from_schedule(HarvestModel("exponential", 1.0), p, make_schedule(128, 1.0, p), 16)
t = time.perf_counter()
monte_carlo(cfg, 4000, seed=1, threads=1)
print(kernels.BACKEND, time.perf_counter() - t)
"""


def bench(fn, args, repeat):
    calls = max(1, int(0.2 / max(timeit.timeit(lambda: fn(*args), number=1), 1e-7)))
    best = min(timeit.repeat(lambda: fn(*args), number=calls, repeat=repeat))
    return best / calls


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if _ckernels is None:
        sys.exit("compiled kernels not built; run `pip install -e . --no-build-isolation` first")
    rng = np.random.default_rng(0)
    cases = []
    for n in (128, 4096, 10 ** 6):
        h = rng.exponential(1.0, n)
        u = rng.normal(size=n) ** 2
        cases.append((f"walk_stats n={n}", "walk_stats", (h, u, 0.1 * np.sqrt(n))))
    for M, n in ((16, 128), (1024, 256), (16384, 64)):
        book = rng.normal(size=(M, n))
        w = rng.normal(size=n)
        cases.append((f"info_densities M={M} n={n}", "info_densities", (book, w, 1.0, 2.0)))

    print(f"{'kernel':34s} {'python':>12s} {'cython':>12s} {'speedup':>8s}")
    for label, name, fargs in cases:
        tp = bench(getattr(_pykernels, name), fargs, args.repeat)
        tc = bench(getattr(_ckernels, name), fargs, args.repeat)
        print(f"{label:34s} {tp * 1e6:10.1f}us {tc * 1e6:10.1f}us {tp / tc:7.2f}x")

    print("\nmonte_carlo M=16 n=128, 4000 trials, 1 thread")
    for pure in ("0", "1"):
        env = dict(os.environ, EHFBL_PURE_PYTHON=pure)
        out = subprocess.run([sys.executable, "-c", MC_SNIPPET], env=env,
                             capture_output=True, text=True, check=True).stdout.split()
        print(f"  {out[0]:8s} {float(out[1]):7.3f}s")


if __name__ == "__main__":
    main()
