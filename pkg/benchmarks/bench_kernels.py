"""Timing of the compiled kernels against their numpy fallbacks.

Run ``python3 benchmarks/bench_kernels.py``.  Each backend runs in its own
subprocess because the backend is fixed at import time by
``CONVPOS_DISABLE_NUMBA``.  Kernel timings exclude JIT compilation (one
warm-up call first); the end-to-end rows time a full maximal intersection
flow and a batch of exact intersection volumes.
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys

_WORKER = r"""
import json, sys, time
import numpy as np
from convpos import _kernels
from convpos.bodies import HPolytope, VPolytope, cube, translated
from convpos.maxint import intersection_volume, maxint_flow

reps = int(sys.argv[1])
rng = np.random.default_rng(0)
ang = np.sort(rng.uniform(0, 2 * np.pi, 40))
poly = np.column_stack([np.cos(ang), np.sin(ang)])
N = rng.standard_normal((30, 2))
b = rng.uniform(0.3, 1.0, 30)
X = rng.uniform(-1, 1, (20000, 2))


def timed(fn, n):
    fn()
    t0 = time.perf_counter()
    for _ in range(n):
        fn()
    return (time.perf_counter() - t0) / n


K = cube(2)
L = VPolytope([[-0.5, -0.7], [1.5, -0.7], [1.5, 1.3], [-0.5, 1.3]])
shifts = rng.uniform(-0.8, 0.8, (50, 2))
out = {
    "numba": _kernels.USING_NUMBA,
    "clip_polygon": timed(lambda: _kernels.clip_polygon(poly, N, b), reps),
    "polygon_moments": timed(lambda: _kernels.polygon_moments(poly), reps),
    "halfspace_mask": timed(lambda: _kernels.halfspace_mask(X, N, b), max(1, reps // 10)),
    "intersection_volumes_x50": timed(
        lambda: [intersection_volume(K, translated(L, s)).volume for s in shifts], 3),
    "maxint_flow": timed(lambda: maxint_flow(K, L), 1),
}
print(json.dumps(out))
"""


def run_backend(disable: bool, reps: int) -> dict:
    env = dict(os.environ)
    env.pop("CONVPOS_DISABLE_NUMBA", None)
    if disable:
        env["CONVPOS_DISABLE_NUMBA"] = "1"
    res = subprocess.run([sys.executable, "-c", _WORKER, str(reps)], env=env, capture_output=True,
                         text=True, check=True)
    return json.loads(res.stdout.strip().splitlines()[-1])


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--reps", type=int, default=2000)
    args = ap.parse_args(argv)
    fast, slow = run_backend(False, args.reps), run_backend(True, args.reps)
    if not fast["numba"]:
        print("numba unavailable; both rows use the numpy fallback")
    print(f"{'benchmark':28s} {'numba':>12s} {'numpy':>12s} {'speedup':>8s}")
    for key in fast:
        if key == "numba":
            continue
        a, b = fast[key], slow[key]
        print(f"{key:28s} {a * 1e3:10.4f}ms {b * 1e3:10.4f}ms {b / a:7.1f}x")


if __name__ == "__main__":
    main()
