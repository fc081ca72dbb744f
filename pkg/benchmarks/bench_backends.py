"""Time the numba kernels against the pure-numpy fallback.

Each backend runs in its own interpreter (the choice is made at import time
from FROGSIM_DISABLE_NUMBA). Numba timings exclude compilation: every workload
is run once to warm up before timing.

    python3 benchmarks/bench_backends.py [--repeat 3] [--quick]
"""

import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, sys, time
import numpy as np
from frogsim import BACKEND, engine, walks
from frogsim.engine import EngineMode, InitialConfig

quick, repeat = json.loads(sys.argv[1])
s = 0.25 if quick else 1.0

def coupled():
    st = engine.init(2, None, 7, horizon=int(120 * s))
    engine.run(st, int(120 * s))

def aggregated():
    st = engine.init(2, InitialConfig.heavy_tail(1.0), 7, EngineMode.AGGREGATED, horizon=int(60 * s))
    engine.run(st, int(60 * s))

def ct():
    engine.ct_run(2, None, 7, 40.0 * s)

def walk_kernels():
    keys = walks.replica_walk_keys(2, 7, int(20000 * s))
    walks.endpoints(2, 200, keys)
    walks.ranges(2, 200, keys)

out = {"backend": BACKEND}
for name, fn in [("coupled d=2", coupled), ("aggregated heavy d=2", aggregated),
                 ("continuous time d=2", ct), ("walk kernels", walk_kernels)]:
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    out[name] = min(times)
print(json.dumps(out))
"""


def run_backend(disable_numba: bool, quick: bool, repeat: int) -> dict:
    env = dict(os.environ)
    env["FROGSIM_DISABLE_NUMBA"] = "1" if disable_numba else "0"
    res = subprocess.run([sys.executable, "-c", WORKER, json.dumps([quick, repeat])],
                         env=env, capture_output=True, text=True, check=True)
    return json.loads(res.stdout.strip().splitlines()[-1])


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--quick", action="store_true", help="smaller workloads")
    args = ap.parse_args(argv)
    nb = run_backend(False, args.quick, args.repeat)
    np_ = run_backend(True, args.quick, args.repeat)
    print(f"{'workload':<24}{nb['backend']:>12}{np_['backend']:>12}{'speedup':>10}")
    for name in nb:
        if name == "backend":
            continue
        print(f"{name:<24}{nb[name]:>11.3f}s{np_[name]:>11.3f}s{np_[name] / nb[name]:>9.1f}x")


if __name__ == "__main__":
    main()
