"""Time the numba kernels against the numpy fallback.

Each backend runs in its own interpreter because the choice is fixed at
import time by NB_STEIN_NUMBA. Results from both are compared so a speedup
never hides a wrong answer.

    python3 benchmarks/bench_backends.py [--repeat 3]
"""
from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, sys, time
import numpy as np
from nbstein import _kernels, backend_name
from nbstein.k1k2 import K1K2Config, two_param_params, table1
from nbstein.oracle import waiting_tv

repeat = int(sys.argv[1])
cfg = K1K2Config(1, 4, 0.25, 20)
params = two_param_params(cfg)

cases = {
    "recurrence L=2e6": lambda: float(_kernels.recurrence(np.ones(5), 1e-5, 5, 2_000_000)[-1]),
    "event table t=3000": lambda: float(_kernels.event_count_table(1e-3, 5, 3000)[1, -1]),
    "simulate 2e4 runs": lambda: float(_kernels.simulate_waiting(1, 4, 0.25, 1, 20_000, 1).mean()),
    "stream TV n=20": lambda: waiting_tv(cfg, params, method="stream").value,
    "table1": lambda: sum(c.bound for c in table1()),
}
out = {"backend": backend_name(), "cases": {}}
for name, fn in cases.items():
    fn()  # warm-up, includes JIT compilation or cache load
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        value = fn()
        best = min(best, time.perf_counter() - t)
    out["cases"][name] = {"seconds": best, "value": value}
print(json.dumps(out))
"""


def run_backend(flag: str, repeat: int) -> dict:
    env = dict(os.environ, NB_STEIN_NUMBA=flag)
    proc = subprocess.run([sys.executable, "-c", WORKER, str(repeat)], env=env, capture_output=True, text=True)
    if proc.returncode:
        raise SystemExit(proc.stderr)
    return json.loads(proc.stdout)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    fast, slow = run_backend("1", args.repeat), run_backend("0", args.repeat)
    print(f"{'case':<22}{fast['backend']:>12}{slow['backend']:>12}{'speedup':>10}  values agree")
    for name, f in fast["cases"].items():
        s = slow["cases"][name]
        # the two simulators use different generators, so only their means are comparable
        rel = 0.05 if name.startswith("simulate") else 1e-8
        agree = abs(f["value"] - s["value"]) <= rel * max(abs(f["value"]), abs(s["value"]), 1e-300)
        print(f"{name:<22}{f['seconds']:>11.4f}s{s['seconds']:>11.4f}s{s['seconds'] / f['seconds']:>9.1f}x  {agree}")


if __name__ == "__main__":
    main()
