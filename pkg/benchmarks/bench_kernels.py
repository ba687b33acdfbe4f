"""Time the hot kernels with numba and with CLIQUEHIT_DISABLE_NUMBA=1.

Each backend runs in its own interpreter because the switch is read at import.

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""
import argparse
import json
import os
import subprocess
import sys

WORKLOAD = r"""
import json, sys, time
import numpy as np
from cliquehit import kernels
from cliquehit._accel import backend
from cliquehit.procgen import standard_process, potential_edges

repeat = int(sys.argv[1])
g = standard_process(40, 2, 1).edge_array() - 1
h = standard_process(30, 3, 2).edge_array() - 1
T = kernels.min_degree_hit(h, 30)
pe = potential_edges(12, 3) - 1
rng = np.random.default_rng(3)
pick = pe[rng.choice(len(pe), size=40, replace=False)]
clauses = np.array([int(rng.integers(1, 1 << 18)) for _ in range(12)], dtype=np.int64)
keep = rng.random(len(h)) > 0.05

cases = {
    "min_degree_hit(n=30, r=3)": lambda: kernels.min_degree_hit(h, 30),
    "clique_cover_hit(n=40, r=3)": lambda: kernels.clique_cover_hit(g, 40, 3),
    "exact_cover(n=12, 40 triples)": lambda: kernels.exact_cover(pick, 12, 10**6),
    "wmc_enumerate(18 vars)": lambda: kernels.wmc_enumerate(clauses, 18, 0.4),
    "degree_ok_after_thinning": lambda: kernels.degree_ok_after_thinning(h[:T], keep[:T], 30, T),
}
out = {"backend": backend(), "results": {}}
for name, fn in cases.items():
    t0 = time.perf_counter(); fn(); first = time.perf_counter() - t0  # includes compilation
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter(); fn(); best = min(best, time.perf_counter() - t0)
    out["results"][name] = {"first": first, "best": best}
print(json.dumps(out))
"""


def run(disable: bool, repeat: int) -> dict:
    env = dict(os.environ)
    if disable:
        env["CLIQUEHIT_DISABLE_NUMBA"] = "1"
    else:
        env.pop("CLIQUEHIT_DISABLE_NUMBA", None)
    res = subprocess.run([sys.executable, "-c", WORKLOAD, str(repeat)], env=env,
                         capture_output=True, text=True, check=True)
    return json.loads(res.stdout.strip().splitlines()[-1])


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    fast, slow = run(False, args.repeat), run(True, args.repeat)
    print(f"{'kernel':34s} {fast['backend']:>12s} {slow['backend']:>12s} {'speedup':>8s}")
    for name, a in fast["results"].items():
        b = slow["results"][name]
        print(f"{name:34s} {a['best'] * 1e3:10.3f}ms {b['best'] * 1e3:10.3f}ms {b['best'] / max(a['best'], 1e-9):8.1f}x")


if __name__ == "__main__":
    main()
