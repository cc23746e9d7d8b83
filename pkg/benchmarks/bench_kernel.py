"""Compiled vs pure-Python simplex kernel.

    python3 benchmarks/bench_kernel.py [--reps 5]

Times (a) the LP relaxation of random bounded LPs and (b) whole reference
B&B solves of corpus encodings, once per kernel, and prints the speedup.
"""
import argparse
import statistics
import time

import numpy as np

from hybridplan.domains.toy import CORPUS
from hybridplan.encoder import encode
from hybridplan.milp.kernel import KERNEL
from hybridplan.milp.lp import LPData, solve_lp
from hybridplan.milp.model import MilpModel
from hybridplan.milp.reference import reference_solve
from hybridplan.model import load_automaton


def random_lp(rng, n=30, m=20):
    model = MilpModel()
    for j in range(n):
        model.add_var(f"x{j}", "continuous", float(rng.integers(-5, 1)), float(rng.integers(1, 6)))
    for _ in range(m):
        row = {f"x{j}": float(rng.integers(-3, 4)) for j in range(n) if rng.random() < 0.4}
        if row:
            model.add_row(row, str(rng.choice([">=", "<="])), float(rng.integers(-5, 6)))
    model.set_objective({f"x{j}": float(rng.integers(-3, 4)) for j in range(n)})
    return LPData(model)


def best_of(fn, reps):
    ts = []
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        ts.append(time.perf_counter() - t0)
    return min(ts), statistics.median(ts)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--reps", type=int, default=5)
    args = ap.parse_args()
    if KERNEL != "cython":
        print("compiled kernel not built; only the Python kernel is available")
    kernels = ["python"] + (["cython"] if KERNEL == "cython" else [])

    rng = np.random.default_rng(0)
    lps = [random_lp(rng) for _ in range(40)]
    milps = [encode(load_automaton(CORPUS[k][0]), CORPUS[k][1])[0] for k in ("inst_b", "inst_c", "two_switches", "keyed")]

    rows = []
    for label, work in (
        ("40 random LPs (30x20)", lambda k: [solve_lp(d, kernel=k) for d in lps]),
        ("4 corpus MILPs (B&B)", lambda k: [reference_solve(m, kernel=k) for m in milps]),
    ):
        res = {k: best_of(lambda k=k: work(k), args.reps) for k in kernels}
        rows.append((label, res))

    print(f"{'workload':<24}" + "".join(f"{k + ' best':>14}{k + ' med':>14}" for k in kernels) + "   speedup")
    for label, res in rows:
        line = f"{label:<24}" + "".join(f"{res[k][0] * 1e3:>12.1f}ms{res[k][1] * 1e3:>12.1f}ms" for k in kernels)
        if "cython" in res:
            line += f"   {res['python'][0] / res['cython'][0]:.2f}x"
        print(line)


if __name__ == "__main__":
    main()
