"""Stand-in external solver built on the reference solver.

    python -m hybridplan.milp.stub_solver MODEL.lp SOLUTION.sol

Works in two stages like an anytime solver: first a deliberately poor
feasible point (the objective maximized instead of minimized), then the
optimum.  Each stage prints an
``incumbent <objective>`` line on stdout; the solution file uses the
``status`` / ``objective`` / ``name value`` dialect the external adapter reads.
"""
from __future__ import annotations

import argparse
import sys

from .lpformat import fmt, parse_lp
from .reference import reference_solve


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="stub_solver")
    ap.add_argument("lp")
    ap.add_argument("sol")
    ap.add_argument("--int-cap", type=int, default=25)
    ap.add_argument("--single", action="store_true", help="skip the feasibility stage")
    args = ap.parse_args(argv)

    with open(args.lp, encoding="utf-8") as fh:
        model = parse_lp(fh.read(), restore_names=False)

    if not args.single:
        probe = model.copy()
        probe.objective = {k: -c for k, c in model.objective.items()}
        probe.obj_const = -model.obj_const
        first = reference_solve(probe, int_cap=args.int_cap)
        if first.status != "optimal":
            with open(args.sol, "w", encoding="utf-8") as fh:
                fh.write("status infeasible\n")
            return 0
        print(f"incumbent {fmt(model.objective_value(first.values))}", flush=True)

    sol = reference_solve(model, int_cap=args.int_cap)
    with open(args.sol, "w", encoding="utf-8") as fh:
        if not sol.has_solution:
            fh.write(f"status {sol.status}\n")
            return 0
        print(f"incumbent {fmt(sol.objective)}", flush=True)
        fh.write("status optimal\n")
        fh.write(f"objective {fmt(sol.objective)}\n")
        for v in model.vars:
            fh.write(f"{v.name} {fmt(sol.values[v.name])}\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
