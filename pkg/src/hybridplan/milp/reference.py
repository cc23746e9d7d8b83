"""Exact reference MILP solver for small models.

Depth-first branch and bound over integer bounds.  Every node LP is solved
exactly (see :mod:`.lp`), integrality is tested on rationals, and a node is
pruned only when its exact bound is no better than the incumbent, so the
returned optimum is exact.  Meant as an oracle, not for speed: a cap on the
number of integer variables keeps it honest.
"""
from __future__ import annotations

import math
import time

from .lp import LPData, solve_lp
from .model import IncumbentCallback, MilpError, MilpModel, MilpSolution

DEFAULT_INT_CAP = 25


class CapExceeded(MilpError):
    pass


def _is_int(q) -> bool:
    return q.denominator == 1


def _floor(q) -> int:
    return math.floor(q)


def reference_solve(
    model: MilpModel,
    budget: float | None = None,
    callback: IncumbentCallback | None = None,
    int_cap: int = DEFAULT_INT_CAP,
    kernel: str | None = None,
    node_limit: int | None = None,
) -> MilpSolution:
    n_int = len(model.int_vars)
    if n_int > int_cap:
        raise CapExceeded(f"{n_int} integer variables exceed the reference solver cap of {int_cap}")
    t0 = time.monotonic()
    data = LPData(model)
    ints = [j for j in range(data.n) if data.integral[j]]
    # integer columns get integral bounds up front
    lo0 = list(data.lo)
    hi0 = list(data.hi)
    for j in ints:
        if math.isfinite(lo0[j]):
            lo0[j] = float(math.ceil(lo0[j] - 1e-9))
        if math.isfinite(hi0[j]):
            hi0[j] = float(math.floor(hi0[j] + 1e-9))

    best_obj = None
    best_x = None
    incumbents: list[tuple[float, float]] = []
    nodes = 0
    timed_out = False
    # stack entries: (lo, hi, parent bound)
    stack = [(lo0, hi0, None)]
    open_bounds: list = []
    while stack:
        if budget is not None and time.monotonic() - t0 > budget:
            timed_out = True
            break
        if node_limit is not None and nodes >= node_limit:
            timed_out = True
            break
        lo, hi, parent = stack.pop()
        if best_obj is not None and parent is not None and parent >= best_obj:
            continue
        nodes += 1
        res = solve_lp(data, lo, hi, kernel)
        if res.status == "unbounded":
            raise MilpError("LP relaxation is unbounded; the reference solver needs bounded models")
        if res.status != "optimal":
            continue
        if best_obj is not None and res.objective >= best_obj:
            continue
        frac = None
        for j in ints:
            if not _is_int(res.x[j]):
                frac = j
                break
        if frac is None:
            best_obj = res.objective
            best_x = res.x
            t = time.monotonic() - t0
            incumbents.append((t, float(best_obj)))
            if callback is not None:
                callback(t, float(best_obj))
            continue
        v = res.x[frac]
        fl = _floor(v)
        down = (lo, hi[:frac] + [float(fl)] + hi[frac + 1:], res.objective)
        up = (lo[:frac] + [float(fl + 1)] + lo[frac + 1:], hi, res.objective)
        # explore the side closer to the LP value first (pushed last)
        if v - fl > 0.5:
            stack.extend([down, up])
        else:
            stack.extend([up, down])

    values = {}
    if best_x is not None:
        values = {name: float(q) for name, q in zip(data.names, best_x)}
        for j in ints:
            values[data.names[j]] = float(round(values[data.names[j]]))
    if timed_out:
        bound = None
        pending = [p for _, _, p in stack if p is not None]
        if best_obj is not None:
            pending.append(best_obj)
        if pending and len(pending) == len(stack) + (best_obj is not None):
            bound = float(min(pending))
        status = "feasible" if best_x is not None else "timeout"
        return MilpSolution(
            status, values, float(best_obj) if best_obj is not None else None, bound, incumbents, None, nodes
        )
    if best_x is None:
        return MilpSolution("infeasible", nodes=nodes)
    exact = {"objective": str(best_obj), "values": {n: str(q) for n, q in zip(data.names, best_x)}}
    return MilpSolution("optimal", values, float(best_obj), float(best_obj), incumbents, exact, nodes)


def is_feasible(model: MilpModel, int_cap: int = DEFAULT_INT_CAP) -> bool:
    """Exact feasibility check (objective ignored)."""
    m = model.copy()
    m.objective = {}
    m.obj_const = 0.0
    return reference_solve(m, int_cap=int_cap).status == "optimal"
