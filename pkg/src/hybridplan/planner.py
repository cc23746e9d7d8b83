"""Planning driver: step-count policy, budgets, anytime log, certification."""
from __future__ import annotations

import json
import logging
import math
import time
from dataclasses import dataclass, field
from typing import Callable

from .encoder import EncodeOptions, encode, extract_input, extract_run
from .encoding import MPolicy
from .milp.backends import make_backend
from .model import HybridAutomaton, InputSignal, Run
from .validator import ValidationReport, validate

log = logging.getLogger(__name__)

OBJ_TOL = 1e-6


class InternalConsistencyError(RuntimeError):
    """A backend produced a plan that the validator rejects."""


@dataclass(frozen=True)
class PlanRequest:
    automaton: HybridAutomaton
    n: int | None = None  # fixed step count; None means iterative
    n0: int = 1
    n_step: int = 1
    n_max: int = 32
    budget: float | None = None  # seconds for the whole request
    backend: object = "reference"
    cuts: bool = False
    T_max: float = 1e4
    big_m: float = 1e6
    tol: float = 1e-6
    stop_when_optimal_at: float | None = None  # e.g. a known lower bound

    def schedule(self) -> list[int]:
        if self.n is not None:
            if self.n < 1:
                raise ValueError("n must be >= 1")
            return [self.n]
        if self.n0 < 1 or self.n_step < 1 or self.n_max < self.n0:
            raise ValueError("bad iterative schedule")
        return list(range(self.n0, self.n_max + 1, self.n_step))


@dataclass
class NRecord:
    n: int
    status: str
    t1: float | None = None  # wall time of the first incumbent
    g1: float | None = None  # its objective
    t_star: float | None = None  # wall time of the best incumbent
    objective: float | None = None
    bound: float | None = None
    vars: int = 0
    rows: int = 0

    def to_json(self, timings: bool = True) -> dict:
        d = {"n": self.n, "status": self.status, "g1": self.g1, "objective": self.objective, "bound": self.bound,
             "vars": self.vars, "rows": self.rows}
        if timings:
            d.update({"t1": self.t1, "t_star": self.t_star})
        return d


@dataclass
class PlanResult:
    status: str  # optimal-for-n | feasible | infeasible-for-n | timeout
    n: int | None = None
    run: Run | None = None
    signal: InputSignal | None = None
    makespan: float | None = None
    records: list[NRecord] = field(default_factory=list)
    incumbents: list[dict] = field(default_factory=list)
    report: ValidationReport | None = None

    def plan_json(self) -> dict:
        """Deterministic summary (no timings)."""
        return {
            "status": self.status,
            "n": self.n,
            "makespan": self.makespan,
            "run": None if self.run is None else self.run.to_json(),
            "input": None if self.signal is None else self.signal.to_json(),
            "per_n": [r.to_json(timings=False) for r in self.records],
        }

    def stats_json(self) -> dict:
        return {"per_n": [r.to_json() for r in self.records], "incumbents": self.incumbents}


def _backend(spec):
    if isinstance(spec, str):
        return make_backend(spec)
    return spec


def plan(req: PlanRequest, on_incumbent: Callable[[dict], None] | None = None) -> PlanResult:
    """Solve ``req``; every returned plan has been re-validated."""
    a = req.automaton
    backend = _backend(req.backend)
    schedule = req.schedule()
    t0 = time.monotonic()
    best = None  # (objective, n, run, signal, report)
    records: list[NRecord] = []
    incumbents: list[dict] = []
    last_status = None
    any_timeout = False

    for k, n in enumerate(schedule):
        remaining = None
        if req.budget is not None:
            spent = time.monotonic() - t0
            remaining = req.budget - spent
            if remaining <= 0:
                any_timeout = True
                break
            # equal split over the n values still to try; leftovers roll forward
            remaining = remaining / (len(schedule) - k)
        ub = None if best is None else best[0] + OBJ_TOL * (1 + abs(best[0]))
        opts = EncodeOptions(T_max=req.T_max, policy=MPolicy(req.big_m), cuts=req.cuts, objective_ub=ub)
        model, ctx = encode(a, n, opts)
        rec = NRecord(n, "pending", vars=len(model.vars), rows=len(model.rows))
        logged_best = [math.inf if best is None else best[0]]

        def cb(t_backend: float, obj: float, n=n, rec=rec):
            t_wall = time.monotonic() - t0
            if rec.t1 is None:
                rec.t1, rec.g1 = t_wall, obj
            # the log stays non-increasing across n; float noise above the best is dropped
            if obj <= logged_best[0]:
                logged_best[0] = obj
                entry = {"n": n, "t_wall": t_wall, "objective": obj}
                incumbents.append(entry)
                if on_incumbent is not None:
                    on_incumbent(entry)

        sol = backend.solve(model, remaining, cb)
        rec.bound = sol.bound
        last_status = sol.status
        if sol.status == "timeout":
            any_timeout = True
        if sol.has_solution:
            run = extract_run(ctx, sol)
            signal = extract_input(ctx, sol)
            rep = validate(a, signal, run, req.tol)
            if not rep.ok:
                raise InternalConsistencyError(
                    f"n={n}: backend {getattr(backend, 'name', backend)} produced a plan the validator rejects: "
                    + "; ".join(f"{c.name}@{c.step}: {c.detail}" for c in rep.failures[:5])
                )
            if abs(run.total_time - sol.objective) > OBJ_TOL * (1 + abs(sol.objective)):
                raise InternalConsistencyError(f"n={n}: makespan {run.total_time} differs from objective {sol.objective}")
            rec.objective = sol.objective
            rec.t_star = time.monotonic() - t0
            if best is None or sol.objective < best[0] - 1e-9:
                best = (sol.objective, n, run, signal, rep)
        rec.status = {"optimal": "optimal-for-n", "feasible": "feasible", "infeasible": "infeasible-for-n"}.get(
            sol.status, "timeout"
        )
        if sol.status == "infeasible" and best is not None:
            # the objective bound row cut everything: nothing better exists at this n
            rec.status = "optimal-for-n"
            last_status = "optimal"
        records.append(rec)
        log.info("n=%d status=%s objective=%s", n, rec.status, rec.objective)
        if req.stop_when_optimal_at is not None and best is not None and best[0] <= req.stop_when_optimal_at + OBJ_TOL:
            break

    if best is None:
        status = "timeout" if any_timeout else "infeasible-for-n"
        return PlanResult(status, schedule[len(records) - 1] if records else None, records=records, incumbents=incumbents)
    obj, n_best, run, signal, rep = best
    status = "optimal-for-n" if last_status == "optimal" and not any_timeout else "feasible"
    return PlanResult(status, n_best, run, signal, run.total_time, records, incumbents, rep)


def write_incumbents(path, entries) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for e in entries:
            fh.write(json.dumps(e, sort_keys=True) + "\n")
