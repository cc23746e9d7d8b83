"""Solver backends behind one ``solve(model, budget, callback)`` contract.

* ``reference``: the exact branch and bound of :mod:`.reference`.
* ``highs``: scipy's HiGHS MILP, for models past the reference cap.
* ``external``: any LP-file solver run as a subprocess.

Every answer is passed through :func:`verified` before it is returned.
"""
from __future__ import annotations

import math
import os
import shlex
import subprocess
import tempfile
import threading
import time
from pathlib import Path

import numpy as np

from .lpformat import export_lp
from .model import MilpError, MilpModel, MilpSolution, rows_to_dense, verified
from .reference import DEFAULT_INT_CAP, reference_solve

SOLVER_CMD_ENV = "HYBRIDPLAN_SOLVER_CMD"


class _Monotone:
    """Wraps a callback so that only non-increasing objectives get through."""

    def __init__(self, callback, sink: list):
        self.callback = callback
        self.sink = sink
        self.best = math.inf
        self.lock = threading.Lock()

    def __call__(self, t: float, obj: float) -> None:
        with self.lock:
            if obj > self.best:
                return
            self.best = obj
            self.sink.append((t, obj))
            if self.callback is not None:
                self.callback(t, obj)


class ReferenceBackend:
    name = "reference"
    capabilities = frozenset({"exact", "incumbents", "budget"})

    def __init__(self, int_cap: int = DEFAULT_INT_CAP, kernel: str | None = None):
        self.int_cap = int_cap
        self.kernel = kernel

    def solve(self, model, budget=None, callback=None) -> MilpSolution:
        sol = reference_solve(model, budget, callback, int_cap=self.int_cap, kernel=self.kernel)
        return verified(model, sol)


class HighsBackend:
    """scipy.optimize.milp, followed by an LP polish with the integers fixed."""

    name = "highs"
    capabilities = frozenset({"budget"})

    def __init__(self, mip_rel_gap: float = 1e-9):
        self.mip_rel_gap = mip_rel_gap

    def solve(self, model, budget=None, callback=None) -> MilpSolution:
        from scipy.optimize import Bounds, LinearConstraint, linprog, milp

        t0 = time.monotonic()
        n = len(model.vars)
        c = np.zeros(n)
        for v, coef in model.objective.items():
            c[model.index(v)] = coef
        lo = np.array([v.lo for v in model.vars])
        hi = np.array([v.hi for v in model.vars])
        integrality = np.array([1 if v.integral else 0 for v in model.vars])
        cons = []
        if model.rows:
            A, lb, ub = rows_to_dense(model)
            cons.append(LinearConstraint(A, lb, ub))
        opts = {"mip_rel_gap": self.mip_rel_gap, "disp": False}
        if budget is not None:
            opts["time_limit"] = max(budget, 0.01)
        res = milp(c, constraints=cons, integrality=integrality, bounds=Bounds(lo, hi), options=opts)
        if res.x is None:
            if res.status == 2:
                return MilpSolution("infeasible")
            if res.status == 3:
                raise MilpError("MILP is unbounded")
            return MilpSolution("timeout")
        x = np.array(res.x)
        ints = integrality.astype(bool)
        x[ints] = np.round(x[ints])
        # polish: fix the integers, re-solve the continuous part
        if model.rows:
            A, lb, ub = rows_to_dense(model)
            plo, phi = lo.copy(), hi.copy()
            plo[ints] = x[ints]
            phi[ints] = x[ints]
            eq = lb == ub
            A_ub = np.vstack([A[~eq & np.isfinite(ub)], -A[~eq & np.isfinite(lb)]])
            b_ub = np.concatenate([ub[~eq & np.isfinite(ub)], -lb[~eq & np.isfinite(lb)]])
            lp = linprog(
                c,
                A_ub=A_ub if len(b_ub) else None,
                b_ub=b_ub if len(b_ub) else None,
                A_eq=A[eq] if eq.any() else None,
                b_eq=lb[eq] if eq.any() else None,
                bounds=list(zip(np.where(np.isfinite(plo), plo, None), np.where(np.isfinite(phi), phi, None))),
                method="highs",
                options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10},
            )
            if lp.status == 0:
                x = np.array(lp.x)
                x[ints] = plo[ints]
        values = {v.name: float(val) for v, val in zip(model.vars, x)}
        obj = model.objective_value(values)
        status = "optimal" if res.status == 0 else "feasible"
        t = time.monotonic() - t0
        if callback is not None:
            callback(t, obj)
        bound = getattr(res, "mip_dual_bound", None)
        if bound is None or not math.isfinite(bound):
            bound = obj if status == "optimal" else None
        else:
            bound = float(bound) + model.obj_const
        sol = MilpSolution(status, values, obj, bound, [(t, obj)], None, int(getattr(res, "mip_node_count", 0) or 0))
        return verified(model, sol)


def read_solution_file(path, names: dict[str, str] | None = None) -> tuple[str | None, float | None, dict[str, float]]:
    """Parse ``[status <s>]``, ``objective <num>`` and ``name value`` lines."""
    status = None
    objective = None
    values: dict[str, float] = {}
    names = names or {}
    with open(path, encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise MilpError(f"malformed solution line: {line!r}")
            key, val = parts
            if key == "status":
                status = val
            elif key == "objective":
                objective = float(val)
            else:
                values[names.get(key, key)] = float(val)
    return status, objective, values


class ExternalBackend:
    """Write an LP file, run a solver command, read back its solution file.

    ``command`` is a template with ``{lp}``, ``{sol}`` and ``{budget}``
    placeholders (default: the ``HYBRIDPLAN_SOLVER_CMD`` environment variable).
    Stdout lines ``incumbent <objective>`` are forwarded to the callback as they
    arrive.  Variables missing from the solution file are read as 0.
    """

    name = "external"
    capabilities = frozenset({"incumbents", "budget"})

    def __init__(self, command: str | None = None, env_passthrough: tuple[str, ...] = (), workdir=None, grace: float = 5.0):
        self.command = command if command is not None else os.environ.get(SOLVER_CMD_ENV)
        self.env_passthrough = tuple(env_passthrough)
        self.workdir = workdir
        self.grace = grace

    def solve(self, model, budget=None, callback=None) -> MilpSolution:
        if not self.command:
            raise MilpError(f"no solver command configured (set {SOLVER_CMD_ENV})")
        t0 = time.monotonic()
        doc = export_lp(model)
        with tempfile.TemporaryDirectory(dir=self.workdir) as tmp:
            lp_path = Path(tmp) / "model.lp"
            sol_path = Path(tmp) / "model.sol"
            lp_path.write_text(doc.text, encoding="utf-8")
            cmd = self.command.format(
                lp=shlex.quote(str(lp_path)),
                sol=shlex.quote(str(sol_path)),
                budget="" if budget is None else f"{budget:g}",
            )
            env = None
            if self.env_passthrough:
                env = {k: os.environ[k] for k in ("PATH", "HOME", *self.env_passthrough) if k in os.environ}
            log: list[tuple[float, float]] = []
            mono = _Monotone(callback, log)
            proc = subprocess.Popen(
                cmd, shell=True, stdout=subprocess.PIPE, stderr=subprocess.PIPE, text=True, env=env
            )

            def pump():
                for line in proc.stdout:
                    parts = line.split()
                    if len(parts) == 2 and parts[0] == "incumbent":
                        try:
                            mono(time.monotonic() - t0, float(parts[1]))
                        except ValueError:
                            pass

            reader = threading.Thread(target=pump, daemon=True)
            reader.start()
            timeout = None if budget is None else budget + self.grace
            try:
                proc.wait(timeout=timeout)
            except subprocess.TimeoutExpired:
                proc.kill()
                proc.wait()
            reader.join(timeout=5)
            err = proc.stderr.read() if proc.stderr else ""
            if not sol_path.exists():
                if proc.returncode not in (0, None) and proc.returncode > 0:
                    raise MilpError(f"solver command failed ({proc.returncode}): {err.strip()[:500]}")
                return MilpSolution("timeout", incumbents=log)
            status, objective, values = read_solution_file(sol_path, doc.names)
        if status == "infeasible":
            return MilpSolution("infeasible", incumbents=log)
        if status == "timeout" and not values:
            return MilpSolution("timeout", incumbents=log)
        full = {v.name: values.get(v.name, 0.0) for v in model.vars}
        for v in model.vars:
            if v.integral:
                full[v.name] = float(round(full[v.name]))
        obj = model.objective_value(full)
        if objective is not None and abs(obj - objective) > 1e-6 * (1 + abs(obj)):
            raise MilpError(f"solver reported objective {objective} but its values give {obj}")
        st = status if status in ("optimal", "feasible") else "optimal"
        return verified(model, MilpSolution(st, full, obj, obj if st == "optimal" else None, log))


class AutoBackend:
    """Exact reference solver when the model is small enough, HiGHS otherwise."""

    name = "auto"

    def __init__(self, int_cap: int = DEFAULT_INT_CAP):
        self.int_cap = int_cap
        self.last = None

    def pick(self, model):
        if len(model.int_vars) <= self.int_cap:
            return ReferenceBackend(self.int_cap)
        return HighsBackend()

    def solve(self, model, budget=None, callback=None) -> MilpSolution:
        b = self.pick(model)
        self.last = b.name
        return b.solve(model, budget, callback)


def make_backend(name: str, **kw):
    if name == "auto":
        return AutoBackend(**kw)
    if name == "reference":
        return ReferenceBackend(**kw)
    if name == "highs":
        return HighsBackend(**kw)
    if name == "external":
        return ExternalBackend(**kw)
    raise ValueError(f"unknown backend {name!r}")
