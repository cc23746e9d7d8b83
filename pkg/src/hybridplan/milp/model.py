"""Solver-neutral MILP containers."""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Protocol

FEAS_TOL = 1e-6
INT_TOL = 1e-6

KINDS = ("continuous", "binary", "integer")
SENSES = (">=", "<=", "=")


class MilpError(RuntimeError):
    pass


@dataclass(frozen=True)
class MilpVar:
    name: str
    kind: str = "continuous"
    lo: float = 0.0
    hi: float = math.inf

    @property
    def integral(self) -> bool:
        return self.kind != "continuous"


@dataclass(frozen=True)
class Row:
    coeffs: tuple[tuple[str, float], ...]
    sense: str
    rhs: float
    name: str = ""
    tag: str = ""

    @property
    def coeff_map(self) -> dict[str, float]:
        return dict(self.coeffs)

    def activity(self, values: Mapping[str, float]) -> float:
        return math.fsum(c * values[n] for n, c in self.coeffs)

    def violation(self, values: Mapping[str, float]) -> float:
        act = self.activity(values)
        if self.sense == ">=":
            return max(0.0, self.rhs - act)
        if self.sense == "<=":
            return max(0.0, act - self.rhs)
        return abs(act - self.rhs)


class MilpModel:
    """Variables, rows and a linear objective to minimise.

    Builders append through :meth:`add_var` / :meth:`add_row`; :meth:`seal`
    freezes the model before it is handed to a backend.
    """

    def __init__(self, name: str = "model"):
        self.name = name
        self.vars: list[MilpVar] = []
        self.rows: list[Row] = []
        self.objective: dict[str, float] = {}
        self.obj_const = 0.0
        self._index: dict[str, int] = {}
        self.sealed = False

    # building ----------------------------------------------------------
    def _mutable(self):
        if self.sealed:
            raise MilpError("model is sealed")

    def add_var(self, name: str, kind: str = "continuous", lo: float = 0.0, hi: float = math.inf) -> str:
        self._mutable()
        if name in self._index:
            raise MilpError(f"duplicate variable {name!r}")
        if kind not in KINDS:
            raise MilpError(f"unknown kind {kind!r}")
        if kind == "binary":
            lo, hi = 0.0, 1.0
        lo, hi = float(lo), float(hi)
        if lo > hi:
            raise MilpError(f"{name}: empty bounds [{lo}, {hi}]")
        self._index[name] = len(self.vars)
        self.vars.append(MilpVar(name, kind, lo, hi))
        return name

    def add_row(self, coeffs: Mapping[str, float], sense: str, rhs: float, name: str = "", tag: str = "") -> Row:
        self._mutable()
        if sense not in SENSES:
            raise MilpError(f"unknown sense {sense!r}")
        merged: dict[str, float] = {}
        for v, c in coeffs.items():
            if v not in self._index:
                raise MilpError(f"row {name or len(self.rows)} references unknown variable {v!r}")
            if c != 0:
                merged[v] = merged.get(v, 0.0) + float(c)
        items = tuple((v, c) for v, c in merged.items() if c != 0)
        row = Row(items, sense, float(rhs), name or f"r{len(self.rows)}", tag)
        self.rows.append(row)
        return row

    def set_objective(self, coeffs: Mapping[str, float], const: float = 0.0) -> None:
        self._mutable()
        for v in coeffs:
            if v not in self._index:
                raise MilpError(f"objective references unknown variable {v!r}")
        self.objective = {v: float(c) for v, c in coeffs.items() if c != 0}
        self.obj_const = float(const)

    def seal(self) -> "MilpModel":
        self.sealed = True
        return self

    def copy(self) -> "MilpModel":
        m = MilpModel(self.name)
        m.vars = list(self.vars)
        m.rows = list(self.rows)
        m.objective = dict(self.objective)
        m.obj_const = self.obj_const
        m._index = dict(self._index)
        return m

    # queries -----------------------------------------------------------
    def var(self, name: str) -> MilpVar:
        return self.vars[self._index[name]]

    def index(self, name: str) -> int:
        return self._index[name]

    def has_var(self, name: str) -> bool:
        return name in self._index

    @property
    def int_vars(self) -> list[MilpVar]:
        return [v for v in self.vars if v.integral]

    def objective_value(self, values: Mapping[str, float]) -> float:
        return self.obj_const + math.fsum(c * values[v] for v, c in self.objective.items())

    def stats(self) -> dict:
        kinds = Counter(v.kind for v in self.vars)
        tags = Counter(r.tag for r in self.rows)
        return {
            "vars": len(self.vars),
            "continuous": kinds.get("continuous", 0),
            "integer": kinds.get("binary", 0) + kinds.get("integer", 0),
            "rows": len(self.rows),
            "rows_by_tag": dict(sorted(tags.items())),
        }


@dataclass
class MilpSolution:
    status: str  # optimal | feasible | infeasible | timeout
    values: dict[str, float] = field(default_factory=dict)
    objective: float | None = None
    bound: float | None = None
    incumbents: list[tuple[float, float]] = field(default_factory=list)
    exact: dict | None = None
    nodes: int = 0

    @property
    def has_solution(self) -> bool:
        return self.status in ("optimal", "feasible")


IncumbentCallback = Callable[[float, float], None]


class SolverBackend(Protocol):
    name: str
    capabilities: frozenset[str]

    def solve(
        self, model: MilpModel, budget: float | None = None, callback: IncumbentCallback | None = None
    ) -> MilpSolution: ...


def check_solution(model: MilpModel, values: Mapping[str, float], tol: float = FEAS_TOL, int_tol: float = INT_TOL) -> list[str]:
    """Human-readable list of violated bounds, rows and integrality conditions."""
    problems = []
    for v in model.vars:
        if v.name not in values:
            problems.append(f"{v.name}: no value")
            continue
        x = values[v.name]
        if x < v.lo - tol or x > v.hi + tol:
            problems.append(f"{v.name}={x} outside [{v.lo}, {v.hi}]")
        if v.integral and abs(x - round(x)) > int_tol:
            problems.append(f"{v.name}={x} not integral")
    if problems:
        return problems
    for r in model.rows:
        viol = r.violation(values)
        if viol > tol:
            problems.append(f"{r.name}: violated by {viol:.3g}")
    return problems


def verified(model: MilpModel, sol: MilpSolution, tol: float = FEAS_TOL) -> MilpSolution:
    """Re-check a backend's answer; never trust a reported solution blindly."""
    if sol.has_solution:
        problems = check_solution(model, sol.values, tol)
        if problems:
            raise MilpError(f"backend returned an infeasible solution: {problems[:5]}")
        if sol.objective is None:
            sol.objective = model.objective_value(sol.values)
    return sol


def rows_to_dense(model: MilpModel, rows: Iterable[Row] | None = None):
    """(A, lb, ub) numpy arrays for the given rows in two-sided form."""
    import numpy as np

    rows = list(model.rows if rows is None else rows)
    A = np.zeros((len(rows), len(model.vars)))
    lb = np.full(len(rows), -np.inf)
    ub = np.full(len(rows), np.inf)
    for i, r in enumerate(rows):
        for v, c in r.coeffs:
            A[i, model.index(v)] += c
        if r.sense in (">=", "="):
            lb[i] = r.rhs
        if r.sense in ("<=", "="):
            ub[i] = r.rhs
    return A, lb, ub
