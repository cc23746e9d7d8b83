"""Independent check that an (input signal, run) pair is a run of an automaton.

Only the automaton semantics is used here; nothing from the MILP side is
imported, so a bug in the encoder cannot hide itself.

State conditions of flows are checked on ``samples`` evenly spaced points of
the straight segment q_i -> q_{i+1} (both ends included).  For a condition
without disjunctions this is exact, since a conjunction of half-spaces holds
on a segment iff it holds at both ends; for disjunctive conditions it is a
sampling check.  Input conditions are checked at the point value of the step
start and on the interior value.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .model import (
    FlowSet,
    HybridAutomaton,
    InputSignal,
    JumpAction,
    Run,
    effect_values,
    eval_formula,
    split_condition,
)

DEFAULT_TOL = 1e-6
DEFAULT_SAMPLES = 21


@dataclass(frozen=True)
class Check:
    name: str
    ok: bool
    step: int | None = None
    detail: str = ""

    def to_json(self) -> dict:
        return {"check": self.name, "step": self.step, "ok": self.ok, "detail": self.detail}


@dataclass
class ValidationReport:
    checks: list[Check] = field(default_factory=list)
    tol: float = DEFAULT_TOL

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)

    @property
    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.ok]

    def add(self, name, ok, step=None, detail=""):
        self.checks.append(Check(name, bool(ok), step, detail))

    def to_json(self) -> dict:
        return {"ok": self.ok, "tol": self.tol, "checks": [c.to_json() for c in self.checks]}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)


def _close(a: float, b: float, tol: float) -> bool:
    return abs(a - b) <= tol


def _in_domain(decl, value: float, tol: float) -> bool:
    return decl.contains(value, tol)


def validate(
    a: HybridAutomaton,
    e: InputSignal,
    r: Run,
    tol: float = DEFAULT_TOL,
    samples: int = DEFAULT_SAMPLES,
) -> ValidationReport:
    rep = ValidationReport(tol=tol)
    vm = a.var_map
    internal = a.internal
    internal_set = set(internal)
    n = len(r.actions)

    # structure ------------------------------------------------------------
    ok = len(e.steps) == n
    rep.add("structure", ok, None, "" if ok else f"{len(e.steps)} signal steps for {n} actions")
    if not ok:
        return rep
    times = r.times
    for i, step in enumerate(e.steps):
        if not (_close(step.start, times[i], tol) and _close(step.duration, r.durations[i], tol)):
            rep.add("signal-alignment", False, i, f"signal step [{step.start}, +{step.duration}] vs run t={times[i]}, delta={r.durations[i]}")
    for i, dur in enumerate(r.durations):
        if not (dur >= 0 and math.isfinite(dur)):
            rep.add("duration", False, i, f"delta={dur}")
    missing = [(i, v) for i, q in enumerate(r.states) for v in internal if v not in q]
    if missing:
        rep.add("structure", False, missing[0][0], f"state misses {missing[0][1]!r}")
        return rep
    for i, step in enumerate(e.steps):
        absent = [u for u in a.inputs if u not in step.point or (step.interior is not None and u not in step.interior)]
        if absent:
            rep.add("structure", False, i, f"input value missing for {absent}")
            return rep
    for i, act in enumerate(r.actions):
        if isinstance(act, JumpAction):
            if act.name not in {j.name for j in a.jumps}:
                rep.add("action", False, i, f"unknown jump {act.name!r}")
                return rep
        else:
            names = {f.name: f for f in a.flows}
            groups = [names[f].group if f in names else None for f in act.flows]
            if None in groups or sorted(groups) != list(range(len(a.groups))):
                rep.add("action", False, i, f"flow set {act.flows} does not pick one flow per group")
                return rep

    # (1) init and goal ---------------------------------------------------
    q0 = r.states[0]
    bad = [v for v, val in a.init if not _close(q0[v], val, tol)]
    rep.add("init", not bad, 0, f"differs at {bad}" if bad else "")
    rep.add("goal", eval_formula(a.goal, r.states[-1], tol), n, "")

    # domains ------------------------------------------------------------
    for i, q in enumerate(r.states):
        bad = [v for v in internal if not _in_domain(vm[v], q[v], tol)]
        if bad:
            rep.add("state-domain", False, i, f"outside domain: {bad}")
    for i, step in enumerate(e.steps):
        bad = [u for u in a.inputs if not _in_domain(vm[u], step.point[u], tol)]
        if step.interior is not None:
            bad += [u for u in a.inputs if not _in_domain(vm[u], step.interior[u], tol)]
        if bad:
            rep.add("input-domain", False, i, f"outside domain: {sorted(set(bad))}")

    # (2) steps ----------------------------------------------------------
    for i, act in enumerate(r.actions):
        q, q1 = r.states[i], r.states[i + 1]
        step = e.steps[i]
        if isinstance(act, JumpAction):
            _check_jump(rep, a, i, act, q, q1, step, r.durations[i], tol)
        else:
            _check_flows(rep, a, i, act, q, q1, step, e, r.durations[i], tol, samples, internal_set)

    # Zeno: a run is a finite sequence, so finitely many actions by construction
    rep.add("zeno", n < math.inf, None, f"{n} actions")
    return rep


def _check_jump(rep, a, i, act, q, q1, step, delta, tol):
    j = a.jump(act.name)
    rep.add("jump-duration", abs(delta) <= tol, i, "" if abs(delta) <= tol else f"delta={delta}")
    val = {**q, **step.point}
    rep.add("jump-condition", eval_formula(j.cond, val, tol), i, "" if eval_formula(j.cond, val, tol) else j.name)
    post = effect_values(j.effect, val, a.internal)
    bad = [v for v in a.internal if not _close(q1[v], post[v], tol)]
    rep.add("jump-effect", not bad, i, f"{j.name}: mismatch at {bad}" if bad else "")


def _check_flows(rep, a, i, act: FlowSet, q, q1, step, e: InputSignal, delta, tol, samples, internal_set):
    vm = a.var_map
    # discrete state is frozen during flows
    bad = [v for v in a.discrete_state if not _close(q1[v], q[v], tol)]
    if bad:
        rep.add("flow-discrete", False, i, f"changed during flow: {bad}")
    integral = e.integral(i)
    dyn_bad = []
    conds_ok = True
    detail = ""
    for fname in act.flows:
        f = a.flow(fname)
        condQ, condE = split_condition(f.cond, internal_set)
        # state condition along the segment, both ends included
        for k in range(samples):
            s = k / (samples - 1) if samples > 1 else 0.0
            qt = {v: q[v] + s * (q1[v] - q[v]) if not vm[v].discrete else q[v] for v in a.internal}
            if not eval_formula(condQ, qt, tol):
                conds_ok = False
                detail = f"{fname}: state condition fails at t={step.start + s * delta:g}"
                break
        # input condition at the start instant and on the interior
        if not eval_formula(condE, dict(step.point), tol):
            conds_ok = False
            detail = f"{fname}: input condition fails at the step start"
        if step.interior is not None and delta > 0 and not eval_formula(condE, dict(step.interior), tol):
            conds_ok = False
            detail = f"{fname}: input condition fails inside the step"
        # dynamics x' = x + A * integral(e) + B * delta
        group = a.groups[f.group]
        for row, x in enumerate(group):
            expect = q[x] + f.B[row] * delta
            for c_idx, u in enumerate(a.inputs):
                c = f.A[row][c_idx]
                if c:
                    expect += c * integral.get(u, 0.0)
            if not _close(q1[x], expect, tol):
                dyn_bad.append(f"{fname}: {x} reaches {q1[x]:.9g}, dynamics give {expect:.9g}")
    rep.add("flow-condition", conds_ok, i, detail)
    rep.add("flow-dynamics", not dyn_bad, i, "; ".join(dyn_bad))
