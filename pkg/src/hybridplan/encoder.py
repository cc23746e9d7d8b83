"""n-step planning problem of a hybrid automaton as a MILP.

Model variables (``i`` is the step, ``v`` an automaton variable name):

* ``Q{i}_{v}`` for i = 0..n, every internal variable (integer if discrete);
* ``E{i}_{u}`` for i < n, every input: the input value at the start of step i;
* ``D{i}_{u}`` for i < n, every continuous input: its integral over step i;
* ``d{i}`` for i < n: duration of step i, in [0, T_max];
* ``p{i}_{o}`` for i < n, every jump and flow o: activation binary;
* ``alpha_*``: disjunct indicators created by formula lowering.

Exact counts: ``(n+1)|Q| + n(|E| + |E_c| + 1 + |J| + |F|)`` plus indicators,
which are a fixed number per step.  Row tags C1..C10 follow the constraint
families; ``bounds`` ties D to d, ``cut`` marks conflict cuts.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping

from .encoding import Guard, LoweredFormula, MPolicy, UnboundedBigM, emit, lower_formula, relax
from .milp.model import MilpModel, MilpSolution
from .model import (
    TRUE,
    FlowSet,
    Formula,
    HybridAutomaton,
    InputSignal,
    JumpAction,
    LinearConstraint,
    Run,
    SignalStep,
    conj,
    split_condition,
)

DEFAULT_T_MAX = 1e4
ROUND_TOL = 1e-6
ZERO_DURATION = 1e-9


class EncodeError(ValueError):
    pass


class ExtractionError(ValueError):
    pass


@dataclass(frozen=True)
class EncodeOptions:
    T_max: float = DEFAULT_T_MAX
    policy: MPolicy = MPolicy()
    cuts: bool = False
    objective_ub: float | None = None
    cut_int_cap: int = 25


@dataclass(frozen=True)
class EncodingContext:
    automaton: HybridAutomaton
    n: int
    options: EncodeOptions
    Q: tuple[Mapping[str, str], ...]
    E: tuple[Mapping[str, str], ...]
    D: tuple[Mapping[str, str], ...]
    d: tuple[str, ...]
    P: tuple[Mapping[str, str], ...]
    shared: Mapping[tuple[int, str, str], LoweredFormula] = field(default_factory=dict)

    @property
    def policy(self) -> MPolicy:
        return self.options.policy


def _ro(d: dict) -> Mapping:
    return MappingProxyType(dict(d))


def _var_names(a: HybridAutomaton, n: int):
    Q = tuple({v: f"Q{i}_{v}" for v in a.internal} for i in range(n + 1))
    E = tuple({u: f"E{i}_{u}" for u in a.inputs} for i in range(n))
    D = tuple({u: f"D{i}_{u}" for u in a.continuous_inputs} for i in range(n))
    d = tuple(f"d{i}" for i in range(n))
    ops = [j.name for j in a.jumps] + [f.name for f in a.flows]
    P = tuple({o: f"p{i}_{o}" for o in ops} for i in range(n))
    return Q, E, D, d, P


def encode(a: HybridAutomaton, n: int, options: EncodeOptions | None = None, *, seal: bool = True):
    """Build the n-step MILP.  Returns ``(model, ctx)``."""
    opt = options or EncodeOptions()
    if n < 1:
        raise EncodeError("n must be >= 1")
    T = float(opt.T_max)
    if not (math.isfinite(T) and T > 0):
        raise EncodeError("a finite positive T_max is needed to bound the cumulative inputs")
    policy = opt.policy
    Q, E, D, d, P = _var_names(a, n)
    vm = a.var_map
    model = MilpModel(f"plan_n{n}")
    bounds: dict[str, tuple[float, float]] = {}

    def var(name, kind, lo, hi):
        model.add_var(name, kind, lo, hi)
        bounds[name] = (lo, hi) if kind != "binary" else (0.0, 1.0)

    for i in range(n + 1):
        for v in a.internal:
            decl = vm[v]
            var(Q[i][v], "integer" if decl.discrete else "continuous", decl.lo, decl.hi)
    for i in range(n):
        for u in a.inputs:
            decl = vm[u]
            var(E[i][u], "integer" if decl.discrete else "continuous", decl.lo, decl.hi)
        var(d[i], "continuous", 0.0, T)
        for u in a.continuous_inputs:
            decl = vm[u]
            var(D[i][u], "continuous", min(0.0, decl.lo * T), max(0.0, decl.hi * T))
        for o in P[i]:
            var(P[i][o], "binary", 0.0, 1.0)

    internal = set(a.internal)
    jump_names = [j.name for j in a.jumps]
    shared: dict[tuple[int, str, str], LoweredFormula] = {}

    def lower(f: Formula, rename: Mapping[str, str], prefix: str, guard=None, ctxmsg="", share=None, rowmap=None):
        def rm(row: LinearConstraint):
            out: dict[str, float] = {}
            for v, c in row.coeffs:
                k = rename[v]
                out[k] = out.get(k, 0.0) + c
            return out, row.rhs

        try:
            return lower_formula(f, policy, bounds, prefix=prefix, guard=guard, rowmap=rowmap or rm, shared=share)
        except UnboundedBigM as exc:
            raise EncodeError(f"{ctxmsg}: {exc}") from None

    # C1: initial state and goal
    for v, val in a.init:
        model.add_row({Q[0][v]: 1.0}, "=", val, f"init_{v}", "C1")
    emit(model, lower(a.goal, Q[n], "goal", ctxmsg="goal"), name="goal", tag="C1")

    for i in range(n):
        step = {**Q[i], **E[i]}
        jp = [P[i][j] for j in jump_names]
        # C2: one jump, or one flow per group
        if a.groups:
            for k in range(len(a.groups)):
                row = {p: 1.0 for p in jp}
                row.update({P[i][f.name]: 1.0 for f in a.flows_of(k)})
                model.add_row(row, "=", 1.0, f"act_{i}_{k}", "C2")
        elif jp:
            model.add_row({p: 1.0 for p in jp}, "<=", 1.0, f"act_{i}", "C2")
        # C5: jumps take no time
        row = {d[i]: 1.0}
        for p in jp:
            row[p] = row.get(p, 0.0) + T
        model.add_row(row, "<=", T, f"jtime_{i}", "C5")
        # integrals are bounded by the input box times the duration
        for u in a.continuous_inputs:
            decl = vm[u]
            model.add_row({D[i][u]: 1.0, d[i]: -decl.lo}, ">=", 0.0, f"dlo_{i}_{u}", "bounds")
            model.add_row({D[i][u]: 1.0, d[i]: -decl.hi}, "<=", 0.0, f"dhi_{i}_{u}", "bounds")

        for j in a.jumps:
            g = Guard.of(P[i][j.name])
            where = f"step {i}, jump {j.name}"
            # C3: guard
            emit(model, lower(j.cond, step, f"c3_{i}_{j.name}", g, where), name=f"jcond_{i}_{j.name}", tag="C3")
            # C4: effect, identity for unassigned internals
            assigned = {s.target: s for s in j.effect.assignments}
            for v in a.internal:
                coeffs = {Q[i + 1][v]: 1.0}
                const = 0.0
                if v in assigned:
                    s = assigned[v]
                    for name, c in s.coeffs:
                        key = step[name]
                        coeffs[key] = coeffs.get(key, 0.0) - c
                    const = s.const
                else:
                    coeffs[Q[i][v]] = coeffs.get(Q[i][v], 0.0) - 1.0
                try:
                    up = relax(coeffs, const, g, policy, bounds)
                    dn = relax({k: -c for k, c in coeffs.items()}, -const, g, policy, bounds)
                except UnboundedBigM as exc:
                    raise EncodeError(f"{where}: {exc}") from None
                for tag_k, r in (("ge", up), ("le", dn)):
                    if r.coeffs or r.rhs > 0:
                        model.add_row(r.coeffs, ">=", r.rhs, f"jeff_{i}_{j.name}_{v}_{tag_k}", "C4")

        for f in a.flows:
            p = P[i][f.name]
            g = Guard.of(p)
            where = f"step {i}, flow {f.name}"
            condQ, condE = split_condition(f.cond, internal)
            # C6: state condition at both ends, same disjunct choice
            lo6 = lower(condQ, Q[i], f"c6_{i}_{f.name}", g, where)
            hi6 = lower(condQ, Q[i + 1], f"c6_{i}_{f.name}", g, where, share=lo6)
            shared[(i, f.name, "Q")] = lo6
            emit(model, lo6, name=f"fcondQ0_{i}_{f.name}", tag="C6")
            emit(model, hi6, name=f"fcondQ1_{i}_{f.name}", tag="C6")
            # C7: input condition at the start instant
            lo7 = lower(condE, E[i], f"c7_{i}_{f.name}", g, where)
            shared[(i, f.name, "E")] = lo7
            emit(model, lo7, name=f"fcondE_{i}_{f.name}", tag="C7")

            # C8: the same condition integrated over the step: G.D - H d >= 0
            def rm8(row: LinearConstraint, i=i):
                out = {D[i][u]: c for u, c in row.coeffs}
                out[d[i]] = out.get(d[i], 0.0) - row.rhs
                return out, 0.0

            lo8 = lower(condE, E[i], "", g, where, share=lo7, rowmap=rm8)
            emit(model, lo8, name=f"fcondD_{i}_{f.name}", tag="C8")
            # C9: dynamics of the flow's group
            group = a.groups[f.group]
            for r, x in enumerate(group):
                coeffs = {Q[i + 1][x]: 1.0, Q[i][x]: -1.0}
                for c_idx, u in enumerate(a.inputs):
                    c = f.A[r][c_idx]
                    if c != 0:
                        coeffs[D[i][u]] = coeffs.get(D[i][u], 0.0) - c
                if f.B[r] != 0:
                    coeffs[d[i]] = coeffs.get(d[i], 0.0) - f.B[r]
                try:
                    up = relax(coeffs, 0.0, g, policy, bounds)
                    dn = relax({k: -c for k, c in coeffs.items()}, 0.0, g, policy, bounds)
                except UnboundedBigM as exc:
                    raise EncodeError(f"{where}: {exc}") from None
                model.add_row(up.coeffs, ">=", up.rhs, f"dyn_{i}_{f.name}_{x}_ge", "C9")
                model.add_row(dn.coeffs, ">=", dn.rhs, f"dyn_{i}_{f.name}_{x}_le", "C9")

        # C10: discrete state only changes through jumps
        g10 = Guard.none_of(jp) if jp else None
        for v in a.discrete_state:
            coeffs = {Q[i + 1][v]: 1.0, Q[i][v]: -1.0}
            try:
                up = relax(coeffs, 0.0, g10, policy, bounds)
                dn = relax({k: -c for k, c in coeffs.items()}, 0.0, g10, policy, bounds)
            except UnboundedBigM as exc:
                raise EncodeError(f"step {i}, frame {v}: {exc}") from None
            model.add_row(up.coeffs, ">=", up.rhs, f"frame_{i}_{v}_ge", "C10")
            model.add_row(dn.coeffs, ">=", dn.rhs, f"frame_{i}_{v}_le", "C10")

    model.set_objective({di: 1.0 for di in d})
    if opt.objective_ub is not None:
        model.add_row({di: 1.0 for di in d}, "<=", opt.objective_ub, "obj_ub", "bound")

    ctx = EncodingContext(
        a,
        n,
        opt,
        tuple(_ro(x) for x in Q),
        tuple(_ro(x) for x in E),
        tuple(_ro(x) for x in D),
        d,
        tuple(_ro(x) for x in P),
        _ro(shared),
    )
    if opt.cuts:
        add_conflict_cuts(model, ctx, a)
    if seal:
        model.seal()
    return model, ctx


# ---------------------------------------------------------------------------
# conflict cuts


def _satisfiable(a: HybridAutomaton, decls, formulas, equalities, policy: MPolicy, int_cap: int) -> bool | None:
    """Exact satisfiability of a conjunction over renamed automaton variables.

    ``decls`` maps model names to the automaton variable whose domain they
    take.  Returns None when the check is beyond the reference solver.
    """
    from .milp.reference import CapExceeded, reference_solve

    m = MilpModel("conflict")
    bounds = {}
    vm = a.var_map
    for name, v in decls.items():
        decl = vm[v]
        m.add_var(name, "integer" if decl.discrete else "continuous", decl.lo, decl.hi)
        bounds[name] = (decl.lo, decl.hi)
    for k, (f, rename) in enumerate(formulas):

        def rm(row, rename=rename):
            out = {}
            for v, c in row.coeffs:
                out[rename[v]] = out.get(rename[v], 0.0) + c
            return out, row.rhs

        try:
            emit(m, lower_formula(f, policy, bounds, prefix=f"k{k}", rowmap=rm))
        except UnboundedBigM:
            return None
    for coeffs, rhs in equalities:
        m.add_row(coeffs, "=", rhs)
    try:
        return reference_solve(m.seal(), int_cap=int_cap).status == "optimal"
    except CapExceeded:
        return None


def conflict_pairs(a: HybridAutomaton, policy: MPolicy | None = None, int_cap: int = 25):
    """(flow pairs that cannot co-occur, operator pairs that cannot follow each other).

    The post-condition of a flow is its state condition at the end of the
    step; that of a jump is the image of its guard under its effect, written
    with a fresh copy of the pre-state.
    """
    policy = policy or MPolicy()
    internal = list(a.internal)
    allv = [v.name for v in a.vars]
    cur = {v: f"a_{v}" for v in allv}
    nxt_in = {u: f"b_{u}" for u in a.inputs}
    pre = {v: f"z_{v}" for v in allv}

    together = []
    for x in range(len(a.flows)):
        for y in range(x + 1, len(a.flows)):
            f, g = a.flows[x], a.flows[y]
            if f.group == g.group:
                continue
            decls = {cur[v]: v for v in allv}
            if _satisfiable(a, decls, [(f.cond, cur), (g.cond, cur)], [], policy, int_cap) is False:
                together.append((f.name, g.name))

    ops = list(a.jumps) + list(a.flows)
    jump_names = {j.name for j in a.jumps}
    after = {**{v: cur[v] for v in internal}, **nxt_in}
    sequence = []
    for o in ops:
        decls = {cur[v]: v for v in internal}
        decls.update({nxt_in[u]: u for u in a.inputs})
        if o.name in jump_names:
            decls.update({pre[v]: v for v in allv})
            formulas = [(o.cond, pre)]
            eqs = []
            assigned = {s.target: s for s in o.effect.assignments}
            for v in internal:
                coeffs = {cur[v]: 1.0}
                const = 0.0
                if v in assigned:
                    s = assigned[v]
                    for nme, c in s.coeffs:
                        coeffs[pre[nme]] = coeffs.get(pre[nme], 0.0) - c
                    const = s.const
                else:
                    coeffs[pre[v]] = coeffs.get(pre[v], 0.0) - 1.0
                eqs.append((coeffs, const))
        else:
            condQ, _ = split_condition(o.cond, set(internal))
            formulas = [(condQ, cur)]
            eqs = []
        for o2 in ops:
            if _satisfiable(a, decls, formulas + [(o2.cond, after)], eqs, policy, int_cap) is False:
                sequence.append((o.name, o2.name))
    return together, sequence


def add_conflict_cuts(model: MilpModel, ctx: EncodingContext, a: HybridAutomaton | None = None) -> MilpModel:
    """Append redundant rows forbidding impossible operator pairs (in place unless sealed)."""
    a = a or ctx.automaton
    if model.sealed:
        model = model.copy()
    together, sequence = conflict_pairs(a, ctx.policy, ctx.options.cut_int_cap)
    n = ctx.n
    for f, g in together:
        for i in range(n):
            model.add_row({ctx.P[i][f]: 1.0, ctx.P[i][g]: 1.0}, "<=", 1.0, f"cutf_{i}_{f}_{g}", "cut")
    for o, o2 in sequence:
        for i in range(n - 1):
            row = {ctx.P[i][o]: 1.0}
            row[ctx.P[i + 1][o2]] = row.get(ctx.P[i + 1][o2], 0.0) + 1.0
            model.add_row(row, "<=", 1.0, f"cuts_{i}_{o}_{o2}", "cut")
    return model


# ---------------------------------------------------------------------------
# extraction


def _value(sol: MilpSolution, name: str) -> float:
    try:
        return sol.values[name]
    except KeyError:
        raise ExtractionError(f"solution has no value for {name}") from None


def extract_input(ctx: EncodingContext, sol: MilpSolution) -> InputSignal:
    """Point value E_i at each step start, interior value D_i / d_i inside."""
    if not sol.has_solution:
        raise ExtractionError(f"cannot extract from a {sol.status} solution")
    a = ctx.automaton
    vm = a.var_map
    steps = []
    durations = _durations(ctx, sol)
    start_acc: list[float] = []
    for i in range(ctx.n):
        start = math.fsum(start_acc)
        dur = durations[i]
        point = {}
        for u in a.inputs:
            val = _value(sol, ctx.E[i][u])
            if vm[u].discrete:
                val = float(round(val))
            point[u] = val
        interior = None
        if dur > 0:
            interior = {}
            for u in a.inputs:
                if vm[u].discrete:
                    interior[u] = point[u]
                else:
                    interior[u] = _value(sol, ctx.D[i][u]) / dur
        steps.append(SignalStep(start, dur, point, interior))
        start_acc.append(dur)
    return InputSignal(tuple(steps))


def _durations(ctx: EncodingContext, sol: MilpSolution) -> list[float]:
    out = []
    for i in range(ctx.n):
        dv = _value(sol, ctx.d[i])
        out.append(0.0 if dv < ZERO_DURATION else dv)
    return out


def extract_run(ctx: EncodingContext, sol: MilpSolution) -> Run:
    if not sol.has_solution:
        raise ExtractionError(f"cannot extract from a {sol.status} solution")
    a = ctx.automaton
    vm = a.var_map
    states = []
    for i in range(ctx.n + 1):
        q = {}
        for v in a.internal:
            val = _value(sol, ctx.Q[i][v])
            if vm[v].discrete:
                r = round(val)
                if abs(val - r) > ROUND_TOL:
                    raise ExtractionError(f"state {i}: {v} = {val} is not integral")
                val = float(r)
            q[v] = val
        states.append(q)
    actions = []
    durations = _durations(ctx, sol)
    for i in range(ctx.n):
        on = []
        for o, name in ctx.P[i].items():
            val = _value(sol, name)
            if abs(val - round(val)) > ROUND_TOL:
                raise ExtractionError(f"step {i}: activation {o} = {val} is fractional")
            if round(val) == 1:
                on.append(o)
        jumps = [o for o in on if o in {j.name for j in a.jumps}]
        flows = [o for o in on if o not in jumps]
        if jumps:
            if len(jumps) != 1 or flows:
                raise ExtractionError(f"step {i}: no unique action (active: {on})")
            actions.append(JumpAction(jumps[0]))
            durations[i] = 0.0
            continue
        chosen = []
        for k in range(len(a.groups)):
            fk = [f for f in flows if a.flow(f).group == k]
            if len(fk) != 1:
                raise ExtractionError(f"step {i}: group {k} has {len(fk)} active flows")
            chosen.append(fk[0])
        if len(chosen) != len(flows):
            raise ExtractionError(f"step {i}: no unique action (active: {on})")
        actions.append(FlowSet(tuple(chosen)))
    return Run(tuple(states), tuple(actions), tuple(durations))


def size_formula(a: HybridAutomaton, n: int) -> int:
    """Variable count without indicators."""
    return (n + 1) * len(a.internal) + n * (len(a.inputs) + len(a.continuous_inputs) + 1 + len(a.jumps) + len(a.flows))
