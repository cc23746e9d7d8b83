"""In-memory linear hybrid automata with inputs, runs and input signals.

Everything here is immutable once built.  Discrete variables are integer
ranges ``0..c-1``; continuous ones are intervals.  Formulas are trees of
``TRUE``, :class:`LinearConstraint` (``sum coeffs * v >= rhs``), :class:`And`
and :class:`Or`.
"""
from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Any, Iterable, Iterator, Mapping, Sequence, Union

ROLES = ("internal-discrete", "internal-continuous", "input-discrete", "input-continuous")

INTEGRALITY_TOL = 1e-9


class ModelError(ValueError):
    """Invalid automaton document or construction; ``path`` points into the document."""

    def __init__(self, path: str, message: str):
        self.path = path
        self.message = message
        super().__init__(f"{path}: {message}" if path else message)


class FormulaError(KeyError):
    pass


class EffectError(ValueError):
    pass


# ---------------------------------------------------------------------------
# variables


@dataclass(frozen=True)
class VarDecl:
    name: str
    role: str
    lo: float
    hi: float
    labels: tuple[str, ...] | None = None
    units: str = ""

    @property
    def discrete(self) -> bool:
        return self.role.endswith("discrete")

    @property
    def internal(self) -> bool:
        return self.role.startswith("internal")

    @property
    def card(self) -> int:
        if not self.discrete:
            raise ValueError(f"{self.name} is continuous")
        return int(self.hi) + 1

    def contains(self, value: float, tol: float = 0.0) -> bool:
        if math.isnan(value):
            return False
        if value < self.lo - tol or value > self.hi + tol:
            return False
        if self.discrete and abs(value - round(value)) > max(tol, INTEGRALITY_TOL):
            return False
        return True


def discrete(name: str, card: int, *, internal: bool = True, labels: Sequence[str] | None = None) -> VarDecl:
    role = "internal-discrete" if internal else "input-discrete"
    return VarDecl(name, role, 0.0, float(card - 1), tuple(labels) if labels else None)


def continuous(name: str, lo: float, hi: float, *, internal: bool = True, units: str = "") -> VarDecl:
    role = "internal-continuous" if internal else "input-continuous"
    return VarDecl(name, role, float(lo), float(hi), None, units)


# ---------------------------------------------------------------------------
# formulas


class _TrueType:
    __slots__ = ()

    def __repr__(self) -> str:
        return "TRUE"

    def __reduce__(self):
        return (_true, ())


def _true() -> "_TrueType":
    return TRUE


TRUE = _TrueType()


@dataclass(frozen=True)
class LinearConstraint:
    """``sum(c * v for v, c in coeffs) >= rhs``."""

    coeffs: tuple[tuple[str, float], ...]
    rhs: float

    @staticmethod
    def of(coeffs: Mapping[str, float], rhs: float) -> "LinearConstraint":
        items = tuple(sorted((str(k), float(v)) for k, v in coeffs.items() if v != 0))
        return LinearConstraint(items, float(rhs))

    @property
    def coeff_map(self) -> dict[str, float]:
        return dict(self.coeffs)

    def lhs(self, assignment: Mapping[str, float]) -> float:
        total = 0.0
        for name, c in self.coeffs:
            try:
                total += c * assignment[name]
            except KeyError:
                raise FormulaError(f"variable {name!r} missing from assignment") from None
        return total


Lin = LinearConstraint


@dataclass(frozen=True)
class And:
    children: tuple["Formula", ...]


@dataclass(frozen=True)
class Or:
    children: tuple["Formula", ...]


Formula = Union[_TrueType, LinearConstraint, And, Or]


def ge(coeffs: Mapping[str, float], rhs: float) -> LinearConstraint:
    return LinearConstraint.of(coeffs, rhs)


def le(coeffs: Mapping[str, float], rhs: float) -> LinearConstraint:
    return LinearConstraint.of({k: -v for k, v in coeffs.items()}, -rhs)


def eq(coeffs: Mapping[str, float], rhs: float) -> And:
    return And((ge(coeffs, rhs), le(coeffs, rhs)))


def between(name: str, lo: float, hi: float) -> Formula:
    parts = []
    if lo > -math.inf:
        parts.append(ge({name: 1.0}, lo))
    if hi < math.inf:
        parts.append(le({name: 1.0}, hi))
    return conj(parts)


def conj(parts: Iterable[Formula]) -> Formula:
    kids = tuple(p for p in parts if p is not TRUE)
    if not kids:
        return TRUE
    if len(kids) == 1:
        return kids[0]
    return And(kids)


def disj(parts: Iterable[Formula]) -> Formula:
    kids = tuple(parts)
    if any(k is TRUE for k in kids):
        return TRUE
    if len(kids) == 1:
        return kids[0]
    return Or(kids)


def variables(f: Formula) -> set[str]:
    if f is TRUE:
        return set()
    if isinstance(f, LinearConstraint):
        return {n for n, _ in f.coeffs}
    out: set[str] = set()
    for c in f.children:
        out |= variables(c)
    return out


def eval_formula(f: Formula, assignment: Mapping[str, float], tol: float = 0.0) -> bool:
    """Truth value of ``f`` under ``assignment``; linear rows may be violated by ``tol``."""
    if f is TRUE:
        return True
    if isinstance(f, LinearConstraint):
        return f.lhs(assignment) >= f.rhs - tol
    if isinstance(f, And):
        # evaluate every child so that a missing variable is always reported
        results = [eval_formula(c, assignment, tol) for c in f.children]
        return all(results)
    if isinstance(f, Or):
        results = [eval_formula(c, assignment, tol) for c in f.children]
        return any(results)
    raise TypeError(f"not a formula: {f!r}")


def map_formula(f: Formula, leaf) -> Formula:
    """Rebuild ``f`` with every linear leaf replaced by ``leaf(row)``."""
    if f is TRUE:
        return TRUE
    if isinstance(f, LinearConstraint):
        return leaf(f)
    kids = tuple(map_formula(c, leaf) for c in f.children)
    return And(kids) if isinstance(f, And) else Or(kids)


def rename(f: Formula, mapping: Mapping[str, str]) -> Formula:
    return map_formula(
        f, lambda r: LinearConstraint(tuple(sorted((mapping.get(n, n), c) for n, c in r.coeffs)), r.rhs)
    )


def conjuncts(f: Formula) -> list[Formula]:
    if f is TRUE:
        return []
    if isinstance(f, And):
        out: list[Formula] = []
        for c in f.children:
            out.extend(conjuncts(c))
        return out
    return [f]


def split_condition(cond: Formula, internal: set[str], *, strict: bool = True) -> tuple[Formula, Formula]:
    """Split ``cond`` into its part over internal variables and its part over inputs.

    The split works conjunct by conjunct.  With ``strict`` a conjunct mixing both
    kinds raises; otherwise mixed conjuncts are dropped (a sound weakening of
    both halves, used for conflict analysis of jump guards).
    """
    q_parts: list[Formula] = []
    e_parts: list[Formula] = []
    for part in conjuncts(cond):
        names = variables(part)
        if not names:
            q_parts.append(part)
        elif names <= internal:
            q_parts.append(part)
        elif not (names & internal):
            e_parts.append(part)
        elif strict:
            raise ModelError("", f"condition mixes state and input variables in one conjunct: {sorted(names)}")
    return conj(q_parts), conj(e_parts)


# ---------------------------------------------------------------------------
# effects, jumps, flows


@dataclass(frozen=True)
class Assignment:
    target: str
    coeffs: tuple[tuple[str, float], ...]
    const: float = 0.0

    @staticmethod
    def of(target: str, coeffs: Mapping[str, float] | None = None, const: float = 0.0) -> "Assignment":
        items = tuple(sorted((k, float(v)) for k, v in (coeffs or {}).items() if v != 0))
        return Assignment(target, items, float(const))

    def value(self, valuation: Mapping[str, float]) -> float:
        total = self.const
        for name, c in self.coeffs:
            total += c * valuation[name]
        return total


@dataclass(frozen=True)
class Effect:
    assignments: tuple[Assignment, ...] = ()

    @property
    def targets(self) -> tuple[str, ...]:
        return tuple(a.target for a in self.assignments)


@dataclass(frozen=True)
class Jump:
    name: str
    cond: Formula
    effect: Effect


@dataclass(frozen=True)
class Flow:
    name: str
    group: int
    A: tuple[tuple[float, ...], ...]
    B: tuple[float, ...]
    cond: Formula


@dataclass(frozen=True)
class HybridAutomaton:
    vars: tuple[VarDecl, ...]
    init: tuple[tuple[str, float], ...]
    goal: Formula
    jumps: tuple[Jump, ...]
    flows: tuple[Flow, ...]
    groups: tuple[tuple[str, ...], ...]

    def __post_init__(self):
        _check_automaton(self)

    # lookups -------------------------------------------------------------
    @property
    def var_map(self) -> dict[str, VarDecl]:
        return {v.name: v for v in self.vars}

    def var(self, name: str) -> VarDecl:
        for v in self.vars:
            if v.name == name:
                return v
        raise KeyError(name)

    @property
    def internal(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.vars if v.internal)

    @property
    def inputs(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.vars if not v.internal)

    @property
    def discrete_state(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.vars if v.internal and v.discrete)

    @property
    def continuous_state(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.vars if v.internal and not v.discrete)

    @property
    def continuous_inputs(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.vars if not v.internal and not v.discrete)

    @property
    def init_state(self) -> dict[str, float]:
        return dict(self.init)

    def jump(self, name: str) -> Jump:
        for j in self.jumps:
            if j.name == name:
                return j
        raise KeyError(name)

    def flow(self, name: str) -> Flow:
        for f in self.flows:
            if f.name == name:
                return f
        raise KeyError(name)

    def flows_of(self, group: int) -> tuple[Flow, ...]:
        return tuple(f for f in self.flows if f.group == group)

    def flow_parts(self, flow: Flow) -> tuple[Formula, Formula]:
        return split_condition(flow.cond, set(self.internal))


def _check_automaton(a: HybridAutomaton) -> None:
    names = [v.name for v in a.vars]
    seen: set[str] = set()
    for i, v in enumerate(a.vars):
        if v.name in seen:
            raise ModelError(f"vars[{i}].name", f"duplicate variable {v.name!r}")
        seen.add(v.name)
        if v.role not in ROLES:
            raise ModelError(f"vars[{i}].role", f"unknown role {v.role!r}")
        if not (v.lo <= v.hi):
            raise ModelError(f"vars[{i}].domain", f"empty domain [{v.lo}, {v.hi}]")
        if v.discrete and (v.lo != 0 or v.hi != int(v.hi) or v.hi < 0):
            raise ModelError(f"vars[{i}].domain", "discrete domains are integer ranges 0..c-1")
        if not v.internal and not (math.isfinite(v.lo) and math.isfinite(v.hi)):
            raise ModelError(f"vars[{i}].domain", "input variables must be box-bounded")
    vm = {v.name: v for v in a.vars}
    internal = {v.name for v in a.vars if v.internal}
    inputs_disc = {v.name for v in a.vars if not v.internal and v.discrete}

    init = dict(a.init)
    for name in internal:
        if name not in init:
            raise ModelError("init", f"missing initial value for {name!r}")
    for name, value in a.init:
        if name not in internal:
            raise ModelError(f"init.{name}", "initial values are given for internal variables only")
        if not vm[name].contains(value):
            raise ModelError(f"init.{name}", f"value {value} outside domain")

    def check_formula(f: Formula, path: str, allowed: set[str]) -> None:
        for n in variables(f):
            if n not in vm:
                raise ModelError(path, f"unknown variable {n!r}")
            if n not in allowed:
                raise ModelError(path, f"variable {n!r} not allowed here")

    check_formula(a.goal, "goal", internal)

    cont = [v.name for v in a.vars if v.internal and not v.discrete]
    grouped: list[str] = [n for g in a.groups for n in g]
    if sorted(grouped) != sorted(cont) or len(set(grouped)) != len(grouped):
        raise ModelError("groups", "groups must partition the internal continuous variables")
    n_in = len(a.inputs)
    in_names = a.inputs
    for k, g in enumerate(a.groups):
        if not g:
            raise ModelError(f"groups[{k}]", "empty group")
        if not any(f.group == k for f in a.flows):
            raise ModelError(f"groups[{k}]", "group has no flow")

    fnames: set[str] = set()
    for i, f in enumerate(a.flows):
        path = f"flows[{i}]"
        if f.name in fnames:
            raise ModelError(f"{path}.name", f"duplicate flow {f.name!r}")
        fnames.add(f.name)
        if not (0 <= f.group < len(a.groups)):
            raise ModelError(f"{path}.group", f"no group {f.group}")
        size = len(a.groups[f.group])
        if len(f.A) != size or any(len(row) != n_in for row in f.A):
            raise ModelError(f"{path}.A", f"expected a {size}x{n_in} matrix")
        if len(f.B) != size:
            raise ModelError(f"{path}.B", f"expected {size} entries")
        for r, row in enumerate(f.A):
            for c, val in enumerate(row):
                if val != 0 and in_names[c] in inputs_disc:
                    raise ModelError(f"{path}.A", f"discrete input {in_names[c]!r} cannot drive a flow")
        check_formula(f.cond, f"{path}.cond", set(vm))
        try:
            _, econd = split_condition(f.cond, internal)
        except ModelError as exc:
            raise ModelError(f"{path}.cond", exc.message) from None
        if variables(econd) & inputs_disc:
            raise ModelError(f"{path}.cond", "flow conditions may not reference discrete inputs")

    jnames: set[str] = set()
    for i, j in enumerate(a.jumps):
        path = f"jumps[{i}]"
        if j.name in jnames or j.name in fnames:
            raise ModelError(f"{path}.name", f"duplicate operator name {j.name!r}")
        jnames.add(j.name)
        check_formula(j.cond, f"{path}.cond", set(vm))
        targets: set[str] = set()
        for k, asg in enumerate(j.effect.assignments):
            if asg.target not in internal:
                raise ModelError(f"{path}.effect[{k}].target", f"{asg.target!r} is not an internal variable")
            if asg.target in targets:
                raise ModelError(f"{path}.effect[{k}].target", f"{asg.target!r} assigned twice")
            targets.add(asg.target)
            for n, _ in asg.coeffs:
                if n not in vm:
                    raise ModelError(f"{path}.effect[{k}].coeffs", f"unknown variable {n!r}")


# ---------------------------------------------------------------------------
# actions, runs, signals


@dataclass(frozen=True)
class JumpAction:
    name: str

    @property
    def is_jump(self) -> bool:
        return True

    def to_json(self) -> dict:
        return {"jump": self.name}


@dataclass(frozen=True)
class FlowSet:
    flows: tuple[str, ...]

    @property
    def is_jump(self) -> bool:
        return False

    def to_json(self) -> dict:
        return {"flows": list(self.flows)}


Action = Union[JumpAction, FlowSet]


def action_from_json(doc: Mapping[str, Any]) -> Action:
    if "jump" in doc:
        return JumpAction(str(doc["jump"]))
    return FlowSet(tuple(str(f) for f in doc["flows"]))


def _frozen(d: Mapping[str, float]) -> Mapping[str, float]:
    return MappingProxyType(dict(d))


@dataclass(frozen=True)
class Run:
    states: tuple[Mapping[str, float], ...]
    actions: tuple[Action, ...]
    durations: tuple[float, ...]

    def __post_init__(self):
        if len(self.states) != len(self.actions) + 1 or len(self.actions) != len(self.durations):
            raise ValueError("a run needs |states| = |actions| + 1 = |durations| + 1")
        object.__setattr__(self, "states", tuple(_frozen(s) for s in self.states))

    @property
    def total_time(self) -> float:
        return math.fsum(self.durations)

    @property
    def times(self) -> list[float]:
        out = [0.0]
        acc = []
        for d in self.durations:
            acc.append(d)
            out.append(math.fsum(acc))
        return out

    def to_json(self) -> dict:
        return {
            "states": [dict(s) for s in self.states],
            "actions": [a.to_json() for a in self.actions],
            "durations": list(self.durations),
            "total_time": self.total_time,
        }

    @staticmethod
    def from_json(doc: Mapping[str, Any]) -> "Run":
        return Run(
            tuple({k: float(v) for k, v in s.items()} for s in doc["states"]),
            tuple(action_from_json(a) for a in doc["actions"]),
            tuple(float(d) for d in doc["durations"]),
        )


@dataclass(frozen=True)
class SignalStep:
    start: float
    duration: float
    point: Mapping[str, float]
    interior: Mapping[str, float] | None

    def __post_init__(self):
        object.__setattr__(self, "point", _frozen(self.point))
        if self.interior is not None:
            object.__setattr__(self, "interior", _frozen(self.interior))


@dataclass(frozen=True)
class InputSignal:
    """Piecewise-constant input: one point value per step start, one constant
    value on the open interior of every step of positive duration."""

    steps: tuple[SignalStep, ...]

    @property
    def total_time(self) -> float:
        if not self.steps:
            return 0.0
        last = self.steps[-1]
        return last.start + last.duration

    @property
    def breakpoints(self) -> list[float]:
        return [s.start for s in self.steps] + [self.total_time]

    def integral(self, i: int) -> dict[str, float]:
        s = self.steps[i]
        if s.interior is None or s.duration == 0:
            return {k: 0.0 for k in s.point}
        return {k: v * s.duration for k, v in s.interior.items()}

    def value_at(self, t: float) -> dict[str, float]:
        """e(t); at a breakpoint shared by several zero-length steps the last one wins."""
        hit = None
        for s in self.steps:
            if t == s.start:
                hit = s.point
            elif s.start < t < s.start + s.duration and s.interior is not None:
                return dict(s.interior)
        if hit is None:
            if self.steps and t == self.total_time:
                last = self.steps[-1]
                return dict(last.interior if last.interior is not None else last.point)
            raise ValueError(f"t={t} outside [0, {self.total_time}]")
        return dict(hit)

    def to_json(self) -> dict:
        return {
            "steps": [
                {
                    "start": s.start,
                    "duration": s.duration,
                    "point": dict(s.point),
                    "interior": None if s.interior is None else dict(s.interior),
                }
                for s in self.steps
            ]
        }

    @staticmethod
    def from_json(doc: Mapping[str, Any]) -> "InputSignal":
        steps = []
        for s in doc["steps"]:
            interior = s.get("interior")
            steps.append(
                SignalStep(
                    float(s["start"]),
                    float(s["duration"]),
                    {k: float(v) for k, v in s["point"].items()},
                    None if interior is None else {k: float(v) for k, v in interior.items()},
                )
            )
        return InputSignal(tuple(steps))


# ---------------------------------------------------------------------------
# semantics


def effect_values(e: Effect, valuation: Mapping[str, float], internal: Iterable[str]) -> dict[str, float]:
    out = {}
    for name in internal:
        out[name] = valuation[name]
    for asg in e.assignments:
        try:
            out[asg.target] = asg.value(valuation)
        except KeyError as exc:
            raise FormulaError(f"variable {exc.args[0]!r} missing from valuation") from None
    return out


def apply_effect(e: Effect, valuation: Mapping[str, float], automaton: HybridAutomaton) -> dict[str, float]:
    """Post-jump internal state; unassigned variables are copied."""
    out = effect_values(e, valuation, automaton.internal)
    vm = automaton.var_map
    for asg in e.assignments:
        decl = vm[asg.target]
        value = out[asg.target]
        if decl.discrete:
            if abs(value - round(value)) > INTEGRALITY_TOL:
                raise EffectError(f"{asg.target} := {value} is not an integer")
            value = float(round(value))
            out[asg.target] = value
        if not decl.contains(value, INTEGRALITY_TOL):
            raise EffectError(f"{asg.target} := {value} outside [{decl.lo}, {decl.hi}]")
    return out


# ---------------------------------------------------------------------------
# JSON document format

_INF_STRINGS = {"inf": math.inf, "+inf": math.inf, "infinity": math.inf, "-inf": -math.inf, "-infinity": -math.inf}


def _num(x: Any, path: str, *, default_inf: float | None = None) -> float:
    if x is None and default_inf is not None:
        return default_inf
    if isinstance(x, str) and x.lower() in _INF_STRINGS:
        return _INF_STRINGS[x.lower()]
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ModelError(path, f"expected a number, got {x!r}")
    return float(x)


def parse_formula(doc: Any, path: str = "formula") -> Formula:
    if doc is True or doc == "true":
        return TRUE
    if not isinstance(doc, Mapping) or len(doc) != 1:
        raise ModelError(path, "expected true, {lin}, {and} or {or}")
    (kind, body), = doc.items()
    if kind == "lin":
        if not isinstance(body, Mapping):
            raise ModelError(f"{path}.lin", "expected an object")
        coeffs = body.get("coeffs", {})
        if not isinstance(coeffs, Mapping):
            raise ModelError(f"{path}.lin.coeffs", "expected an object")
        cs = {str(k): _num(v, f"{path}.lin.coeffs.{k}") for k, v in coeffs.items()}
        rhs = _num(body.get("rhs", 0.0), f"{path}.lin.rhs")
        sense = body.get("sense", ">=")
        # strict inequalities are weakened to their closure
        if sense in (">=", ">"):
            return ge(cs, rhs)
        if sense in ("<=", "<"):
            return le(cs, rhs)
        if sense in ("=", "=="):
            return eq(cs, rhs)
        raise ModelError(f"{path}.lin.sense", f"unknown sense {sense!r}")
    if kind in ("and", "or"):
        if not isinstance(body, list) or not body:
            raise ModelError(f"{path}.{kind}", "expected a non-empty list")
        kids = tuple(parse_formula(c, f"{path}.{kind}[{i}]") for i, c in enumerate(body))
        return And(kids) if kind == "and" else Or(kids)
    raise ModelError(path, f"unknown formula kind {kind!r}")


def formula_to_json(f: Formula) -> Any:
    if f is TRUE:
        return True
    if isinstance(f, LinearConstraint):
        return {"lin": {"coeffs": dict(f.coeffs), "rhs": f.rhs, "sense": ">="}}
    key = "and" if isinstance(f, And) else "or"
    return {key: [formula_to_json(c) for c in f.children]}


def _parse_var(doc: Any, i: int) -> VarDecl:
    path = f"vars[{i}]"
    if not isinstance(doc, Mapping):
        raise ModelError(path, "expected an object")
    for key in ("name", "role", "domain"):
        if key not in doc:
            raise ModelError(path, f"missing {key!r}")
    name = doc["name"]
    if not isinstance(name, str) or not re.fullmatch(r"[^\s]+", name):
        raise ModelError(f"{path}.name", "names are non-empty strings without whitespace")
    role = doc["role"]
    if role not in ROLES:
        raise ModelError(f"{path}.role", f"role must be one of {ROLES}")
    dom = doc["domain"]
    units = str(doc.get("units", ""))
    if role.endswith("discrete"):
        labels = None
        if isinstance(dom, list):
            if not dom:
                raise ModelError(f"{path}.domain", "empty discrete domain")
            labels = tuple(str(x) for x in dom)
            card = len(labels)
        elif isinstance(dom, int) and not isinstance(dom, bool):
            card = dom
        else:
            raise ModelError(f"{path}.domain", "discrete domain is a cardinality or a list of labels")
        if card < 1:
            raise ModelError(f"{path}.domain", "cardinality must be >= 1")
        return VarDecl(name, role, 0.0, float(card - 1), labels, units)
    if not isinstance(dom, list) or len(dom) != 2:
        raise ModelError(f"{path}.domain", "continuous domain is [lo, hi]")
    lo = _num(dom[0], f"{path}.domain[0]", default_inf=-math.inf)
    hi = _num(dom[1], f"{path}.domain[1]", default_inf=math.inf)
    if lo > hi:
        raise ModelError(f"{path}.domain", f"lo {lo} > hi {hi}")
    return VarDecl(name, role, lo, hi, None, units)


def _value(decl: VarDecl, raw: Any, path: str) -> float:
    if decl.labels is not None and isinstance(raw, str):
        if raw not in decl.labels:
            raise ModelError(path, f"unknown label {raw!r} for {decl.name}")
        return float(decl.labels.index(raw))
    return _num(raw, path)


def load_automaton(doc: Any) -> HybridAutomaton:
    """Build and validate an automaton from its JSON document (dict, str or path-like text)."""
    if isinstance(doc, (str, bytes)):
        doc = json.loads(doc)
    if not isinstance(doc, Mapping):
        raise ModelError("", "automaton document must be an object")
    if "vars" not in doc or not isinstance(doc["vars"], list):
        raise ModelError("vars", "missing variable list")
    decls = tuple(_parse_var(v, i) for i, v in enumerate(doc["vars"]))
    vm = {}
    for i, d in enumerate(decls):
        if d.name in vm:
            raise ModelError(f"vars[{i}].name", f"duplicate variable {d.name!r}")
        vm[d.name] = d

    init_doc = doc.get("init", {})
    if not isinstance(init_doc, Mapping):
        raise ModelError("init", "expected an object")
    init = []
    for name, raw in init_doc.items():
        if name not in vm:
            raise ModelError(f"init.{name}", "unknown variable")
        init.append((name, _value(vm[name], raw, f"init.{name}")))
    order = {d.name: i for i, d in enumerate(decls)}
    init.sort(key=lambda kv: order[kv[0]])

    goal = parse_formula(doc.get("goal", True), "goal")

    cont = [d.name for d in decls if d.internal and not d.discrete]
    if "groups" in doc:
        groups_doc = doc["groups"]
        if not isinstance(groups_doc, list) or not all(isinstance(g, list) for g in groups_doc):
            raise ModelError("groups", "expected a list of name lists")
        groups = tuple(tuple(str(n) for n in g) for g in groups_doc)
        for k, g in enumerate(groups):
            for n in g:
                if n not in vm:
                    raise ModelError(f"groups[{k}]", f"unknown variable {n!r}")
    else:
        groups = (tuple(cont),) if cont else ()

    flows = []
    for i, fd in enumerate(doc.get("flows", [])):
        path = f"flows[{i}]"
        if not isinstance(fd, Mapping):
            raise ModelError(path, "expected an object")
        for key in ("name", "group"):
            if key not in fd:
                raise ModelError(path, f"missing {key!r}")
        group = fd["group"]
        if not isinstance(group, int) or isinstance(group, bool) or not (0 <= group < len(groups)):
            raise ModelError(f"{path}.group", f"no group {group!r}")
        size = len(groups[group])
        n_in = sum(1 for d in decls if not d.internal)
        A_doc = fd.get("A", [[0.0] * n_in for _ in range(size)])
        if not isinstance(A_doc, list) or len(A_doc) != size or any(
            not isinstance(r, list) or len(r) != n_in for r in A_doc
        ):
            raise ModelError(f"{path}.A", f"expected a {size}x{n_in} matrix")
        A = tuple(tuple(_num(x, f"{path}.A[{r}][{c}]") for c, x in enumerate(row)) for r, row in enumerate(A_doc))
        B_doc = fd.get("B", [0.0] * size)
        if not isinstance(B_doc, list) or len(B_doc) != size:
            raise ModelError(f"{path}.B", f"expected {size} entries")
        B = tuple(_num(x, f"{path}.B[{r}]") for r, x in enumerate(B_doc))
        cond = parse_formula(fd.get("cond", True), f"{path}.cond")
        flows.append(Flow(str(fd["name"]), group, A, B, cond))

    jumps = []
    for i, jd in enumerate(doc.get("jumps", [])):
        path = f"jumps[{i}]"
        if not isinstance(jd, Mapping) or "name" not in jd:
            raise ModelError(path, "expected an object with a name")
        cond = parse_formula(jd.get("cond", True), f"{path}.cond")
        asgs = []
        for k, ad in enumerate(jd.get("effect", [])):
            apath = f"{path}.effect[{k}]"
            if not isinstance(ad, Mapping) or "target" not in ad:
                raise ModelError(apath, "expected an object with a target")
            target = str(ad["target"])
            coeffs = ad.get("coeffs", {})
            if not isinstance(coeffs, Mapping):
                raise ModelError(f"{apath}.coeffs", "expected an object")
            const_raw = ad.get("const", 0.0)
            if target in vm and isinstance(const_raw, str):
                const = _value(vm[target], const_raw, f"{apath}.const")
            else:
                const = _num(const_raw, f"{apath}.const")
            asgs.append(
                Assignment.of(target, {str(n): _num(c, f"{apath}.coeffs.{n}") for n, c in coeffs.items()}, const)
            )
        jumps.append(Jump(str(jd["name"]), cond, Effect(tuple(asgs))))

    return HybridAutomaton(decls, tuple(init), goal, tuple(jumps), tuple(flows), groups)


def serialize(a: HybridAutomaton) -> dict:
    def dom(v: VarDecl):
        if v.discrete:
            return list(v.labels) if v.labels is not None else v.card
        return [None if v.lo == -math.inf else v.lo, None if v.hi == math.inf else v.hi]

    def var_doc(v: VarDecl) -> dict:
        d = {"name": v.name, "role": v.role, "domain": dom(v)}
        if v.units:
            d["units"] = v.units
        return d

    return {
        "vars": [var_doc(v) for v in a.vars],
        "init": dict(a.init),
        "goal": formula_to_json(a.goal),
        "groups": [list(g) for g in a.groups],
        "flows": [
            {
                "name": f.name,
                "group": f.group,
                "A": [list(r) for r in f.A],
                "B": list(f.B),
                "cond": formula_to_json(f.cond),
            }
            for f in a.flows
        ],
        "jumps": [
            {
                "name": j.name,
                "cond": formula_to_json(j.cond),
                "effect": [{"target": s.target, "coeffs": dict(s.coeffs), "const": s.const} for s in j.effect.assignments],
            }
            for j in a.jumps
        ],
    }


def load_file(path) -> HybridAutomaton:
    with open(path, encoding="utf-8") as fh:
        return load_automaton(json.load(fh))


def iter_operators(a: HybridAutomaton) -> Iterator[Union[Jump, Flow]]:
    yield from a.jumps
    yield from a.flows
