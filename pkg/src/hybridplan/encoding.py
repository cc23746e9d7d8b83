"""Lowering formula trees to linear rows with binary indicators.

A formula is lowered under a *guard*: an affine expression ``g`` over binary
model variables that equals 1 when the formula must hold and 0 when it may be
ignored.  A linear leaf ``G.V >= H`` becomes ``G.V + M(1 - g) >= H``.  An
``Or`` node gets one fresh binary ``alpha_r`` per child; child ``r`` is lowered
under guard ``alpha_r`` and one row ``sum_r alpha_r >= g`` picks a child.
``And`` just lowers its children under the same guard.  Without a guard
(``g = 1``) leaves are plain rows and the selection row is ``sum alpha >= 1``.

M is computed per row from the variable box (``H - min_box G.V``); when a
bound involved is infinite the policy's fallback constant is used instead.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

from .model import TRUE, And, Formula, LinearConstraint, Or, conj

DEFAULT_BIG_M = 1e6


class UnboundedBigM(ValueError):
    pass


class SharingMismatch(ValueError):
    pass


@dataclass(frozen=True)
class MPolicy:
    fallback: float | None = DEFAULT_BIG_M
    tight: bool = True

    def big_m(self, coeffs: Mapping[str, float], rhs: float, bounds: Mapping[str, tuple[float, float]]) -> float:
        """Smallest M with ``G.V + M >= H`` everywhere on the box."""
        if self.tight:
            low = 0.0
            for v, c in coeffs.items():
                lo, hi = bounds[v]
                b = lo if c > 0 else hi
                if not math.isfinite(b):
                    low = -math.inf
                    break
                low += c * b
            if math.isfinite(low):
                return max(0.0, rhs - low)
        if self.fallback is None:
            raise UnboundedBigM(f"no finite M for row {dict(coeffs)} >= {rhs}")
        return float(self.fallback)


@dataclass(frozen=True)
class Guard:
    """Affine activation expression ``const + sum coeffs``."""

    coeffs: tuple[tuple[str, float], ...] = ()
    const: float = 0.0

    @staticmethod
    def of(var: str) -> "Guard":
        return Guard(((var, 1.0),), 0.0)

    @staticmethod
    def none_of(vars_) -> "Guard":
        """1 - sum(vars): active when none of ``vars`` is set."""
        return Guard(tuple((v, -1.0) for v in vars_), 1.0)


@dataclass
class LoweredRow:
    coeffs: dict[str, float]
    sense: str
    rhs: float
    M: float = 0.0
    kind: str = "leaf"  # leaf | select


@dataclass
class LoweredFormula:
    rows: list[LoweredRow] = field(default_factory=list)
    indicators: list[str] = field(default_factory=list)
    # Or-node path -> indicator names, for reuse by a structurally equal formula
    or_nodes: dict[tuple[int, ...], list[str]] = field(default_factory=dict)

    @property
    def bigM(self) -> list[float]:
        return [r.M for r in self.rows if r.kind == "leaf"]


# ---------------------------------------------------------------------------
# normal forms


def normalize(f: Formula) -> Formula:
    """Flatten nested And/Or, drop TRUE conjuncts, collapse single-child nodes."""
    if f is TRUE or isinstance(f, LinearConstraint):
        return f
    kids = [normalize(c) for c in f.children]
    if isinstance(f, And):
        flat: list[Formula] = []
        for k in kids:
            if k is TRUE:
                continue
            flat.extend(k.children if isinstance(k, And) else [k])
        return conj(flat)
    flat = []
    for k in kids:
        if k is TRUE:
            return TRUE
        flat.extend(k.children if isinstance(k, Or) else [k])
    return flat[0] if len(flat) == 1 else Or(tuple(flat))


def to_cnf(f: Formula) -> Formula:
    """Equivalent And-of-Or-of-Lin; TRUE becomes the empty conjunction ``And(())``."""
    clauses = _clauses(normalize(f))
    out = []
    for cl in clauses:
        out.append(cl[0] if len(cl) == 1 else Or(tuple(cl)))
    return And(tuple(out))


def _clauses(f: Formula) -> list[list[LinearConstraint]]:
    if f is TRUE:
        return []
    if isinstance(f, LinearConstraint):
        return [[f]]
    if isinstance(f, And):
        out = []
        for c in f.children:
            out.extend(_clauses(c))
        return out
    # Or: distribute over the children's clause sets
    acc: list[list[LinearConstraint]] = [[]]
    for c in f.children:
        cls = _clauses(c)
        if not cls:  # a TRUE disjunct
            return []
        acc = [a + b for a, b in itertools.product(acc, cls)]
    return [_dedup(cl) for cl in acc]


def _dedup(cl):
    seen = []
    for x in cl:
        if x not in seen:
            seen.append(x)
    return seen


def is_cnf(f: Formula) -> bool:
    if f is TRUE or isinstance(f, LinearConstraint):
        return True
    if isinstance(f, Or):
        return all(isinstance(c, LinearConstraint) for c in f.children)
    return all(isinstance(c, LinearConstraint) or (isinstance(c, Or) and is_cnf(c)) for c in f.children)


# ---------------------------------------------------------------------------
# lowering

RowMap = Callable[[LinearConstraint], tuple[dict[str, float], float]]


def identity_map(rename: Mapping[str, str] | None = None) -> RowMap:
    def rm(row: LinearConstraint):
        if rename is None:
            return dict(row.coeffs), row.rhs
        out: dict[str, float] = {}
        for v, c in row.coeffs:
            k = rename[v]
            out[k] = out.get(k, 0.0) + c
        return out, row.rhs

    return rm


def relax(
    coeffs: Mapping[str, float],
    rhs: float,
    guard: Guard | None,
    policy: MPolicy,
    bounds: Mapping[str, tuple[float, float]],
) -> LoweredRow:
    """``coeffs.V >= rhs`` when ``guard`` = 1, free when ``guard`` = 0."""
    coeffs = {v: c for v, c in coeffs.items() if c != 0}
    if guard is None:
        return LoweredRow(dict(coeffs), ">=", rhs, 0.0)
    M = policy.big_m(coeffs, rhs, bounds)
    out = dict(coeffs)
    if M == 0:
        # the row holds on the whole box; nothing to relax
        return LoweredRow(out, ">=", rhs, 0.0)
    # G.V + M(1 - g) >= H  with g = const + sum(c v)
    for v, c in guard.coeffs:
        out[v] = out.get(v, 0.0) - M * c
    return LoweredRow(out, ">=", rhs - M * (1.0 - guard.const), M)


def lower_formula(
    f: Formula,
    policy: MPolicy,
    bounds: Mapping[str, tuple[float, float]],
    *,
    prefix: str = "f",
    guard: Guard | None = None,
    rowmap: RowMap | None = None,
    shared: LoweredFormula | None = None,
) -> LoweredFormula:
    """Lower ``f`` (see module docstring).

    ``bounds`` maps every model variable in the mapped rows to its box;
    guard variables need not be listed.  With ``shared`` the
    Or nodes reuse the indicators of an earlier lowering of the same formula
    shape and their selection rows are not repeated.
    """
    rowmap = rowmap or identity_map()
    out = LoweredFormula()
    def walk(node: Formula, g: Guard | None, path: tuple[int, ...]):
        if node is TRUE:
            return
        if isinstance(node, LinearConstraint):
            coeffs, rhs = rowmap(node)
            out.rows.append(relax(coeffs, rhs, g, policy, bounds))
            return
        if isinstance(node, And):
            for i, c in enumerate(node.children):
                walk(c, g, path + (i,))
            return
        kids = node.children
        if shared is not None:
            if path not in shared.or_nodes or len(shared.or_nodes[path]) != len(kids):
                raise SharingMismatch(f"no matching Or node at {path} in the shared lowering")
            alphas = shared.or_nodes[path]
        else:
            tag = ".".join(str(p) for p in path) or "r"
            alphas = [f"alpha_{prefix}_{tag}_{r}" for r in range(len(kids))]
            out.indicators.extend(alphas)
        out.or_nodes[path] = alphas
        for r, c in enumerate(kids):
            walk(c, Guard.of(alphas[r]), path + (r,))
        if shared is None:
            sel = {a: 1.0 for a in alphas}
            rhs = 1.0
            if g is not None:
                for v, c in g.coeffs:
                    sel[v] = sel.get(v, 0.0) - c
                rhs = g.const
            out.rows.append(LoweredRow(sel, ">=", rhs, 0.0, "select"))

    walk(normalize(f), guard, ())
    if shared is None:
        used = {v for r in out.rows for v in r.coeffs}
        # an indicator whose child rows all vanished (M = 0) still sits in its select row
        assert all(a in used for a in out.indicators)
    return out


def lower_disjunction(
    disjuncts: list[LinearConstraint],
    policy: MPolicy,
    bounds: Mapping[str, tuple[float, float]],
    *,
    prefix: str = "d",
) -> LoweredFormula:
    if not disjuncts:
        raise ValueError("need at least one disjunct")
    f = disjuncts[0] if len(disjuncts) == 1 else Or(tuple(disjuncts))
    return lower_formula(f, policy, bounds, prefix=prefix)


def emit(model, lowered: LoweredFormula, *, name: str = "", tag: str = "") -> int:
    """Add ``lowered``'s indicators (if new) and rows to a MilpModel.  Returns rows added."""
    for a in lowered.indicators:
        if not model.has_var(a):
            model.add_var(a, "binary")
    k = 0
    for r in lowered.rows:
        if not r.coeffs and r.rhs <= 0:
            continue  # 0 >= rhs holds trivially
        model.add_row(r.coeffs, r.sense, r.rhs, f"{name}_{k}" if name else "", tag)
        k += 1
    return k
