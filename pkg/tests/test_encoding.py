import itertools
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hybridplan.encoding import (
    Guard,
    MPolicy,
    SharingMismatch,
    UnboundedBigM,
    emit,
    is_cnf,
    lower_disjunction,
    lower_formula,
    normalize,
    relax,
    to_cnf,
)
from hybridplan.milp.model import MilpModel
from hybridplan.milp.reference import reference_solve
from hybridplan.model import TRUE, And, LinearConstraint, Or, eval_formula, ge, le

from conftest import VARS, formulas

x1 = ge({"x": 1}, 1)
nx1 = ge({"x": -1}, 1)
BOX = {v: (-2.5, 2.5) for v in VARS}
GRID = [k * 0.25 for k in range(-10, 11)]  # 21 exact binary fractions per axis


def pinned_feasible(lowered, point):
    m = MilpModel()
    for v, val in point.items():
        m.add_var(v, "continuous", val, val)
    emit(m, lowered)
    return reference_solve(m).status == "optimal"


def count_or_children(f):
    f = normalize(f)
    if f is TRUE or isinstance(f, LinearConstraint):
        return 0
    own = len(f.children) if isinstance(f, Or) else 0
    return own + sum(count_or_children(c) for c in f.children)


# CNF -------------------------------------------------------------------------

def test_cnf_distributes():
    a, b, c = ge({"x": 1}, 0), ge({"y": 1}, 0), ge({"z": 1}, 0)
    assert to_cnf(Or((a, And((b, c))))) == And((Or((a, b)), Or((a, c))))


def test_cnf_of_cnf_and_true():
    a, b, c = ge({"x": 1}, 0), ge({"y": 1}, 0), ge({"z": 1}, 0)
    f = And((Or((a, b)), c))
    assert to_cnf(f) == f
    assert to_cnf(TRUE) == And(())


@given(formulas(), st.fixed_dictionaries({v: st.sampled_from(GRID) for v in VARS}))
@settings(max_examples=200, deadline=None)
def test_cnf_is_equivalent(f, p):
    g = to_cnf(f)
    assert is_cnf(g)
    assert eval_formula(g, p) == eval_formula(f, p)


# disjunctions ------------------------------------------------------------------

def test_two_disjuncts_fixed_m():
    low = lower_disjunction([x1, nx1], MPolicy(1e6, tight=False), {"x": (-math.inf, math.inf)})
    leaves = [r for r in low.rows if r.kind == "leaf"]
    sel = [r for r in low.rows if r.kind == "select"]
    a1, a2 = low.indicators
    # x + 1e6 (1 - a1) >= 1  <=>  x - 1e6 a1 >= 1 - 1e6
    assert leaves[0].coeffs == {"x": 1.0, a1: -1e6} and leaves[0].rhs == 1 - 1e6
    assert leaves[1].coeffs == {"x": -1.0, a2: -1e6} and leaves[1].rhs == 1 - 1e6
    assert sel[0].coeffs == {a1: 1.0, a2: 1.0} and sel[0].rhs == 1.0
    assert low.bigM == [1e6, 1e6]


def test_single_disjunct_has_no_indicator():
    low = lower_disjunction([ge({"x": 1}, 3)], MPolicy(), {"x": (0, 10)})
    assert low.indicators == [] and len(low.rows) == 1
    assert low.rows[0].coeffs == {"x": 1.0} and low.rows[0].rhs == 3


def test_tight_m_from_box():
    low = lower_disjunction([ge({"x": 1}, 1), ge({"x": 1}, 2)], MPolicy(), {"x": (0, 10)})
    assert low.bigM == [1.0, 2.0]


def test_unbounded_m_is_reported():
    with pytest.raises(UnboundedBigM):
        lower_disjunction([x1, nx1], MPolicy(None), {"x": (0, math.inf)})
    # the fallback only kicks in where the box is open
    low = lower_disjunction([x1, nx1], MPolicy(1e6), {"x": (0, math.inf)})
    assert low.bigM == [1.0, 1e6]


# general lowering ----------------------------------------------------------------

def test_conjunction_needs_no_indicators():
    low = lower_formula(And((ge({"x": 1}, 0), ge({"y": 1}, 0))), MPolicy(), BOX)
    assert len(low.rows) == 2 and low.indicators == []


def test_or_of_ands():
    f = Or((And((ge({"x": 1}, 0), ge({"y": 1}, 0))), And((ge({"x": -1}, 0), ge({"y": -1}, 0)))))
    low = lower_formula(f, MPolicy(), BOX)
    assert len(low.indicators) == 2
    assert sum(r.kind == "leaf" for r in low.rows) == 4
    assert sum(r.kind == "select" for r in low.rows) == 1


def test_nonconvex_free_space_on_grid():
    # an L-shaped region: (left strip) or (bottom strip), minus nothing else
    left = And((ge({"x": 1}, 0), le({"x": 1}, 3), ge({"y": 1}, 0), le({"y": 1}, 9)))
    bottom = And((ge({"x": 1}, 0), le({"x": 1}, 9), ge({"y": 1}, 0), le({"y": 1}, 3)))
    f = Or((left, bottom))
    low = lower_formula(f, MPolicy(), {"x": (0, 9), "y": (0, 9)})
    for x, y in itertools.product(range(10), range(10)):
        p = {"x": float(x), "y": float(y)}
        assert pinned_feasible(low, p) == eval_formula(f, p)


def test_guarded_lowering_is_free_when_off():
    f = Or((ge({"x": 1}, 2), ge({"x": -1}, 2)))
    low = lower_formula(f, MPolicy(), {"x": (-1, 1)}, guard=Guard.of("g"))
    for g in (0.0, 1.0):
        m = MilpModel()
        m.add_var("x", "continuous", 0.0, 0.0)
        m.add_var("g", "integer", g, g)
        emit(m, low)
        assert (reference_solve(m).status == "optimal") == (g == 0.0)


def test_sharing():
    f = Or((ge({"x": 1}, 1), ge({"x": -1}, 1)))
    first = lower_formula(f, MPolicy(), BOX, prefix="a")
    again = lower_formula(f, MPolicy(), {"x2": (-2.5, 2.5)}, rowmap=lambda r: ({"x2": r.coeffs[0][1]}, r.rhs), shared=first)
    assert again.indicators == []
    assert not any(r.kind == "select" for r in again.rows)
    used = {v for r in again.rows for v in r.coeffs}
    assert set(first.indicators) <= used
    with pytest.raises(SharingMismatch):
        lower_formula(Or((x1, nx1, x1)), MPolicy(), BOX, shared=first)


@given(formulas())
@settings(max_examples=150, deadline=None)
def test_indicator_count(f):
    low = lower_formula(f, MPolicy(), BOX)
    assert len(low.indicators) == count_or_children(f)
    used = {v for r in low.rows for v in r.coeffs}
    assert all(a in used for a in low.indicators)


@given(formulas(), st.fixed_dictionaries({v: st.floats(-2.5, 2.5) for v in VARS}))
@settings(max_examples=150, deadline=None)
def test_bound_m_is_valid(f, p):
    # with its indicator off, every relaxed leaf row holds anywhere in the box
    low = lower_formula(f, MPolicy(None), BOX, guard=Guard.of("g"))
    for r in low.rows:
        if r.kind != "leaf":
            continue
        act = sum(c * (p[v] if v in p else 0.0) for v, c in r.coeffs.items())
        assert act >= r.rhs - 1e-9


@given(formulas(), st.lists(st.fixed_dictionaries({v: st.sampled_from(GRID) for v in VARS}), min_size=8, max_size=8))
@settings(max_examples=60, deadline=None)
def test_lowering_matches_evaluation(f, pts):
    low = lower_formula(f, MPolicy(), BOX)
    for p in pts:
        assert pinned_feasible(low, p) == eval_formula(f, p)


def test_relax_without_guard_is_plain():
    r = relax({"x": 2.0, "y": 0.0}, 1.0, None, MPolicy(), BOX)
    assert r.coeffs == {"x": 2.0} and r.M == 0.0
