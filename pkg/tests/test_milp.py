import math
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st
from scipy.optimize import linprog

from hybridplan.encoder import encode
from hybridplan.domains.toy import INST_A, INST_B
from hybridplan.milp.backends import ExternalBackend, HighsBackend, ReferenceBackend, read_solution_file
from hybridplan.milp.kernel import KERNEL
from hybridplan.milp.lp import LPData, solve_lp, solve_model_lp
from hybridplan.milp.lpformat import export_lp, parse_lp
from hybridplan.milp.model import MilpError, MilpModel, check_solution, rows_to_dense
from hybridplan.milp.reference import CapExceeded, reference_solve
from hybridplan.model import load_automaton

STUB = f"{sys.executable} -m hybridplan.milp.stub_solver {{lp}} {{sol}}"


def small(kind_x="continuous"):
    m = MilpModel()
    m.add_var("x", kind_x, 0, 10)
    return m


# reference solver examples ------------------------------------------------------

def test_min_x():
    m = small()
    m.add_row({"x": 1}, ">=", 1)
    m.set_objective({"x": 1})
    s = reference_solve(m)
    assert s.status == "optimal" and s.values["x"] == 1 and s.objective == 1


def test_contradiction_is_infeasible():
    m = small()
    m.add_var("y", "continuous", -math.inf, math.inf)
    m.add_row({"y": 1}, ">=", 1)
    m.add_row({"y": -1}, ">=", 1)
    assert reference_solve(m).status == "infeasible"


def test_disjunction_picks_cheaper_side():
    # x >= 1 or -x >= 1 on [-10, 10], min x: the second side gives -10
    m = MilpModel()
    m.add_var("x", "continuous", -10, 10)
    m.add_var("a1", "binary")
    m.add_var("a2", "binary")
    m.add_row({"x": 1, "a1": -11}, ">=", -10)
    m.add_row({"x": -1, "a2": -11}, ">=", -10)
    m.add_row({"a1": 1, "a2": 1}, ">=", 1)
    m.set_objective({"x": 1})
    s = reference_solve(m)
    assert s.objective == -10 and s.values["a2"] == 1


def test_cap_and_exact_objective():
    m = MilpModel()
    for i in range(4):
        m.add_var(f"b{i}", "binary")
    with pytest.raises(CapExceeded):
        reference_solve(m, int_cap=3)
    m2 = small()
    m2.add_row({"x": 3}, ">=", 1)
    m2.set_objective({"x": 1})
    s = reference_solve(m2)
    assert s.exact["objective"] == "1/3"


def test_unbounded_lp_is_an_error():
    m = MilpModel()
    m.add_var("x", "continuous", -math.inf, math.inf)
    m.set_objective({"x": 1})
    with pytest.raises(MilpError):
        solve_model_lp(m)


# random MILPs against HiGHS --------------------------------------------------------

@st.composite
def milps(draw):
    m = MilpModel()
    nc = draw(st.integers(1, 3))
    ni = draw(st.integers(0, 3))
    for j in range(nc):
        m.add_var(f"c{j}", "continuous", draw(st.sampled_from([-5, 0])), draw(st.sampled_from([3, 5, 10])))
    for j in range(ni):
        kind = draw(st.sampled_from(["binary", "integer"]))
        m.add_var(f"i{j}", kind, 0, 3)
    names = [v.name for v in m.vars]
    small_int = st.integers(-3, 3)
    for r in range(draw(st.integers(1, 4))):
        coeffs = {n: float(draw(small_int)) for n in names}
        m.add_row(coeffs, draw(st.sampled_from([">=", "<=", "="])), float(draw(st.integers(-6, 6))))
    m.set_objective({n: float(draw(small_int)) for n in names}, float(draw(st.integers(-2, 2))))
    return m


@given(milps())
@settings(max_examples=120, deadline=None, suppress_health_check=[HealthCheck.too_slow])
def test_reference_agrees_with_highs(m):
    a = reference_solve(m)
    b = HighsBackend().solve(m)
    assert a.status == b.status
    if a.status == "optimal":
        assert abs(a.objective - b.objective) <= 1e-6 * (1 + abs(a.objective))
        assert check_solution(m, a.values) == []


@given(milps())
@settings(max_examples=80, deadline=None)
def test_lp_round_trip(m):
    doc = export_lp(m)
    back = parse_lp(doc.text)
    assert [(v.name, v.kind, v.lo, v.hi) for v in back.vars] == [(v.name, v.kind, v.lo, v.hi) for v in m.vars]
    assert [(r.coeff_map, r.sense, r.rhs) for r in back.rows] == [(r.coeff_map, r.sense, r.rhs) for r in m.rows]
    assert back.objective == m.objective and back.obj_const == m.obj_const
    assert export_lp(back).text == doc.text


@given(milps())
@settings(max_examples=80, deadline=None)
def test_incumbents_never_increase(m):
    log = []
    s = reference_solve(m, callback=lambda t, obj: log.append(obj))
    assert all(b <= a for a, b in zip(log, log[1:]))
    if s.status == "optimal":
        assert log and log[-1] == s.objective


def _random_lp(rng):
    m = MilpModel()
    n = int(rng.integers(2, 6))
    for j in range(n):
        m.add_var(f"x{j}", "continuous", float(rng.integers(-4, 1)), float(rng.integers(1, 6)))
    for _ in range(int(rng.integers(1, 5))):
        m.add_row({f"x{j}": float(rng.integers(-3, 4)) for j in range(n)}, str(rng.choice([">=", "<=", "="])),
                  float(rng.integers(-4, 5)))
    m.set_objective({f"x{j}": float(rng.integers(-3, 4)) for j in range(n)})
    return m


def test_lp_matches_linprog():
    rng = np.random.default_rng(7)
    for _ in range(150):
        m = _random_lp(rng)
        res = solve_model_lp(m)
        A_ub, b_ub, A_eq, b_eq, bounds, c = [], [], [], [], [], []
        for r in m.rows:
            row = [r.coeff_map.get(v.name, 0.0) for v in m.vars]
            if r.sense == ">=":
                A_ub.append([-x for x in row]); b_ub.append(-r.rhs)
            elif r.sense == "<=":
                A_ub.append(row); b_ub.append(r.rhs)
            else:
                A_eq.append(row); b_eq.append(r.rhs)
        ref = linprog([m.objective.get(v.name, 0.0) for v in m.vars], A_ub=A_ub or None, b_ub=b_ub or None,
                      A_eq=A_eq or None, b_eq=b_eq or None, bounds=[(v.lo, v.hi) for v in m.vars], method="highs")
        if ref.status == 2:
            assert res.status == "infeasible"
        else:
            assert res.status == "optimal" and abs(float(res.objective) - ref.fun) < 1e-7


def test_python_and_compiled_kernels_agree():
    rng = np.random.default_rng(11)
    for _ in range(60):
        data = LPData(_random_lp(rng))
        a = solve_lp(data, kernel="python")
        b = solve_lp(data, kernel=KERNEL)
        assert a.status == b.status
        if a.status == "optimal":
            assert a.objective == b.objective  # both certified exactly


def test_fallback_kernel_selected_by_env():
    code = "from hybridplan.milp.kernel import KERNEL; print(KERNEL)"
    env = dict(os.environ, HYBRIDPLAN_KERNEL="python")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


# LP format --------------------------------------------------------------------

def test_empty_model_lp():
    text = export_lp(MilpModel()).text
    lines = [l for l in text.splitlines() if not l.startswith("\\")]
    assert lines == ["Minimize", " obj: 0", "Subject To", "Bounds", "End"]
    assert parse_lp(text).vars == []


def test_name_mangling_round_trip():
    m = MilpModel()
    m.add_var("has space", "continuous", 0, 1)
    m.add_var("1starts_with_digit", "integer", 0, 4)
    m.add_row({"has space": 1, "1starts_with_digit": 2}, "<=", 3)
    m.set_objective({"has space": -1})
    doc = export_lp(m)
    assert doc.mangled
    back = parse_lp(doc.text)
    assert [v.name for v in back.vars] == ["has space", "1starts_with_digit"]
    raw = parse_lp(doc.text, restore_names=False)
    assert all(" " not in v.name for v in raw.vars)


def test_inst_a_lp_reparses_and_solves_the_same():
    model, _ = encode(load_automaton(INST_A), 1)
    back = parse_lp(export_lp(model).text)
    assert reference_solve(back).objective == reference_solve(model).objective == 5.0


# backends -----------------------------------------------------------------------

def test_external_stub_two_incumbents():
    model, _ = encode(load_automaton(INST_B), 3)
    seen = []
    s = ExternalBackend(STUB).solve(model, None, lambda t, obj: seen.append(obj))
    assert s.status == "optimal" and abs(s.objective - 5.0) < 1e-9
    assert len(seen) == 2 and seen[0] >= seen[1] == s.objective


def test_external_infeasible_and_missing_command(tmp_path, monkeypatch):
    model, _ = encode(load_automaton(INST_B), 1)
    assert ExternalBackend(STUB).solve(model).status == "infeasible"
    monkeypatch.delenv("HYBRIDPLAN_SOLVER_CMD", raising=False)
    with pytest.raises(MilpError):
        ExternalBackend().solve(model)


def test_solution_file_reader(tmp_path):
    p = tmp_path / "s.sol"
    p.write_text("# comment\nstatus optimal\nobjective 2.5\nx0 1.5\n", encoding="utf-8")
    assert read_solution_file(p, {"x0": "x[0]"}) == ("optimal", 2.5, {"x[0]": 1.5})
    p.write_text("x 1 2\n", encoding="utf-8")
    with pytest.raises(MilpError):
        read_solution_file(p)


def test_backends_reject_bad_answers(tmp_path):
    # a "solver" that claims x = 0 for min x s.t. x >= 1
    m = small()
    m.add_row({"x": 1}, ">=", 1)
    m.set_objective({"x": 1})
    liar = tmp_path / "liar.sh"
    liar.write_text("#!/bin/sh\nprintf 'status optimal\\nobjective 0\\nx 0\\n' > \"$2\"\n", encoding="utf-8")
    liar.chmod(0o755)
    with pytest.raises(MilpError):
        ExternalBackend(f"{liar} {{lp}} {{sol}}").solve(m)


def test_dense_rows_shape():
    model, _ = encode(load_automaton(INST_A), 1)
    A, lo, hi = rows_to_dense(model)[:3]
    assert A.shape == (len(model.rows), len(model.vars))


def test_zero_row_lp_on_both_kernels():
    m = MilpModel()
    m.add_var("x", "continuous", 0, 10)
    m.add_var("u", "continuous", -2, 2)
    m.set_objective({"x": 1, "u": 1})
    for k in {"python", KERNEL}:
        res = solve_lp(LPData(m), kernel=k)
        assert res.status == "optimal" and res.objective == -2
