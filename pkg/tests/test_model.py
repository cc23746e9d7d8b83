import copy
import json
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hybridplan.domains.mars import gen_mars
from hybridplan.domains.toy import INST_A, INST_B
from hybridplan.model import (
    TRUE,
    And,
    Assignment,
    Effect,
    FlowSet,
    InputSignal,
    JumpAction,
    ModelError,
    Run,
    SignalStep,
    apply_effect,
    eval_formula,
    formula_to_json,
    load_automaton,
    parse_formula,
    serialize,
    split_condition,
)

from conftest import VARS, formulas

points = st.fixed_dictionaries({v: st.floats(-4, 4, allow_nan=False) for v in VARS})


def test_inst_a_shape():
    a = load_automaton(INST_A)
    assert len(a.groups) == 1 and len(a.flows) == 1 and len(a.jumps) == 0
    assert a.internal == ("x",) and a.inputs == ("u",)


def test_mars_doc_shape():
    a = load_automaton(gen_mars())
    assert len(a.discrete_state) == 2
    assert len(a.continuous_state) == 6
    assert a.init_state["pAx"] == 35 and a.init_state["pRx"] == 25


def _broken(edit):
    doc = copy.deepcopy(INST_B)
    edit(doc)
    with pytest.raises(ModelError) as exc:
        load_automaton(doc)
    return exc.value


def test_dimension_mismatch_names_the_path():
    err = _broken(lambda d: d["flows"][0].update(A=[[1, 0]]))
    assert err.path == "flows[0].A"


def test_schema_errors():
    assert "unknown" in str(_broken(lambda d: d["goal"].update({"and": [{"lin": {"coeffs": {"q": 1}, "rhs": 0}}]})))
    assert _broken(lambda d: d["init"].update(x=11)).path == "init.x"
    assert _broken(lambda d: d.update(flows=[])).path.startswith("groups")
    assert _broken(lambda d: d["vars"].append({"name": "x", "role": "internal-continuous", "domain": [0, 1]})).path.endswith("name")
    assert _broken(lambda d: d["jumps"][0]["effect"].append({"target": "l", "const": 0})).path.endswith("target")
    assert _broken(lambda d: d["vars"][2].update(domain=[0, "inf"])).path == "vars[2].domain"


def test_strict_inequality_is_closed():
    f = parse_formula({"lin": {"coeffs": {"x": 1}, "rhs": 2, "sense": ">"}})
    assert eval_formula(f, {"x": 2.0})
    g = parse_formula({"lin": {"coeffs": {"x": 1}, "rhs": 2, "sense": "<"}})
    assert eval_formula(g, {"x": 2.0}) and not eval_formula(g, {"x": 2.1})


def test_discrete_labels_map_to_integers():
    doc = copy.deepcopy(INST_B)
    doc["vars"][0]["domain"] = ["off", "on"]
    doc["init"]["l"] = "off"
    a = load_automaton(doc)
    assert a.var("l").card == 2 and a.init_state["l"] == 0


def test_serialize_round_trip():
    a = load_automaton(gen_mars())
    assert load_automaton(json.loads(json.dumps(serialize(a)))) == a


@given(formulas(), points)
@settings(max_examples=150, deadline=None)
def test_formula_json_round_trip(f, p):
    g = parse_formula(json.loads(json.dumps(formula_to_json(f))))
    assert eval_formula(g, p) == eval_formula(f, p)


@given(formulas(), formulas(), points)
@settings(max_examples=150, deadline=None)
def test_and_only_weakens_to_its_parts(f, g, p):
    # adding a conjunct can only shrink the satisfying set
    if eval_formula(And((f, g)), p):
        assert eval_formula(f, p) and eval_formula(g, p)


@given(st.floats(0, 10), st.integers(0, 1))
def test_empty_effect_is_identity(x, l):
    a = load_automaton(INST_B)
    q = {"x": x, "l": float(l), "u": 0.0}
    assert apply_effect(Effect(()), q, a) == {"x": x, "l": float(l)}


def test_affine_effect_and_domain_check():
    a = load_automaton(INST_B)
    e = Effect((Assignment.of("x", {"x": 1.0}, 2.0),))
    assert apply_effect(e, {"x": 3.0, "l": 0.0, "u": 0.0}, a)["x"] == 5.0
    with pytest.raises(ValueError):
        apply_effect(e, {"x": 9.0, "l": 0.0, "u": 0.0}, a)


def test_split_condition():
    f = parse_formula({"and": [{"lin": {"coeffs": {"x": 1}, "rhs": 1}}, {"lin": {"coeffs": {"u": 1}, "rhs": 0}}]})
    q, e = split_condition(f, {"x"})
    assert eval_formula(q, {"x": 1}) and not eval_formula(q, {"x": 0})
    assert eval_formula(e, {"u": 0}) and not eval_formula(e, {"u": -1})


def test_run_and_signal_json():
    run = Run(({"x": 0.0}, {"x": 4.0}, {"x": 4.0}), (FlowSet(("move",)), JumpAction("j")), (2.0, 0.0))
    assert run.total_time == 2.0 and run.times == [0.0, 2.0, 2.0]
    assert Run.from_json(json.loads(json.dumps(run.to_json()))) == run
    sig = InputSignal((SignalStep(0.0, 2.0, {"u": -1.0}, {"u": 2.0}), SignalStep(2.0, 0.0, {"u": 0.5}, None)))
    assert sig.integral(0) == {"u": 4.0} and sig.integral(1) == {"u": 0.0}
    assert sig.value_at(0.0) == {"u": -1.0} and sig.value_at(1.0) == {"u": 2.0}
    assert InputSignal.from_json(json.loads(json.dumps(sig.to_json()))) == sig
    with pytest.raises(ValueError):
        Run(({"x": 0.0},), (JumpAction("j"),), (0.0,))
