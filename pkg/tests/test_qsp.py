import copy
import math

import pytest

from helpers import solve_at
from hybridplan.domains.toy import DWELL, DWELL_MAKESPAN, DWELL_N, DWELL_QSP, INST_A
from hybridplan.model import JumpAction, ModelError, load_automaton
from hybridplan.qsp import (
    Episode,
    Event,
    Qsp,
    QspError,
    clock_name,
    compile_qsp,
    event_jump,
    extract_schedule,
    fired_name,
    load_qsp,
    project,
    qsp_to_json,
)
from hybridplan.validator import validate

TOL = 1e-6


def dwell(ub=30.0, lb=20.0):
    q = copy.deepcopy(DWELL_QSP)
    q["episodes"][0]["ub"] = ub
    q["episodes"][0]["lb"] = lb
    base = load_automaton(DWELL)
    qq = load_qsp(q)
    return base, compile_qsp(base, qq), qq


@pytest.fixture(scope="module")
def dwell_plan():
    base, a, q = dwell()
    sol, run, sig, _ = solve_at(a, DWELL_N, "auto")
    return base, a, q, sol, run, sig


def test_empty_qsp_is_identity():
    base = load_automaton(INST_A)
    q = Qsp((Event("e0", True),))
    assert compile_qsp(base, q) == base


def test_dwell_shape():
    base, a, q = dwell()
    # one clock, plus the fired flag of e1 (it starts no episode)
    assert {v.name for v in a.vars} - {v.name for v in base.vars} == {clock_name(0), fired_name("e1")}
    assert [j.name for j in a.jumps] == ["event_e1"]
    assert len(a.flows) == len(base.flows) + 2 and len(a.groups) == len(base.groups) + 1


def test_two_episode_counts():
    base = load_automaton(DWELL)
    q = Qsp(
        tuple(Event(e, e == "e0") for e in ("e0", "e1", "e2", "e3")),
        (Episode("e0", "e1", 1, 2), Episode("e2", "e3", 0, 5)),
    )
    a = compile_qsp(base, q)
    clocks = [v.name for v in a.vars if v.name.startswith("clock_")]
    assert clocks == [clock_name(0), clock_name(1)]
    assert sorted(j.name for j in a.jumps) == ["event_e1", "event_e2", "event_e3"]
    assert len(a.flows) - len(base.flows) == 4
    # e1 and e3 start nothing, so they get fired flags; e2 is kept single-shot by its clock
    assert {v.name for v in a.vars if v.name.startswith("fired_")} == {fired_name("e1"), fired_name("e3")}
    assert dict(a.init)[clock_name(0)] == 0.0 and dict(a.init)[clock_name(1)] == -1.0


def test_dwell_plan_and_schedule(dwell_plan):
    base, a, q, sol, run, sig = dwell_plan
    assert abs(sol.objective - DWELL_MAKESPAN) <= TOL
    assert validate(a, sig, run).ok
    s = extract_schedule(run, q)
    assert s["e0"] == 0.0 and 20 - TOL <= s["e1"] - s["e0"] <= 30 + TOL


def test_soundness_condition_holds_during_episode(dwell_plan):
    base, a, q, sol, run, sig = dwell_plan
    s = extract_schedule(run, q)
    times = run.times
    for i in range(len(run.actions)):
        t0, t1 = times[i], times[i + 1]
        if t1 <= s["e0"] or t0 >= s["e1"]:
            continue
        for k in range(21):
            x = run.states[i]["x"] + k / 20 * (run.states[i + 1]["x"] - run.states[i]["x"])
            assert x <= 1 + TOL


def test_clock_conservation(dwell_plan):
    base, a, q, sol, run, sig = dwell_plan
    s = extract_schedule(run, q)
    c = clock_name(0)
    fire = next(i for i, act in enumerate(run.actions) if isinstance(act, JumpAction))
    for i, (t, st) in enumerate(zip(run.times, run.states)):
        if i <= fire:
            assert abs(st[c] - (t - s["e0"])) <= TOL
        else:
            assert st[c] == -2.0


def test_projection_is_a_run_of_the_base(dwell_plan):
    base, a, q, sol, run, sig = dwell_plan
    prun, psig = project(base, a, run, sig)
    assert validate(base, psig, prun).ok
    assert abs(prun.total_time - run.total_time) <= TOL
    assert all(isinstance(x, JumpAction) is False for x in prun.actions)


def test_tight_upper_bound_is_infeasible():
    _, a, _ = dwell(ub=10.0)
    assert solve_at(a, DWELL_N, "auto")[0].status == "infeasible"


def test_lb_above_ub_compiles_but_is_infeasible():
    _, a, _ = dwell(lb=30.0, ub=20.0)
    assert solve_at(a, DWELL_N, "auto")[0].status == "infeasible"


def test_schedule_errors(dwell_plan):
    base, a, q, sol, run, sig = dwell_plan
    from hybridplan.model import Run

    never = Run(run.states[:1], (), ())
    with pytest.raises(QspError):
        extract_schedule(never, q)
    assert extract_schedule(never, Qsp((Event("e0", True),))) == {"e0": 0.0}
    short = Qsp(q.events, (Episode("e0", "e1", 0, 1),))
    with pytest.raises(QspError):
        extract_schedule(run, short)


def test_event_condition():
    # e1 may only fire once x >= 3; with no episode it is pinned by a fired flag
    base = load_automaton(DWELL)
    q = load_qsp({"events": [{"id": "e0", "initial": True}, {"id": "e1", "cond": {"lin": {"coeffs": {"x": 1}, "rhs": 3, "sense": ">="}}}]})
    a = compile_qsp(base, q)
    sol, run, sig, _ = solve_at(a, 3, "auto")
    assert sol.objective == pytest.approx(6.0)
    i = next(i for i, act in enumerate(run.actions) if act == JumpAction(event_jump("e1")))
    assert run.states[i]["x"] >= 3 - TOL
    assert run.states[-1][fired_name("e1")] == 1.0


def test_bad_qsps():
    with pytest.raises(QspError):
        Qsp((Event("a"), Event("b")))
    with pytest.raises(QspError):
        Qsp((Event("a", True), Event("a")))
    with pytest.raises(QspError):
        Episode("a", "a", 0, 1)
    with pytest.raises(QspError):
        Episode("a", "b", -1, 1)
    with pytest.raises(QspError):
        Qsp((Event("a", True), Event("b")), (Episode("b", "a", 0, 1),))
    with pytest.raises(QspError):
        Qsp((Event("a", True), Event("b")), (Episode("a", "z", 0, 1),))
    with pytest.raises(ModelError):
        load_qsp({"episodes": []})
    base = load_automaton(DWELL)
    cond_on_input = {"lin": {"coeffs": {"u": 1}, "rhs": 0, "sense": ">="}}
    q = load_qsp({"events": [{"id": "e0", "initial": True}, {"id": "e1"}],
                  "episodes": [{"start": "e0", "end": "e1", "cond": cond_on_input}]})
    with pytest.raises(QspError):
        compile_qsp(base, q)
    clash = load_automaton({**DWELL, "jumps": [{"name": "event_e1", "cond": True, "effect": []}]})
    with pytest.raises(QspError):
        compile_qsp(clash, load_qsp(DWELL_QSP))


def test_json_round_trip():
    q = load_qsp(DWELL_QSP)
    assert load_qsp(qsp_to_json(q)) == q
    inf = load_qsp({"events": [{"id": "a", "initial": True}, {"id": "b"}],
                    "episodes": [{"start": "a", "end": "b", "ub": "inf"}]})
    assert inf.episodes[0].ub == math.inf and qsp_to_json(inf)["episodes"][0]["ub"] is None
