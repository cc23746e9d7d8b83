"""Qualitative state plans (events + episodes) compiled into the automaton.

Each episode gets a clock ``c`` with domain [-2, inf): -1 before it starts,
the elapsed time while it runs, -2 once it has ended.  Every non-initial
event becomes a jump that starts the episodes it opens (``c := 0``, guarded
by ``c = -1``) and closes the episodes it ends (``c := -2``, guarded by
``lb <= c <= ub``).  Each clock is its own flow group with a running flow
(``c' = 1`` while the episode condition holds) and an idle flow (``c' = 0``,
``c <= -1``).  The goal asks every clock to be at -2.

An event that starts no episode has nothing in its guard that stops it from
firing twice, so it gets a 0/1 ``fired`` flag (guard flag = 0, effect
flag := 1, goal flag = 1).  An event may also carry a state condition, added to its jump's
guard.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Any, Mapping

from .model import (
    TRUE,
    Assignment,
    Effect,
    Flow,
    FlowSet,
    Formula,
    HybridAutomaton,
    InputSignal,
    Jump,
    JumpAction,
    ModelError,
    Run,
    SignalStep,
    VarDecl,
    conj,
    eq,
    ge,
    le,
    parse_formula,
    variables,
)

SCHEDULE_TOL = 1e-6


class QspError(ValueError):
    pass


@dataclass(frozen=True)
class Event:
    id: str
    initial: bool = False
    cond: Formula = TRUE  # must hold at the instant the event fires


@dataclass(frozen=True)
class Episode:
    start: str
    end: str
    lb: float
    ub: float
    cond: Formula = TRUE

    def __post_init__(self):
        if self.start == self.end:
            raise QspError(f"episode {self.start}->{self.end} starts and ends at the same event")
        if self.lb < 0 or self.ub < 0 or math.isnan(self.lb) or math.isnan(self.ub):
            raise QspError("episode bounds must be non-negative")
        # lb > ub is accepted: it compiles to an unsatisfiable end guard


@dataclass(frozen=True)
class Qsp:
    events: tuple[Event, ...]
    episodes: tuple[Episode, ...] = ()

    def __post_init__(self):
        ids = [e.id for e in self.events]
        if len(set(ids)) != len(ids):
            raise QspError("duplicate event id")
        if sum(e.initial for e in self.events) != 1:
            raise QspError("a QSP has exactly one initial event")
        known = set(ids)
        if self.initial.cond is not TRUE:
            raise QspError("the initial event cannot carry a condition")
        for k, ep in enumerate(self.episodes):
            if ep.start not in known or ep.end not in known:
                raise QspError(f"episodes[{k}] references an unknown event")
            if ep.end == self.initial.id:
                raise QspError(f"episodes[{k}] ends at the initial event")

    @property
    def initial(self) -> Event:
        return next(e for e in self.events if e.initial)

    def starting(self, event_id: str) -> list[int]:
        return [k for k, ep in enumerate(self.episodes) if ep.start == event_id]

    def ending(self, event_id: str) -> list[int]:
        return [k for k, ep in enumerate(self.episodes) if ep.end == event_id]


def clock_name(k: int) -> str:
    return f"clock_ep{k}"


def event_jump(event_id: str) -> str:
    return f"event_{event_id}"


def fired_name(event_id: str) -> str:
    return f"fired_{event_id}"


def load_qsp(doc: Any) -> Qsp:
    if isinstance(doc, (str, bytes)):
        doc = json.loads(doc)
    if not isinstance(doc, Mapping) or "events" not in doc:
        raise ModelError("", "QSP document needs an events list")
    events = []
    for i, ed in enumerate(doc["events"]):
        if not isinstance(ed, Mapping) or "id" not in ed:
            raise ModelError(f"events[{i}]", "expected an object with an id")
        events.append(Event(str(ed["id"]), bool(ed.get("initial", False)),
                            parse_formula(ed.get("cond", True), f"events[{i}].cond")))
    eps = []
    for k, pd in enumerate(doc.get("episodes", [])):
        path = f"episodes[{k}]"
        try:
            ub = pd.get("ub")
            ub = math.inf if ub is None or (isinstance(ub, str) and ub.lower() in ("inf", "+inf")) else float(ub)
            eps.append(Episode(str(pd["start"]), str(pd["end"]), float(pd.get("lb", 0.0)), ub,
                               parse_formula(pd.get("cond", True), f"{path}.cond")))
        except (KeyError, TypeError) as exc:
            raise ModelError(path, f"malformed episode: {exc}") from None
        except QspError as exc:
            raise ModelError(path, str(exc)) from None
    try:
        return Qsp(tuple(events), tuple(eps))
    except QspError as exc:
        raise ModelError("", str(exc)) from None


def qsp_to_json(q: Qsp) -> dict:
    from .model import formula_to_json

    return {
        "events": [{"id": e.id, "initial": e.initial, "cond": formula_to_json(e.cond)} for e in q.events],
        "episodes": [
            {"start": ep.start, "end": ep.end, "lb": ep.lb, "ub": None if ep.ub == math.inf else ep.ub,
             "cond": formula_to_json(ep.cond)}
            for ep in q.episodes
        ],
    }


def compile_qsp(a: HybridAutomaton, q: Qsp) -> HybridAutomaton:
    """Automaton whose runs are exactly the runs of ``a`` that satisfy ``q``."""
    internal = set(a.internal)
    taken = {v.name for v in a.vars} | {j.name for j in a.jumps} | {f.name for f in a.flows}
    for k, ep in enumerate(q.episodes):
        bad = variables(ep.cond) - internal
        if bad:
            raise QspError(f"episode {k} condition uses non-internal variables {sorted(bad)}")
    for ev in q.events:
        bad = variables(ev.cond) - internal
        if bad:
            raise QspError(f"event {ev.id} condition uses non-internal variables {sorted(bad)}")

    e0 = q.initial.id
    new_vars: list[VarDecl] = []
    init = list(a.init)
    goal_parts: list[Formula] = [a.goal]
    groups = list(a.groups)
    flows = list(a.flows)
    jumps = list(a.jumps)
    n_in = len(a.inputs)

    def claim(name):
        if name in taken:
            raise QspError(f"name collision: {name!r} already exists in the automaton")
        taken.add(name)
        return name

    for k, ep in enumerate(q.episodes):
        c = claim(clock_name(k))
        new_vars.append(VarDecl(c, "internal-continuous", -2.0, math.inf))
        init.append((c, 0.0 if ep.start == e0 else -1.0))
        goal_parts.append(eq({c: 1.0}, -2.0))
        g = len(groups)
        groups.append((c,))
        zeros = ((0.0,) * n_in,)
        flows.append(Flow(claim(f"ep{k}_run"), g, zeros, (1.0,), conj([ge({c: 1.0}, 0.0), ep.cond])))
        flows.append(Flow(claim(f"ep{k}_idle"), g, zeros, (0.0,), le({c: 1.0}, -1.0)))

    for ev in q.events:
        if ev.initial:
            continue
        starts, ends = q.starting(ev.id), q.ending(ev.id)
        guard: list[Formula] = [ev.cond]
        effect: list[Assignment] = []
        for k in starts:
            c = clock_name(k)
            guard.append(eq({c: 1.0}, -1.0))
            effect.append(Assignment.of(c, None, 0.0))
        for k in ends:
            c = clock_name(k)
            ep = q.episodes[k]
            guard.append(ge({c: 1.0}, ep.lb))
            if ep.ub < math.inf:
                guard.append(le({c: 1.0}, ep.ub))
            effect.append(Assignment.of(c, None, -2.0))
        if not starts:
            flag = claim(fired_name(ev.id))
            new_vars.append(VarDecl(flag, "internal-discrete", 0.0, 1.0))
            init.append((flag, 0.0))
            goal_parts.append(eq({flag: 1.0}, 1.0))
            guard.append(eq({flag: 1.0}, 0.0))
            effect.append(Assignment.of(flag, None, 1.0))
        jumps.append(Jump(claim(event_jump(ev.id)), conj(guard), Effect(tuple(effect))))

    # new internals go before the inputs so the input order (and A's columns) is unchanged
    old_internal = [v for v in a.vars if v.internal]
    old_inputs = [v for v in a.vars if not v.internal]
    return HybridAutomaton(
        tuple(old_internal + new_vars + old_inputs),
        tuple(init),
        conj(goal_parts),
        tuple(jumps),
        tuple(flows),
        tuple(groups),
    )


def extract_schedule(run: Run, q: Qsp, tol: float = SCHEDULE_TOL) -> dict[str, float]:
    """Event -> firing time; checks every episode's duration bounds."""
    times = run.times
    sched: dict[str, float] = {q.initial.id: 0.0}
    for ev in q.events:
        if ev.initial:
            continue
        name = event_jump(ev.id)
        hits = [i for i, act in enumerate(run.actions) if isinstance(act, JumpAction) and act.name == name]
        if len(hits) != 1:
            raise QspError(f"event {ev.id!r} fires {len(hits)} times; exactly once is required")
        sched[ev.id] = times[hits[0]]
    for k, ep in enumerate(q.episodes):
        dur = sched[ep.end] - sched[ep.start]
        if dur < ep.lb - tol or dur > ep.ub + tol:
            raise QspError(f"episode {k} lasts {dur}, outside [{ep.lb}, {ep.ub}]")
    return sched


def project(a: HybridAutomaton, compiled: HybridAutomaton, run: Run, signal: InputSignal) -> tuple[Run, InputSignal]:
    """Drop clocks, flags and event jumps from a run of ``compiled``."""
    keep = set(a.internal)
    base_jumps = {j.name for j in a.jumps}
    base_flows = {f.name for f in a.flows}
    states = [{v: s[v] for v in s if v in keep} for s in run.states]
    out_states = [states[0]]
    actions, durations, steps = [], [], []
    t_acc: list[float] = []
    for i, act in enumerate(run.actions):
        if isinstance(act, JumpAction):
            if act.name not in base_jumps:
                continue
            new = act
        else:
            new = FlowSet(tuple(f for f in act.flows if f in base_flows))
        st = signal.steps[i]
        start = math.fsum(t_acc)
        steps.append(SignalStep(start, st.duration, st.point, st.interior))
        t_acc.append(st.duration)
        actions.append(new)
        durations.append(run.durations[i])
        out_states.append(states[i + 1])
    return Run(tuple(out_states), tuple(actions), tuple(durations)), InputSignal(tuple(steps))
