"""Small analytic instances with hand-derived optima.

Each corpus entry is ``(document, n, makespan)``: at step count ``n`` the
optimal makespan is ``makespan`` (worked out by hand in the comment next to
it).  They are small enough for the exact reference backend.
"""
from __future__ import annotations

from .common import AND, OR, at_least, at_most, cinput, cvar, dvar, is_, lin


def _doc(vars_, init, goal, flows, jumps=(), groups=None):
    d = {"vars": list(vars_), "init": dict(init), "goal": goal, "flows": list(flows), "jumps": list(jumps)}
    if groups is not None:
        d["groups"] = groups
    return d


X10 = cvar("x", 0, 10)
U2 = cinput("u", -2, 2)

# x' = u, |u| <= 2, reach x >= 10: 10 / 2 = 5
INST_A = _doc([X10, U2], {"x": 0}, at_least("x", 10), [{"name": "move", "group": 0, "A": [[1]], "B": [0]}])

# same, but the goal also wants l = 1 and the switch needs x >= 5: still 5 (switch mid-way), needs n = 3
INST_B = _doc(
    [dvar("l", 2), X10, U2], {"l": 0, "x": 0}, AND(at_least("x", 10), is_("l", 1)),
    [{"name": "move", "group": 0, "A": [[1]], "B": [0]}],
    [{"name": "switch", "cond": AND(at_least("x", 5), is_("l", 0)), "effect": [{"target": "l", "const": 1}]}],
)

# slow (|u| <= 1) below 5, fast (|u| <= 2) above: 5 / 1 + 5 / 2 = 7.5
INST_C = _doc(
    [X10, U2], {"x": 0}, at_least("x", 10),
    [
        {"name": "slow", "group": 0, "A": [[1]], "B": [0],
         "cond": AND(at_most("x", 5), at_most("u", 1), at_least("u", -1))},
        {"name": "fast", "group": 0, "A": [[1]], "B": [0],
         "cond": AND(at_least("x", 5), at_most("u", 2), at_least("u", -2))},
    ],
)

# two independent groups running concurrently: max(4 / 1, 6 / 1) = 6
TWO_GROUPS = _doc(
    [cvar("x", 0, 10), cvar("y", 0, 10), cinput("u", -1, 1), cinput("w", -1, 1)],
    {"x": 0, "y": 0}, AND(at_least("x", 4), at_least("y", 6)),
    [{"name": "mx", "group": 0, "A": [[1, 0]], "B": [0]}, {"name": "my", "group": 1, "A": [[0, 1]], "B": [0]}],
    groups=[["x"], ["y"]],
)

# disjunctive goal from x = 0: the near side x <= -3 takes 3
OR_GOAL = _doc(
    [cvar("x", -10, 10), cinput("u", -1, 1)], {"x": 0}, OR(at_least("x", 6), at_most("x", -3)),
    [{"name": "move", "group": 0, "A": [[1]], "B": [0]}],
)

# affine jump effect x := x + 5 (needs x >= 2): walk to 2, jump to 7, walk to 9 = 4 instead of 9
TELEPORT = _doc(
    [cvar("x", 0, 10), cinput("u", -1, 1)], {"x": 0}, at_least("x", 9),
    [{"name": "move", "group": 0, "A": [[1]], "B": [0]}],
    [{"name": "hop", "cond": AND(at_least("x", 2), at_most("x", 5)),
      "effect": [{"target": "x", "coeffs": {"x": 1}, "const": 5}]}],
)

# no continuous state at all (no flow groups): two jumps, zero time
JUMPS_ONLY = _doc(
    [dvar("l", 3)], {"l": 0}, is_("l", 2), [],
    [{"name": "step01", "cond": is_("l", 0), "effect": [{"target": "l", "const": 1}]},
     {"name": "step12", "cond": is_("l", 1), "effect": [{"target": "l", "const": 2}]}],
)

# drift term: clock c' = 1 alongside x' = u; waiting for c >= 3 dominates: 3
CLOCK = _doc(
    [cvar("c", 0, 100), cvar("x", 0, 10), cinput("u", -1, 1)], {"c": 0, "x": 0},
    AND(at_least("c", 3), at_least("x", 1)),
    [{"name": "tick", "group": 0, "A": [[0], [1]], "B": [1, 0]}],
)

# input condition with a disjunction: |u| >= 1 required, u in [-2, 2]; reach x >= 3 in 1.5
FAST_ONLY = _doc(
    [X10, U2], {"x": 0}, at_least("x", 3),
    [{"name": "burst", "group": 0, "A": [[1]], "B": [0], "cond": OR(at_least("u", 1), at_most("u", -1))}],
)

# two gated jumps in a row: reach 6 at 3, fire a and b, then 2 more at speed 2 = 4
TWO_SWITCHES = _doc(
    [dvar("l", 3), X10, U2], {"l": 0, "x": 0}, AND(is_("l", 2), at_least("x", 8)),
    [{"name": "move", "group": 0, "A": [[1]], "B": [0]}],
    [{"name": "a", "cond": AND(is_("l", 0), at_least("x", 3)), "effect": [{"target": "l", "const": 1}]},
     {"name": "b", "cond": AND(is_("l", 1), at_least("x", 6)), "effect": [{"target": "l", "const": 2}]}],
)

# tank filled at 2/s while a cart moves at 1: max(6 / 2, 2 / 1) = 3
TANK = _doc(
    [cvar("h", 0, 10), cvar("y", 0, 10), cinput("u", -1, 1)], {"h": 0, "y": 0},
    AND(at_least("h", 6), at_least("y", 2)),
    [{"name": "fill", "group": 0, "A": [[0]], "B": [2]},
     {"name": "drain", "group": 0, "A": [[0]], "B": [-1]},
     {"name": "cart", "group": 1, "A": [[1]], "B": [0]}],
    groups=[["h"], ["y"]],
)

# already at the goal: 0
AT_GOAL = _doc([X10, U2], {"x": 4}, AND(at_least("x", 3), at_most("x", 5)),
               [{"name": "move", "group": 0, "A": [[1]], "B": [0]}])

# negative input gain plus drift: x' = 1 - u with u in [0, 2]; x from 0 down to -3 takes 3
BACKWARDS = _doc(
    [cvar("x", -5, 5), cinput("u", 0, 2)], {"x": 0}, at_most("x", -3),
    [{"name": "move", "group": 0, "A": [[-1]], "B": [1]}],
)

# discrete input gates a jump: the switch fires only with k = 1; same timing as INST_B
KEYED = _doc(
    [dvar("l", 2), X10, U2, {"name": "k", "role": "input-discrete", "domain": 2}],
    {"l": 0, "x": 0}, AND(at_least("x", 10), is_("l", 1)),
    [{"name": "move", "group": 0, "A": [[1, 0]], "B": [0]}],
    [{"name": "switch", "cond": AND(at_least("x", 5), is_("l", 0), is_("k", 1)), "effect": [{"target": "l", "const": 1}]}],
)

CORPUS = {
    "inst_a": (INST_A, 1, 5.0),
    "inst_b": (INST_B, 3, 5.0),
    "inst_c": (INST_C, 3, 7.5),
    "two_groups": (TWO_GROUPS, 1, 6.0),
    "or_goal": (OR_GOAL, 1, 3.0),
    "teleport": (TELEPORT, 3, 4.0),
    "jumps_only": (JUMPS_ONLY, 2, 0.0),
    "clock": (CLOCK, 1, 3.0),
    "fast_only": (FAST_ONLY, 1, 1.5),
    "two_switches": (TWO_SWITCHES, 4, 4.0),
    "tank": (TANK, 1, 3.0),
    "at_goal": (AT_GOAL, 1, 0.0),
    "backwards": (BACKWARDS, 1, 3.0),
    "keyed": (KEYED, 3, 5.0),
}

# dwell for [20, 30] near the start (x <= 1), then reach x >= 6 at speed 1:
# x creeps to 1 during the dwell, event at 20, then 5 more = 25 at n = 3
DWELL = _doc(
    [cvar("x", 0, 100), cinput("u", -1, 1)], {"x": 0}, at_least("x", 6),
    [{"name": "move", "group": 0, "A": [[1]], "B": [0]}],
)
DWELL_QSP = {
    "events": [{"id": "e0", "initial": True}, {"id": "e1"}],
    "episodes": [{"start": "e0", "end": "e1", "lb": 20, "ub": 30, "cond": at_most("x", 1)}],
}
DWELL_N = 3
DWELL_MAKESPAN = 25.0
