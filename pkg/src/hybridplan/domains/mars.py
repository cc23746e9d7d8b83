"""Mars transportation: an astronaut walks or rides a battery-powered rover.

Units are 10 km and hours, so the quoted speeds (walking 2 km/h, mountain
10, basin 30, ground 50 km/h) become 0.2, 1, 3 and 5.  The map is a union of
convex terrain pieces; anything not covered by a piece is forbidden.  Each
piece gets its own walk and drive flow so every flow condition stays a
conjunction.
"""
from __future__ import annotations

import copy

from .common import (
    AND,
    cinput,
    close,
    cvar,
    dvar,
    in_polygon,
    inside_box,
    is_,
    lin,
    near,
    point_in,
    at_least,
)

MAP = (0.0, 0.0, 50.0, 30.0)
WALK_SPEED = 0.2
# terrain -> (speed limit, battery use per hour)
TERRAIN = {"mountain": (1.0, 3.0), "basin": (3.0, 2.0), "ground": (5.0, 2.0)}
BATTERY_CAP = 30.0
LOCKOUT = 1.0 / 60.0  # one minute

DEFAULT = {
    "terrain": [{"type": "ground", "box": [0, 0, 50, 30]}],
    "station": [10, 10],
    "rover": [25, 5],
    "astronaut": [35, 10],
    "destination": [45, 5],
    "battery": 10.0,
    "charge_rate": 5.0,
    "rover_enabled": True,
    "clock0": 1.0,
    "clock_cap": 1000.0,
    "eps": 0.0,
}


class MarsConfigError(ValueError):
    pass


def walking_bound(cfg: dict | None = None) -> float:
    """Time to walk straight to the destination (per-axis velocity box)."""
    c = {**DEFAULT, **(cfg or {})}
    (ax, ay), (gx, gy) = c["astronaut"], c["destination"]
    return max(abs(gx - ax), abs(gy - ay)) / WALK_SPEED


def _piece_of(pieces, p):
    return [k for k, pc in enumerate(pieces) if point_in(pc, *p)]


def gen_mars(cfg: dict | None = None) -> dict:
    c = copy.deepcopy(DEFAULT)
    c.update(cfg or {})
    pieces = c["terrain"]
    if not pieces:
        raise MarsConfigError("need at least one terrain piece")
    for k, pc in enumerate(pieces):
        if pc.get("type") not in TERRAIN:
            raise MarsConfigError(f"terrain[{k}]: unknown type {pc.get('type')!r}")
        if not inside_box(pc, *MAP):
            raise MarsConfigError(f"terrain[{k}]: polygon leaves the map box")
    for what in ("rover", "astronaut", "destination"):
        if not _piece_of(pieces, c[what]):
            raise MarsConfigError(f"{what} lies in a forbidden region")
    station = c["station"]
    if station is not None and not _piece_of(pieces, station):
        raise MarsConfigError("station lies in a forbidden region")
    if not 0 <= c["battery"] <= BATTERY_CAP:
        raise MarsConfigError("battery must lie in [0, 30]")
    eps = float(c["eps"])
    x0, y0, x1, y1 = MAP

    vars_ = [
        dvar("LA", ["walking", "riding"]),
        dvar("LR", ["driving", "stopped", "charge"]),
        cvar("pAx", x0, x1, "10km"),
        cvar("pAy", y0, y1, "10km"),
        cvar("pRx", x0, x1, "10km"),
        cvar("pRy", y0, y1, "10km"),
        cvar("E", 0.0, BATTERY_CAP, "unit"),
        cvar("c", 0.0, float(c["clock_cap"]), "h"),
        cinput("vAx", -WALK_SPEED, WALK_SPEED),
        cinput("vAy", -WALK_SPEED, WALK_SPEED),
        cinput("vRx", -5.0, 5.0),
        cinput("vRy", -5.0, 5.0),
    ]
    inputs = ["vAx", "vAy", "vRx", "vRy"]

    def A(rows):
        return [[float(r.get(u, 0.0)) for u in inputs] for r in rows]

    groups = [["pAx", "pAy"], ["pRx", "pRy", "E", "c"]]
    flows = []
    for k, pc in enumerate(pieces):
        flows.append({"name": f"walk_{k}", "group": 0, "A": A([{"vAx": 1}, {"vAy": 1}]), "B": [0, 0],
                      "cond": AND(is_("LA", 0), in_polygon(pc, "pAx", "pAy"))})
    flows.append({"name": "ride", "group": 0, "A": A([{"vRx": 1}, {"vRy": 1}]), "B": [0, 0], "cond": is_("LA", 1)})
    still = AND(is_("vRx", 0), is_("vRy", 0))
    if c["rover_enabled"]:
        for k, pc in enumerate(pieces):
            speed, rate = TERRAIN[pc["type"]]
            flows.append({
                "name": f"drive_{k}", "group": 1,
                "A": A([{"vRx": 1}, {"vRy": 1}, {}, {}]), "B": [0, 0, -rate, 1],
                "cond": AND(is_("LR", 0), in_polygon(pc, "pRx", "pRy"),
                            lin({"vRx": 1}, -speed), lin({"vRx": 1}, speed, "<="),
                            lin({"vRy": 1}, -speed), lin({"vRy": 1}, speed, "<=")),
            })
    flows.append({"name": "stopped", "group": 1, "A": A([{}, {}, {}, {}]), "B": [0, 0, 0, 1],
                  "cond": AND(is_("LR", 1), still)})
    if station is not None:
        flows.append({"name": "charge", "group": 1, "A": A([{}, {}, {}, {}]), "B": [0, 0, float(c["charge_rate"]), 1],
                      "cond": AND(is_("LR", 2), still)})

    jumps = [
        {"name": "pickup", "cond": AND(is_("LA", 0), close(("pAx", "pAy"), ("pRx", "pRy"), eps)),
         "effect": [{"target": "LA", "const": 1}, {"target": "pAx", "coeffs": {"pRx": 1}},
                    {"target": "pAy", "coeffs": {"pRy": 1}}]},
        {"name": "dropoff", "cond": is_("LA", 1), "effect": [{"target": "LA", "const": 0}]},
    ]
    if c["rover_enabled"]:
        jumps += [
            {"name": "start", "cond": AND(is_("LR", 1), at_least("c", LOCKOUT)), "effect": [{"target": "LR", "const": 0}]},
            {"name": "stop", "cond": is_("LR", 0), "effect": [{"target": "LR", "const": 1}, {"target": "c", "const": 0}]},
        ]
    if station is not None:
        jumps += [
            {"name": "charge_in", "cond": AND(is_("LR", 1), near("pRx", "pRy", station[0], station[1], eps)),
             "effect": [{"target": "LR", "const": 2}]},
            {"name": "charge_out", "cond": is_("LR", 2), "effect": [{"target": "LR", "const": 1}, {"target": "c", "const": 0}]},
        ]
    (ax, ay), (rx, ry), (gx, gy) = c["astronaut"], c["rover"], c["destination"]
    return {
        "vars": vars_,
        "init": {"LA": 0, "LR": 1, "pAx": ax, "pAy": ay, "pRx": rx, "pRy": ry, "E": float(c["battery"]),
                 "c": float(c["clock0"])},
        "goal": AND(is_("pAx", gx), is_("pAy", gy)),
        "groups": groups,
        "flows": flows,
        "jumps": jumps,
    }
