"""Air refueling: UAVs photograph regions, a tank plane refuels them in the air.

Units are metres and seconds.  A UAV flies at up to 30 m/s burning 2 fuel
units per second; while it stays within 10 m (per axis) of the tank plane
and slows to 5 m/s it can refuel at 10 units per second instead.  Tank
capacity is 100, so a UAV alone flies at most 50 s.
"""
from __future__ import annotations

import copy

from .common import AND, cinput, close, cvar, dvar, in_polygon, inside_box, is_, lin, near

UAV_SPEED = 30.0
TANKER_SPEED = 20.0
BURN = 2.0
REFUEL = 10.0
REFUEL_SPEED = 5.0
REFUEL_RANGE = 10.0
CAPACITY = 100.0

DEFAULT = {
    "map": [0, 0, 2000, 2000],
    "uavs": 1,
    "start": [0, 0],
    "destination": [0, 0],
    "regions": [{"box": [300, 300, 400, 400]}],
    "tanker": True,
    "fuel": CAPACITY,
    "max_regions": 8,
    "eps": 0.0,
}


class AirConfigError(ValueError):
    pass


def gen_air(cfg: dict | None = None) -> dict:
    c = copy.deepcopy(DEFAULT)
    c.update(cfg or {})
    x0, y0, x1, y1 = map(float, c["map"])
    regions = c["regions"]
    if len(regions) > c["max_regions"]:
        raise AirConfigError(f"{len(regions)} regions exceed the flag budget of {c['max_regions']}")
    for k, rg in enumerate(regions):
        if not inside_box(rg, x0, y0, x1, y1):
            raise AirConfigError(f"regions[{k}] leaves the map box")
    U = int(c["uavs"])
    if U < 1:
        raise AirConfigError("need at least one UAV")
    eps = float(c["eps"])
    (sx, sy), (gx, gy) = c["start"], c["destination"]

    vars_, init, groups = [], {}, []
    for u in range(U):
        vars_ += [dvar(f"landed{u}", 2), cvar(f"x{u}", x0, x1, "m"), cvar(f"y{u}", y0, y1, "m"),
                  cvar(f"fuel{u}", 0.0, CAPACITY)]
        init.update({f"landed{u}": 0, f"x{u}": sx, f"y{u}": sy, f"fuel{u}": float(c["fuel"])})
        groups.append([f"x{u}", f"y{u}", f"fuel{u}"])
    for k in range(len(regions)):
        vars_.append(dvar(f"visited{k}", 2))
        init[f"visited{k}"] = 0
    if c["tanker"]:
        vars_ += [cvar("tx", x0, x1, "m"), cvar("ty", y0, y1, "m")]
        init.update({"tx": sx, "ty": sy})
        groups.append(["tx", "ty"])
    inputs = []
    for u in range(U):
        vars_ += [cinput(f"vx{u}", -UAV_SPEED, UAV_SPEED), cinput(f"vy{u}", -UAV_SPEED, UAV_SPEED)]
        inputs += [f"vx{u}", f"vy{u}"]
    if c["tanker"]:
        vars_ += [cinput("wx", -TANKER_SPEED, TANKER_SPEED), cinput("wy", -TANKER_SPEED, TANKER_SPEED)]
        inputs += ["wx", "wy"]

    def A(rows):
        return [[float(r.get(i, 0.0)) for i in inputs] for r in rows]

    flows, jumps = [], []
    for u in range(U):
        vx, vy = f"vx{u}", f"vy{u}"
        move = A([{vx: 1}, {vy: 1}, {}])
        flows.append({"name": f"fly{u}", "group": u, "A": move, "B": [0, 0, -BURN], "cond": is_(f"landed{u}", 0)})
        if c["tanker"]:
            slow = AND(lin({vx: 1}, -REFUEL_SPEED), lin({vx: 1}, REFUEL_SPEED, "<="),
                       lin({vy: 1}, -REFUEL_SPEED), lin({vy: 1}, REFUEL_SPEED, "<="))
            flows.append({"name": f"refuel{u}", "group": u, "A": move, "B": [0, 0, REFUEL],
                          "cond": AND(is_(f"landed{u}", 0), close((f"x{u}", f"y{u}"), ("tx", "ty"), REFUEL_RANGE), slow)})
        flows.append({"name": f"parked{u}", "group": u, "A": A([{}, {}, {}]), "B": [0, 0, 0],
                      "cond": is_(f"landed{u}", 1)})
        jumps.append({"name": f"land{u}", "cond": AND(is_(f"landed{u}", 0), near(f"x{u}", f"y{u}", gx, gy, eps)),
                      "effect": [{"target": f"landed{u}", "const": 1}]})
        for k, rg in enumerate(regions):
            jumps.append({"name": f"photo{u}_{k}", "cond": AND(is_(f"visited{k}", 0), in_polygon(rg, f"x{u}", f"y{u}")),
                          "effect": [{"target": f"visited{k}", "const": 1}]})
    if c["tanker"]:
        flows.append({"name": "tanker_fly", "group": U, "A": A([{"wx": 1}, {"wy": 1}]), "B": [0, 0], "cond": True})

    goal = AND(*[is_(f"visited{k}", 1) for k in range(len(regions))], *[is_(f"landed{u}", 1) for u in range(U)])
    return {"vars": vars_, "init": init, "goal": goal, "groups": groups, "flows": flows, "jumps": jumps}


def straight_line_bound(cfg: dict | None = None) -> float:
    """Lower bound: reach the nearest point of every region and come back, one leg at a time."""
    c = {**DEFAULT, **(cfg or {})}
    from .common import polygon_vertices

    (sx, sy), (gx, gy) = c["start"], c["destination"]
    best = max(abs(gx - sx), abs(gy - sy))
    for rg in c["regions"]:
        pts = polygon_vertices(rg)
        lo_x, hi_x = min(p[0] for p in pts), max(p[0] for p in pts)
        lo_y, hi_y = min(p[1] for p in pts), max(p[1] for p in pts)
        dx = max(lo_x - sx, 0, sx - hi_x)
        dy = max(lo_y - sy, 0, sy - hi_y)
        ex = max(lo_x - gx, 0, gx - hi_x)
        ey = max(lo_y - gy, 0, gy - hi_y)
        best = max(best, max(dx, dy) + max(ex, ey))
    return best / UAV_SPEED
