"""Truck-and-drone delivery on a directed road graph.

Units are km and hours.  A truck is either parked at a depot or driving
along one directed road at a speed inside the road's [vmin, vmax] range, so
it cannot stop or turn around on a road.  Drones fly freely at up to 5 km/h
(per axis) or ride a truck.  A package is held by a truck, by a drone, or
is delivered; drones pass packages to and from the truck they sit on, and
whoever holds a package can drop it at its destination.

Delivery windows come out as a QSP: for each windowed package an event
``win_<k>`` that may only fire once the package is delivered, and an episode
from the start event to it bounded by the window.
"""
from __future__ import annotations

import copy
import math

from .common import AND, at_most, cinput, close, cvar, dvar, is_, lin, near

DRONE_SPEED = 5.0

DEFAULT = {
    "map": [0, 0, 20, 10],
    "depots": {"A": [0, 0], "B": [10, 0]},
    "roads": [{"from": "A", "to": "B", "vmin": 30, "vmax": 60}],
    "trucks": [{"depot": "A"}],
    "drones": [],
    "packages": [],
    "handoffs": True,
    "eps": 0.0,
}


class DeliveryConfigError(ValueError):
    pass


def _road_geometry(depots, road):
    (ax, ay), (bx, by) = depots[road["from"]], depots[road["to"]]
    dx, dy = bx - ax, by - ay
    L = math.hypot(dx, dy)
    if L == 0:
        raise DeliveryConfigError(f"road {road['from']}->{road['to']} has zero length")
    return (ax, ay), (bx, by), (dx / L, dy / L), L


def _on_road(geo, p, tol=1e-9):
    (ax, ay), _, (ux, uy), L = geo
    rx, ry = p[0] - ax, p[1] - ay
    along = rx * ux + ry * uy
    across = -rx * uy + ry * ux
    return abs(across) <= tol and -tol <= along <= L + tol


def gen_delivery(cfg: dict | None = None) -> tuple[dict, dict | None]:
    c = copy.deepcopy(DEFAULT)
    c.update(cfg or {})
    depots = {k: (float(v[0]), float(v[1])) for k, v in c["depots"].items()}
    names = list(depots)
    roads = c["roads"]
    x0, y0, x1, y1 = map(float, c["map"])
    for k, (px, py) in depots.items():
        if not (x0 <= px <= x1 and y0 <= py <= y1):
            raise DeliveryConfigError(f"depot {k} lies outside the map")
    for r in roads:
        if r["from"] not in depots or r["to"] not in depots:
            raise DeliveryConfigError(f"road {r['from']}->{r['to']} uses an unknown depot")
        if not 0 <= r["vmin"] <= r["vmax"]:
            raise DeliveryConfigError("road speeds need 0 <= vmin <= vmax")
    geos = [_road_geometry(depots, r) for r in roads]
    nD, nR = len(depots), len(roads)
    trucks, drones, pkgs = c["trucks"], c["drones"], c["packages"]
    T, Dn, K = len(trucks), len(drones), len(pkgs)
    eps = float(c["eps"])
    vtop = max([float(r["vmax"]) for r in roads] + [0.0])

    vars_, init, groups, inputs = [], {}, [], []
    # trucks: mode < nD means parked at that depot, nD + r means on road r
    truck_pos = []
    for t, td in enumerate(trucks):
        if "depot" in td:
            if td["depot"] not in depots:
                raise DeliveryConfigError(f"trucks[{t}]: unknown depot")
            mode, pos = names.index(td["depot"]), depots[td["depot"]]
        else:
            r = int(td["road"])
            pos = (float(td["at"][0]), float(td["at"][1]))
            if not 0 <= r < nR or not _on_road(geos[r], pos):
                raise DeliveryConfigError(f"trucks[{t}]: start point is not on road {r}")
            mode = nD + r
        truck_pos.append(pos)
        vars_ += [dvar(f"tmode{t}", nD + nR), cvar(f"tx{t}", x0, x1, "km"), cvar(f"ty{t}", y0, y1, "km")]
        init.update({f"tmode{t}": mode, f"tx{t}": pos[0], f"ty{t}": pos[1]})
        groups.append([f"tx{t}", f"ty{t}"])
    drone_pos = []
    for d, dd in enumerate(drones):
        if "truck" in dd:
            t = int(dd["truck"])
            if not 0 <= t < T:
                raise DeliveryConfigError(f"drones[{d}]: unknown truck")
            mode, pos = 1 + t, truck_pos[t]
        else:
            mode, pos = 0, (float(dd["at"][0]), float(dd["at"][1]))
        drone_pos.append(pos)
        vars_ += [dvar(f"dmode{d}", 1 + T), cvar(f"dx{d}", x0, x1, "km"), cvar(f"dy{d}", y0, y1, "km")]
        init.update({f"dmode{d}": mode, f"dx{d}": pos[0], f"dy{d}": pos[1]})
        groups.append([f"dx{d}", f"dy{d}"])
    # package holder: truck t -> t, drone d -> T + d, delivered -> T + Dn
    DONE = T + Dn
    for k, pk in enumerate(pkgs):
        h = pk["holder"]
        kind, idx = ("truck", int(h[5:])) if h.startswith("truck") else ("drone", int(h[5:]))
        if (kind == "truck" and not 0 <= idx < T) or (kind == "drone" and not 0 <= idx < Dn):
            raise DeliveryConfigError(f"packages[{k}]: unknown holder {h!r}")
        vars_.append(dvar(f"pkg{k}", DONE + 1))
        init[f"pkg{k}"] = idx if kind == "truck" else T + idx
        _check_reachable(k, pk, kind, idx, trucks, roads, geos, depots, names, Dn, (x0, y0, x1, y1))
    for t in range(T):
        vars_.append(cinput(f"speed{t}", 0.0, vtop))
        inputs.append(f"speed{t}")
    for d in range(Dn):
        vars_ += [cinput(f"fx{d}", -DRONE_SPEED, DRONE_SPEED), cinput(f"fy{d}", -DRONE_SPEED, DRONE_SPEED)]
        inputs += [f"fx{d}", f"fy{d}"]

    def A(rows):
        return [[float(r.get(i, 0.0)) for i in inputs] for r in rows]

    parked = lambda t: at_most(f"tmode{t}", nD - 1)
    flows, jumps = [], []
    for t in range(T):
        tx, ty, s = f"tx{t}", f"ty{t}", f"speed{t}"
        for r, (road, geo) in enumerate(zip(roads, geos)):
            (ax, ay), _, (ux, uy), L = geo
            on = AND(
                lin({tx: -uy, ty: ux}, -uy * ax + ux * ay, "="),
                lin({tx: ux, ty: uy}, ux * ax + uy * ay),
                lin({tx: ux, ty: uy}, ux * ax + uy * ay + L, "<="),
            )
            flows.append({"name": f"drive{t}_r{r}", "group": t, "A": A([{s: ux}, {s: uy}]), "B": [0, 0],
                          "cond": AND(is_(f"tmode{t}", nD + r), on, lin({s: 1}, road["vmin"]),
                                      lin({s: 1}, road["vmax"], "<="))})
            a_name, b_name = road["from"], road["to"]
            (bx, by) = depots[b_name]
            jumps.append({"name": f"enter{t}_r{r}",
                          "cond": AND(is_(f"tmode{t}", names.index(a_name)), near(tx, ty, ax, ay, 0)),
                          "effect": [{"target": f"tmode{t}", "const": nD + r}]})
            jumps.append({"name": f"exit{t}_r{r}",
                          "cond": AND(is_(f"tmode{t}", nD + r), near(tx, ty, bx, by, 0)),
                          "effect": [{"target": f"tmode{t}", "const": names.index(b_name)}]})
        flows.append({"name": f"park{t}", "group": t, "A": A([{}, {}]), "B": [0, 0], "cond": parked(t)})
    for d in range(Dn):
        g = T + d
        dx, dy = f"dx{d}", f"dy{d}"
        flows.append({"name": f"fly{d}", "group": g, "A": A([{f"fx{d}": 1}, {f"fy{d}": 1}]), "B": [0, 0],
                      "cond": is_(f"dmode{d}", 0)})
        for t in range(T):
            s = f"speed{t}"
            for r, geo in enumerate(geos):
                _, _, (ux, uy), _ = geo
                flows.append({"name": f"ride{d}_t{t}_r{r}", "group": g, "A": A([{s: ux}, {s: uy}]), "B": [0, 0],
                              "cond": AND(is_(f"dmode{d}", 1 + t), is_(f"tmode{t}", nD + r))})
            flows.append({"name": f"ride{d}_t{t}_park", "group": g, "A": A([{}, {}]), "B": [0, 0],
                          "cond": AND(is_(f"dmode{d}", 1 + t), parked(t))})
            jumps.append({"name": f"mount{d}_t{t}",
                          "cond": AND(is_(f"dmode{d}", 0), close((dx, dy), (f"tx{t}", f"ty{t}"), eps)),
                          "effect": [{"target": f"dmode{d}", "const": 1 + t},
                                     {"target": dx, "coeffs": {f"tx{t}": 1}},
                                     {"target": dy, "coeffs": {f"ty{t}": 1}}]})
            jumps.append({"name": f"dismount{d}_t{t}", "cond": is_(f"dmode{d}", 1 + t),
                          "effect": [{"target": f"dmode{d}", "const": 0}]})
    for k, pk in enumerate(pkgs):
        gx, gy = map(float, pk["dest"])
        p = f"pkg{k}"
        for t in range(T):
            jumps.append({"name": f"drop{k}_t{t}", "cond": AND(is_(p, t), near(f"tx{t}", f"ty{t}", gx, gy, eps)),
                          "effect": [{"target": p, "const": DONE}]})
        for d in range(Dn):
            jumps.append({"name": f"drop{k}_d{d}", "cond": AND(is_(p, T + d), near(f"dx{d}", f"dy{d}", gx, gy, eps)),
                          "effect": [{"target": p, "const": DONE}]})
            if c["handoffs"]:
                for t in range(T):
                    jumps.append({"name": f"load{k}_d{d}_t{t}", "cond": AND(is_(p, t), is_(f"dmode{d}", 1 + t)),
                                  "effect": [{"target": p, "const": T + d}]})
                    jumps.append({"name": f"unload{k}_d{d}_t{t}", "cond": AND(is_(p, T + d), is_(f"dmode{d}", 1 + t)),
                                  "effect": [{"target": p, "const": t}]})

    doc = {"vars": vars_, "init": init, "goal": AND(*[is_(f"pkg{k}", DONE) for k in range(K)]),
           "groups": groups, "flows": flows, "jumps": jumps}
    windows = [(k, float(pk["window"])) for k, pk in enumerate(pkgs) if pk.get("window") is not None]
    qsp = None
    if windows:
        qsp = {"events": [{"id": "start", "initial": True}]
               + [{"id": f"win_{k}", "cond": is_(f"pkg{k}", DONE)} for k, _ in windows],
               "episodes": [{"start": "start", "end": f"win_{k}", "lb": 0.0, "ub": ub} for k, ub in windows]}
    return doc, qsp


def _check_reachable(k, pk, kind, idx, trucks, roads, geos, depots, names, n_drones, box):
    gx, gy = map(float, pk["dest"])
    x0, y0, x1, y1 = box
    if not (x0 <= gx <= x1 and y0 <= gy <= y1):
        raise DeliveryConfigError(f"packages[{k}]: destination outside the map")
    if n_drones:
        return  # drones fly anywhere on the map
    if kind == "drone":
        raise DeliveryConfigError(f"packages[{k}]: held by a drone but no drones declared")
    # road network reachable from the truck's start
    td = trucks[idx]
    frontier = [td["depot"]] if "depot" in td else [roads[int(td["road"])]["to"]]
    seen_depots, seen_roads = set(frontier), set() if "depot" in td else {int(td["road"])}
    while frontier:
        u = frontier.pop()
        for r, road in enumerate(roads):
            if road["from"] == u and r not in seen_roads:
                seen_roads.add(r)
                if road["to"] not in seen_depots:
                    seen_depots.add(road["to"])
                    frontier.append(road["to"])
    if any(depots[n] == (gx, gy) for n in seen_depots):
        return
    if any(_on_road(geos[r], (gx, gy)) for r in seen_roads):
        return
    raise DeliveryConfigError(f"packages[{k}]: destination unreachable by truck{idx} on the road graph")


def kinematic_bound(cfg: dict, k: int = 0) -> float:
    """Road distance to package k's destination along a truck's road at top speed."""
    c = {**DEFAULT, **cfg}
    depots = {n: tuple(map(float, v)) for n, v in c["depots"].items()}
    road = c["roads"][0]
    geo = _road_geometry(depots, road)
    (ax, ay), _, (ux, uy), _ = geo
    gx, gy = c["packages"][k]["dest"]
    return ((gx - ax) * ux + (gy - ay) * uy) / float(road["vmax"])
