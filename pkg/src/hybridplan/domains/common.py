"""Small helpers for writing automaton documents by hand."""
from __future__ import annotations

import math


def lin(coeffs: dict, rhs: float, sense: str = ">=") -> dict:
    return {"lin": {"coeffs": {k: float(v) for k, v in coeffs.items() if v != 0}, "rhs": float(rhs), "sense": sense}}


def AND(*parts) -> dict | bool:
    kids = [p for p in parts if p is not True]
    if not kids:
        return True
    if len(kids) == 1:
        return kids[0]
    return {"and": kids}


def OR(*parts) -> dict:
    return {"or": list(parts)}


def is_(var: str, value: float) -> dict:
    return lin({var: 1}, value, "=")


def at_most(var: str, value: float) -> dict:
    return lin({var: 1}, value, "<=")


def at_least(var: str, value: float) -> dict:
    return lin({var: 1}, value, ">=")


def within(var: str, lo: float, hi: float):
    return AND(at_least(var, lo), at_most(var, hi))


def near(x: str, y: str, px: float, py: float, eps: float):
    """Axis-aligned box of half-width ``eps`` around (px, py); a point when eps = 0."""
    if eps == 0:
        return AND(is_(x, px), is_(y, py))
    return AND(within(x, px - eps, px + eps), within(y, py - eps, py + eps))


def close(a: tuple[str, str], b: tuple[str, str], eps: float):
    """|a - b| <= eps per axis."""
    parts = []
    for u, v in zip(a, b):
        if eps == 0:
            parts.append(lin({u: 1, v: -1}, 0, "="))
        else:
            parts.append(lin({u: 1, v: -1}, eps, "<="))
            parts.append(lin({u: 1, v: -1}, -eps, ">="))
    return AND(*parts)


def cvar(name: str, lo: float, hi: float, units: str = "") -> dict:
    d = {"name": name, "role": "internal-continuous", "domain": [lo, None if hi == math.inf else hi]}
    if units:
        d["units"] = units
    return d


def dvar(name: str, labels) -> dict:
    """``labels`` is a cardinality or a list of value names."""
    return {"name": name, "role": "internal-discrete", "domain": labels if isinstance(labels, int) else list(labels)}


def cinput(name: str, lo: float, hi: float, units: str = "") -> dict:
    d = {"name": name, "role": "input-continuous", "domain": [lo, hi]}
    if units:
        d["units"] = units
    return d


def polygon_vertices(shape) -> list[tuple[float, float]]:
    """``{"box": [x0, y0, x1, y1]}`` or ``{"polygon": [[x, y], ...]}`` -> vertex list."""
    if "box" in shape:
        x0, y0, x1, y1 = map(float, shape["box"])
        return [(x0, y0), (x1, y0), (x1, y1), (x0, y1)]
    return [(float(x), float(y)) for x, y in shape["polygon"]]


def polygon_halfspaces(pts, x: str, y: str) -> list[dict]:
    """Conjunction describing a convex polygon (either orientation)."""
    if len(pts) < 3:
        raise ValueError("a polygon needs at least 3 vertices")
    area = sum(pts[k][0] * pts[(k + 1) % len(pts)][1] - pts[(k + 1) % len(pts)][0] * pts[k][1] for k in range(len(pts)))
    if area == 0:
        raise ValueError("degenerate polygon")
    if area < 0:
        pts = pts[::-1]
    rows = []
    for k in range(len(pts)):
        (px, py), (qx, qy) = pts[k], pts[(k + 1) % len(pts)]
        dx, dy = qx - px, qy - py
        # interior on the left of each edge
        rows.append(lin({x: -dy, y: dx}, -dy * px + dx * py))
        # convexity: every other vertex must be on the left as well
        for rx, ry in pts:
            if -dy * rx + dx * ry < -dy * px + dx * py - 1e-9:
                raise ValueError("polygon is not convex")
    return rows


def in_polygon(shape, x: str, y: str):
    return AND(*polygon_halfspaces(polygon_vertices(shape), x, y))


def point_in(shape, px: float, py: float) -> bool:
    pts = polygon_vertices(shape)
    for row in polygon_halfspaces(pts, "x", "y"):
        c = row["lin"]["coeffs"]
        if c.get("x", 0) * px + c.get("y", 0) * py < row["lin"]["rhs"] - 1e-9:
            return False
    return True


def inside_box(shape, x0, y0, x1, y1) -> bool:
    return all(x0 <= px <= x1 and y0 <= py <= y1 for px, py in polygon_vertices(shape))
