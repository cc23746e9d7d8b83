"""CPLEX LP text export and a reader for the same dialect.

Names that are not safe in LP files are mangled; the writer records every
variable as a ``\\ var <lp-name> <original>`` comment (in model order) so the
reader can restore both the original names and the variable order.
"""
from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass

from .model import MilpError, MilpModel

_SAFE = re.compile(r"[A-Za-z_][A-Za-z0-9_.]*\Z")
_RESERVED = {
    "free", "inf", "infinity", "st", "s.t.", "subject", "to", "such", "that", "bounds", "bound",
    "binary", "binaries", "bin", "general", "generals", "gen", "end", "minimize", "minimise",
    "minimum", "min", "maximize", "maximise", "maximum", "max", "integer", "integers",
}
_LINE = 200


class LpFormatError(MilpError):
    pass


def fmt(x: float) -> str:
    if x == math.inf:
        return "+inf"
    if x == -math.inf:
        return "-inf"
    if x == int(x) and abs(x) < 1e15:
        return str(int(x))
    return "%.17g" % x


def _legal(name: str) -> bool:
    return bool(_SAFE.match(name)) and name.lower() not in _RESERVED and not re.match(r"[eE][0-9]", name)


class _Mangler:
    def __init__(self):
        self.table: dict[str, str] = {}
        self.used: set[str] = set()

    def __call__(self, name: str) -> str:
        if _legal(name) and name not in self.used:
            lp = name
        else:
            base = re.sub(r"[^A-Za-z0-9_.]", "_", name)
            if not base or not re.match(r"[A-Za-z_]", base) or not _legal(base):
                base = "n_" + base
            lp, k = base, 1
            while lp in self.used or not _legal(lp):
                lp = f"{base}_{k}"
                k += 1
        self.used.add(lp)
        self.table[lp] = name
        return lp


@dataclass
class LpDocument:
    text: str
    names: dict[str, str]  # lp name -> original name

    @property
    def mangled(self) -> dict[str, str]:
        return {k: v for k, v in self.names.items() if k != v}


def _expr(terms: list[tuple[str, float]]) -> list[str]:
    parts = []
    for name, c in terms:
        sign = "-" if c < 0 else "+"
        parts.append(f"{sign} {fmt(abs(c))} {name}")
    return parts


def _wrap(head: str, parts: list[str], tail: str = "") -> list[str]:
    lines, cur = [], head
    for p in parts:
        if len(cur) + len(p) + 1 > _LINE and cur.strip():
            lines.append(cur)
            cur = "   "
        cur += " " + p
    if tail:
        cur += " " + tail
    lines.append(cur)
    return lines


def export_lp(model: MilpModel) -> LpDocument:
    vm = _Mangler()
    lp_of = {v.name: vm(v.name) for v in model.vars}
    rm = _Mangler()
    out = [f"\\ model {json.dumps(model.name)}"]
    for v in model.vars:
        out.append(f"\\ var {lp_of[v.name]} {json.dumps(v.name)}")
    out.append("Minimize")
    obj_terms = [(lp_of[v.name], model.objective[v.name]) for v in model.vars if v.name in model.objective]
    parts = _expr(obj_terms)
    if model.obj_const:
        parts.append(("- " if model.obj_const < 0 else "+ ") + fmt(abs(model.obj_const)))
    if not parts:
        parts = ["0"]
    out.extend(_wrap(" obj:", parts))
    out.append("Subject To")
    first = lp_of[model.vars[0].name] if model.vars else None
    for r in model.rows:
        label = rm(r.name)
        terms = [(lp_of[n], c) for n, c in r.coeffs]
        if not terms:
            if first is None:
                raise LpFormatError(f"row {r.name} has no terms and the model has no variables")
            terms = [(first, 0.0)]
        out.extend(_wrap(f" {label}:", _expr(terms), f"{r.sense} {fmt(r.rhs)}"))
    out.append("Bounds")
    for v in model.vars:
        if v.kind == "binary":
            continue
        n = lp_of[v.name]
        if v.lo == -math.inf and v.hi == math.inf:
            out.append(f" {n} free")
        elif v.lo == v.hi:
            out.append(f" {n} = {fmt(v.lo)}")
        elif v.hi == math.inf:
            out.append(f" {n} >= {fmt(v.lo)}")
        else:
            out.append(f" {fmt(v.lo)} <= {n} <= {fmt(v.hi)}")
    bins = [lp_of[v.name] for v in model.vars if v.kind == "binary"]
    gens = [lp_of[v.name] for v in model.vars if v.kind == "integer"]
    if bins:
        out.append("Binaries")
        out.extend(_wrap("", bins))
    if gens:
        out.append("Generals")
        out.extend(_wrap("", gens))
    out.append("End")
    return LpDocument("\n".join(out) + "\n", dict(vm.table))


# ---------------------------------------------------------------------------
# reader

_SECTIONS = [
    (re.compile(r"(minimi[sz]e|minimum|min)\Z", re.I), "min"),
    (re.compile(r"(maximi[sz]e|maximum|max)\Z", re.I), "max"),
    (re.compile(r"(subject\s+to|such\s+that|st|s\.t\.)\Z", re.I), "st"),
    (re.compile(r"(bounds?)\Z", re.I), "bounds"),
    (re.compile(r"(binary|binaries|bin)\Z", re.I), "bin"),
    (re.compile(r"(generals?|gen|integers?)\Z", re.I), "gen"),
    (re.compile(r"end\Z", re.I), "end"),
]
_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<op><=|>=|=<|=>|<|>|=)"
    r"|(?P<sign>[+-])"
    r"|(?P<colon>:)"
    r"|(?P<name>[A-Za-z_!\"#$%&()/,;?@`'{}|~\[\]][A-Za-z0-9_!\"#$%&()/,.;?@`'{}|~\[\]]*))"
)
_SENSE = {"<=": "<=", "=<": "<=", "<": "<=", ">=": ">=", "=>": ">=", ">": ">=", "=": "="}


def _tokens(text: str) -> list[tuple[str, str]]:
    out, pos = [], 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise LpFormatError(f"cannot tokenize near {text[pos:pos + 30]!r}")
        kind = m.lastgroup
        out.append((kind, m.group(kind)))
        pos = m.end()
    return out


def _is_inf(tok: tuple[str, str]) -> bool:
    return tok[0] == "name" and tok[1].lower() in ("inf", "infinity")


def _terms(toks: list[tuple[str, str]], i: int, stop) -> tuple[dict[str, float], float, int]:
    """Parse a linear expression starting at ``toks[i]`` until ``stop(tok)``."""
    coeffs: dict[str, float] = {}
    const = 0.0
    while i < len(toks) and not stop(toks[i]):
        sign = 1.0
        while i < len(toks) and toks[i][0] == "sign":
            if toks[i][1] == "-":
                sign = -sign
            i += 1
        coef = 1.0
        if i < len(toks) and toks[i][0] == "num":
            coef = float(toks[i][1])
            i += 1
            if i >= len(toks) or toks[i][0] != "name" or stop(toks[i]):
                const += sign * coef
                continue
        if i >= len(toks) or toks[i][0] != "name":
            raise LpFormatError(f"expected a variable name, got {toks[i] if i < len(toks) else 'end'}")
        name = toks[i][1]
        i += 1
        coeffs[name] = coeffs.get(name, 0.0) + sign * coef
    return coeffs, const, i


def parse_lp(text: str, *, restore_names: bool = True) -> MilpModel:
    table: dict[str, str] = {}
    order: list[str] = []
    name = "model"
    sections: dict[str, list[str]] = {"min": [], "max": [], "st": [], "bounds": [], "bin": [], "gen": []}
    current = None
    for raw in text.splitlines():
        if raw.startswith("\\"):
            m = re.match(r"\\ var (\S+) (.*)$", raw)
            if m:
                table[m.group(1)] = json.loads(m.group(2))
                order.append(m.group(1))
            m = re.match(r"\\ model (.*)$", raw)
            if m:
                name = json.loads(m.group(1))
            continue
        line = raw.split("\\", 1)[0].strip()
        if not line:
            continue
        for pat, sec in _SECTIONS:
            if pat.match(line):
                current = sec
                break
        else:
            if current is None or current == "end":
                raise LpFormatError(f"text outside a section: {line!r}")
            sections[current].append(line)
            continue
        if current == "end":
            break

    maximize = bool(sections["max"])
    obj_toks = _tokens(" ".join(sections["max"] if maximize else sections["min"]))
    if len(obj_toks) >= 2 and obj_toks[0][0] == "name" and obj_toks[1][0] == "colon":
        obj_toks = obj_toks[2:]
    obj, obj_const, _ = _terms(obj_toks, 0, lambda t: False)

    rows = []
    toks = _tokens(" ".join(sections["st"]))
    i = 0
    while i < len(toks):
        label = ""
        if i + 1 < len(toks) and toks[i][0] == "name" and toks[i + 1][0] == "colon":
            label = toks[i][1]
            i += 2
        coeffs, const, i = _terms(toks, i, lambda t: t[0] == "op")
        if i >= len(toks):
            raise LpFormatError(f"row {label or len(rows)} has no sense")
        sense = _SENSE[toks[i][1]]
        i += 1
        sign = 1.0
        while i < len(toks) and toks[i][0] == "sign":
            sign = -sign if toks[i][1] == "-" else sign
            i += 1
        if i >= len(toks) or toks[i][0] != "num":
            raise LpFormatError(f"row {label or len(rows)}: expected a right-hand side")
        rhs = sign * float(toks[i][1]) - const
        i += 1
        rows.append((label, coeffs, sense, rhs))

    bounds: dict[str, list[float]] = {}

    def num_at(ts, k):
        sign = 1.0
        while ts[k][0] == "sign":
            sign = -sign if ts[k][1] == "-" else sign
            k += 1
        if _is_inf(ts[k]):
            return sign * math.inf, k + 1
        if ts[k][0] != "num":
            raise LpFormatError(f"expected a number in bounds, got {ts[k]}")
        return sign * float(ts[k][1]), k + 1

    for line in sections["bounds"]:
        ts = _tokens(line)
        if len(ts) == 2 and ts[1][0] == "name" and ts[1][1].lower() == "free":
            bounds[ts[0][1]] = [-math.inf, math.inf]
            continue
        if ts[0][0] == "name" and not _is_inf(ts[0]):
            var = ts[0][1]
            b = bounds.setdefault(var, [0.0, math.inf])
            op = _SENSE[ts[1][1]]
            val, _ = num_at(ts, 2)
            if op == ">=":
                b[0] = val
            elif op == "<=":
                b[1] = val
            else:
                b[0] = b[1] = val
            continue
        lo, k = num_at(ts, 0)
        op1 = _SENSE[ts[k][1]]
        var = ts[k + 1][1]
        b = bounds.setdefault(var, [0.0, math.inf])
        if op1 == "<=":
            b[0] = lo
        elif op1 == ">=":
            b[1] = lo
        else:
            b[0] = b[1] = lo
        k += 2
        if k < len(ts):
            op2 = _SENSE[ts[k][1]]
            val, _ = num_at(ts, k + 1)
            if op2 == "<=":
                b[1] = val
            else:
                b[0] = val
    bins = [t for line in sections["bin"] for t in line.split()]
    gens = [t for line in sections["gen"] for t in line.split()]

    seen: list[str] = list(order)
    known = set(seen)

    def note(v):
        if v not in known:
            known.add(v)
            seen.append(v)

    for v in obj:
        note(v)
    for _, coeffs, _, _ in rows:
        for v in coeffs:
            note(v)
    for v in list(bounds) + bins + gens:
        note(v)

    def orig(v):
        return table.get(v, v) if restore_names else v

    m = MilpModel(name)
    bin_set, gen_set = set(bins), set(gens)
    for v in seen:
        lo, hi = bounds.get(v, [0.0, math.inf])
        if v in bin_set:
            m.add_var(orig(v), "binary")
        elif v in gen_set:
            m.add_var(orig(v), "integer", lo, hi)
        else:
            m.add_var(orig(v), "continuous", lo, hi)
    sgn = -1.0 if maximize else 1.0
    m.set_objective({orig(v): sgn * c for v, c in obj.items()}, sgn * obj_const)
    for k, (label, coeffs, sense, rhs) in enumerate(rows):
        m.add_row({orig(v): c for v, c in coeffs.items()}, sense, rhs, name=label or f"r{k}")
    return m
