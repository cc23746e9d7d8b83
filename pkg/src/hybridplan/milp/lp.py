"""Exact LP solves for the reference MILP solver.

Each LP is solved in floating point by the bounded primal simplex of
:mod:`.kernel`; the final basis is then re-solved in rational arithmetic and
checked for primal feasibility and dual optimality.  If that check fails
(rare: degenerate or badly scaled bases) the LP is solved again from scratch
by the rational simplex.  Either way the returned answer is exact.

Standard form: every row ``a.x`` gets a slack ``s = a.x`` whose bounds carry
the row sense, so the equality system is ``[A | -I] z = 0`` with bounds on
every column.  Rows whose slack cannot absorb the starting point get an
artificial column for phase 1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .kernel import AT_HI, AT_LO, BASIC, FREE, ITER_LIMIT, OPTIMAL, UNBOUNDED, primal_exact, primal_float
from .model import MilpError, MilpModel

try:  # gmpy2 is an optional speed-up; Fraction gives the same answers
    from gmpy2 import mpq as _mpq

    def Q(x) -> "Rational":
        return _mpq(x)

    RATIONAL = "gmpy2"
except ImportError:  # pragma: no cover - exercised only without gmpy2
    def Q(x) -> "Rational":
        return Fraction(x)

    RATIONAL = "fractions"

Rational = object
INF = math.inf


def qfloat(x: float):
    """Rational read of a float through its shortest decimal repr (0.1 -> 1/10)."""
    if x == int(x) and abs(x) < 2**53:
        return Q(int(x))
    return Q(Fraction(repr(float(x))))


class LPData:
    """Sparse copy of a sealed model, in float and in rationals."""

    def __init__(self, model: MilpModel):
        self.n = len(model.vars)
        self.m = len(model.rows)
        self.names = [v.name for v in model.vars]
        self.rows = []  # list of [(col, coeff)]
        self.srow_lo = []
        self.srow_hi = []
        for r in model.rows:
            self.rows.append([(model.index(v), c) for v, c in r.coeffs])
            self.srow_lo.append(r.rhs if r.sense in (">=", "=") else -INF)
            self.srow_hi.append(r.rhs if r.sense in ("<=", "=") else INF)
        self.lo = [v.lo for v in model.vars]
        self.hi = [v.hi for v in model.vars]
        self.c = [0.0] * self.n
        for v, c in model.objective.items():
            self.c[model.index(v)] = c
        self.obj_const = model.obj_const
        self.integral = [v.integral for v in model.vars]
        # rational twins
        self.rows_q = [[(j, qfloat(a)) for j, a in row] for row in self.rows]
        self.srow_lo_q = [None if not math.isfinite(v) else qfloat(v) for v in self.srow_lo]
        self.srow_hi_q = [None if not math.isfinite(v) else qfloat(v) for v in self.srow_hi]
        self.c_q = [qfloat(v) for v in self.c]
        self.obj_const_q = qfloat(self.obj_const)
        self.cols = [[] for _ in range(self.n)]
        for i, row in enumerate(self.rows_q):
            for j, a in row:
                self.cols[j].append((i, a))


@dataclass
class LPResult:
    status: str  # optimal | infeasible | unbounded
    x: list | None = None  # rationals, structural columns only
    objective: object = None  # rational, including the constant
    method: str = ""  # float+certificate | exact-simplex
    iterations: int = 0

    def values(self, names) -> dict[str, float]:
        return {n: float(v) for n, v in zip(names, self.x)}


def _qbound(x: float):
    return None if not math.isfinite(x) else qfloat(x)


# ---------------------------------------------------------------------------
# tableau construction


def _start(data: LPData, lo, hi, num, zero):
    """Initial basis.  Returns (rows, basis, state, x, lo, hi, sigma) in ``num``'s type.

    ``rows`` is a list of sparse tableau rows (dict col -> coeff) in the full
    column space; artificials are appended after the slacks.
    """
    n, m = data.n, data.m
    ncol = n + m
    x = [zero] * ncol
    state = [0] * ncol
    clo = [num(v) if math.isfinite(v) else v for v in lo]
    chi = [num(v) if math.isfinite(v) else v for v in hi]
    for j in range(n):
        if math.isfinite(lo[j]):
            x[j], state[j] = clo[j], AT_LO
        elif math.isfinite(hi[j]):
            x[j], state[j] = chi[j], AT_HI
        else:
            x[j], state[j] = zero, FREE
    rows_num = data.rows if num is float else data.rows_q
    slo = [num(v) if math.isfinite(v) else v for v in data.srow_lo]
    shi = [num(v) if math.isfinite(v) else v for v in data.srow_hi]
    clo += slo
    chi += shi
    trows = []
    basis = []
    arts = []  # (row, sigma)
    for i, row in enumerate(rows_num):
        act = zero
        for j, a in row:
            act += a * x[j]
        s = n + i
        if slo[i] <= act <= shi[i]:
            x[s] = act
            state[s] = BASIC
            t = {j: -a for j, a in row}
            t[s] = num(1)
            trows.append(t)
            basis.append(s)
        else:
            sbar = slo[i] if act < slo[i] else shi[i]
            x[s] = sbar
            state[s] = AT_LO if act < slo[i] else AT_HI
            resid = sbar - act
            sigma = 1 if resid > 0 else -1
            arts.append((i, sigma, abs(resid)))
            t = {j: a * sigma for j, a in row}
            t[s] = num(-sigma)
            trows.append(t)
            basis.append(None)
    for k, (i, sigma, val) in enumerate(arts):
        col = ncol + k
        trows[i][col] = num(1)
        basis[i] = col
        x.append(val)
        state.append(BASIC)
        clo.append(zero)
        chi.append(INF)
    return trows, basis, state, x, clo, chi, arts


def _reduced(trows, basis, cost, ncols, zero):
    d = list(cost) + [zero] * (ncols - len(cost))
    for i, b in enumerate(basis):
        cb = cost[b] if b < len(cost) else zero
        if cb != 0:
            for j, v in trows[i].items():
                d[j] -= cb * v
    return d


# ---------------------------------------------------------------------------
# rational linear algebra


def _solve_sparse(rows: list[dict], rhs: list, nvar: int):
    """Solve a square sparse system exactly.  ``rows`` are dicts var -> coeff.

    Returns the solution list or None if singular.
    """
    rows = [dict(r) for r in rows]
    rhs = list(rhs)
    m = len(rows)
    by_col: dict[int, set] = {}
    for i, r in enumerate(rows):
        for j in r:
            by_col.setdefault(j, set()).add(i)
    pivots = []  # (row, col)
    done_rows: set[int] = set()
    # Markowitz-lite: process columns by current count
    remaining = set(range(nvar))
    while remaining:
        j = min(remaining, key=lambda c: (len(by_col.get(c, ())), c))
        remaining.discard(j)
        cand = [i for i in by_col.get(j, ()) if i not in done_rows]
        if not cand:
            return None
        p = min(cand, key=lambda i: (len(rows[i]), i))
        done_rows.add(p)
        prow = rows[p]
        pv = prow[j]
        for i in list(by_col.get(j, ())):
            if i == p or i in done_rows:
                continue
            r = rows[i]
            f = r[j] / pv
            for k, v in prow.items():
                nv = r.get(k, 0) - f * v
                if nv == 0:
                    if k in r:
                        del r[k]
                        by_col[k].discard(i)
                else:
                    if k not in r:
                        by_col.setdefault(k, set()).add(i)
                    r[k] = nv
            rhs[i] -= f * rhs[p]
        pivots.append((p, j))
    if len(pivots) != m:
        return None
    sol = [None] * nvar
    for p, j in reversed(pivots):
        r = rows[p]
        acc = rhs[p]
        for k, v in r.items():
            if k != j:
                acc -= v * sol[k]
        sol[j] = acc / r[j]
    return sol


def _column(data: LPData, col: int, arts):
    n, m = data.n, data.m
    if col < n:
        return data.cols[col]
    if col < n + m:
        return [(col - n, Q(-1))]
    i, sigma, _ = arts[col - n - m]
    return [(i, Q(sigma))]


def _certify(data: LPData, basis, state, lo_q, hi_q, arts, phase1: bool):
    """Rebuild the vertex of ``basis`` exactly and check it.

    Returns (x_q over all columns, objective) or None if the basis is not
    provably optimal.
    """
    n, m = data.n, data.m
    ncols = n + m + len(arts)
    zero = Q(0)
    vals = [zero] * ncols
    for j in range(ncols):
        s = state[j]
        if s == AT_LO:
            vals[j] = lo_q[j]
        elif s == AT_HI:
            vals[j] = hi_q[j]
        # FREE and BASIC start at zero
        if s in (AT_LO, AT_HI) and vals[j] is None:
            return None
    in_basis = set(basis)
    b = [zero] * m
    for j in range(ncols):
        if j in in_basis or vals[j] == 0:
            continue
        for i, a in _column(data, j, arts):
            b[i] -= a * vals[j]
    Bmat = [dict() for _ in range(m)]
    for pos, col in enumerate(basis):
        for i, a in _column(data, col, arts):
            Bmat[i][pos] = a
    xb = _solve_sparse(Bmat, b, m)
    if xb is None:
        return None
    for pos, col in enumerate(basis):
        v = xb[pos]
        if (lo_q[col] is not None and v < lo_q[col]) or (hi_q[col] is not None and v > hi_q[col]):
            return None
        vals[col] = v
    # duals
    if phase1:
        cost = [zero] * (n + m) + [Q(1)] * len(arts)
    else:
        cost = list(data.c_q) + [zero] * (m + len(arts))
    BT = [dict() for _ in range(m)]
    for pos, col in enumerate(basis):
        for i, a in _column(data, col, arts):
            BT[pos][i] = a
    y = _solve_sparse(BT, [cost[col] for col in basis], m)
    if y is None:
        return None
    for j in range(ncols):
        if j in in_basis:
            continue
        if lo_q[j] is not None and hi_q[j] is not None and lo_q[j] == hi_q[j]:
            continue
        dj = cost[j]
        for i, a in _column(data, j, arts):
            dj -= y[i] * a
        s = state[j]
        if s == AT_LO and dj < 0:
            return None
        if s == AT_HI and dj > 0:
            return None
        if s == FREE and dj != 0:
            return None
    obj = sum((cost[j] * vals[j] for j in range(ncols) if cost[j] != 0), zero)
    return vals, obj


# ---------------------------------------------------------------------------
# drivers


def _iter_cap(m, n):
    return 50 * (m + n) + 1000


def _float_solve(data: LPData, lo, hi, kernel=None):
    """Float two-phase simplex.  Returns (status, basis, state, arts, iters)."""
    n, m = data.n, data.m
    trows, basis, state, x, clo, chi, arts = _start(data, lo, hi, float, 0.0)
    ncols = len(x)
    T = np.zeros((m, ncols))
    for i, t in enumerate(trows):
        for j, v in t.items():
            T[i, j] = v
    xa = np.array(x, dtype=float)
    lo_a = np.array(clo, dtype=float)
    hi_a = np.array(chi, dtype=float)
    basis_a = np.array(basis, dtype=np.intp)
    state_a = np.array(state, dtype=np.int8)
    iters = 0
    cap = _iter_cap(m, ncols)
    if arts:
        cost1 = np.zeros(ncols)
        cost1[n + m:] = 1.0
        d = cost1 - cost1[basis_a] @ T
        st, it = primal_float(T, d, xa, basis_a, state_a, lo_a, hi_a, cap, kernel=kernel)
        iters += it
        if st != OPTIMAL:
            return "failed", basis_a, state_a, arts, iters
        infeas = float(xa[n + m:].sum())
        scale = 1.0 + max((abs(v) for v in xa[:n + m]), default=0.0)
        if infeas > 1e-9 * scale:
            return "infeasible", basis_a, state_a, arts, iters
        hi_a[n + m:] = 0.0
        for j in range(n + m, ncols):
            if state_a[j] != BASIC:
                state_a[j] = AT_LO
                xa[j] = 0.0
    cost = np.zeros(ncols)
    cost[:n] = data.c
    d = cost - cost[basis_a] @ T
    st, it = primal_float(T, d, xa, basis_a, state_a, lo_a, hi_a, cap, kernel=kernel)
    iters += it
    if st == UNBOUNDED:
        return "unbounded", basis_a, state_a, arts, iters
    if st != OPTIMAL:
        return "failed", basis_a, state_a, arts, iters
    return "optimal", basis_a, state_a, arts, iters


def _bounds_q(data: LPData, lo, hi, arts, phase1: bool):
    lo_q = [_qbound(v) for v in lo] + list(data.srow_lo_q)
    hi_q = [_qbound(v) for v in hi] + list(data.srow_hi_q)
    lo_q += [Q(0)] * len(arts)
    hi_q += [None if phase1 else Q(0)] * len(arts)
    return lo_q, hi_q


def exact_solve(data: LPData, lo, hi) -> LPResult:
    """Cold two-phase rational simplex."""
    n, m = data.n, data.m
    zero = Q(0)
    trows, basis, state, x, clo, chi, arts = _start(data, lo, hi, qfloat, zero)
    ncols = len(x)
    T = [[zero] * ncols for _ in range(m)]
    for i, t in enumerate(trows):
        for j, v in t.items():
            T[i][j] = Q(v)
    x = [Q(v) for v in x]
    lo_l, hi_l = clo, chi
    cap = 10**9
    iters = 0
    if arts:
        cost1 = [zero] * (n + m) + [Q(1)] * len(arts)
        d = _reduced([dict(enumerate(r)) for r in T], basis, cost1, ncols, zero)
        st, it = primal_exact(T, d, x, basis, state, lo_l, hi_l, cap)
        iters += it
        if sum(x[n + m:], zero) > 0:
            return LPResult("infeasible", method="exact-simplex", iterations=iters)
        for j in range(n + m, ncols):
            hi_l[j] = zero
    cost = list(data.c_q) + [zero] * (ncols - n)
    d = _reduced([dict(enumerate(r)) for r in T], basis, cost, ncols, zero)
    st, it = primal_exact(T, d, x, basis, state, lo_l, hi_l, cap)
    iters += it
    if st == UNBOUNDED:
        return LPResult("unbounded", method="exact-simplex", iterations=iters)
    xs = x[:n]
    obj = sum((c * v for c, v in zip(data.c_q, xs) if c != 0), zero) + data.obj_const_q
    return LPResult("optimal", xs, obj, "exact-simplex", iters)


def solve_lp(data: LPData, lo=None, hi=None, kernel: str | None = None) -> LPResult:
    """Exact optimum of the LP relaxation with column bounds ``lo``/``hi``."""
    lo = list(data.lo if lo is None else lo)
    hi = list(data.hi if hi is None else hi)
    for j in range(data.n):
        if lo[j] > hi[j]:
            return LPResult("infeasible", method="bounds")
    status, basis, state, arts, iters = _float_solve(data, lo, hi, kernel)
    basis = [int(b) for b in basis]
    state = [int(s) for s in state]
    if status == "optimal":
        lo_q, hi_q = _bounds_q(data, lo, hi, arts, phase1=False)
        cert = _certify(data, basis, state, lo_q, hi_q, arts, phase1=False)
        if cert is not None:
            vals, obj = cert
            return LPResult("optimal", vals[: data.n], obj + data.obj_const_q, "float+certificate", iters)
    elif status == "infeasible":
        lo_q, hi_q = _bounds_q(data, lo, hi, arts, phase1=True)
        cert = _certify(data, basis, state, lo_q, hi_q, arts, phase1=True)
        if cert is not None and cert[1] > 0:
            return LPResult("infeasible", method="float+certificate", iterations=iters)
    res = exact_solve(data, lo, hi)
    res.iterations += iters
    return res


def solve_model_lp(model: MilpModel, kernel: str | None = None) -> LPResult:
    """LP relaxation of ``model`` (integrality dropped)."""
    res = solve_lp(LPData(model), kernel=kernel)
    if res.status == "unbounded":
        raise MilpError("LP relaxation is unbounded")
    return res
