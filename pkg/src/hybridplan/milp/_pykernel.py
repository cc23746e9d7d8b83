"""Bounded-variable primal simplex on a dense tableau, pure Python.

The tableau ``T`` holds ``B^-1 [A | -I | artificials]`` row by row, ``d`` the
reduced costs, ``x`` the value of every column.  Works on floats (``tol`` > 0)
and on exact rationals (``tol`` == 0, Bland's rule), so the same code serves as
the fallback for the compiled kernel and as the exact last resort.
"""
from __future__ import annotations

import math

BASIC, AT_LO, AT_HI, FREE = 0, 1, 2, 3
OPTIMAL, UNBOUNDED, ITER_LIMIT = 0, 1, 2

INF = math.inf


def pivot(T, d, r, j):
    row = T[r]
    p = row[j]
    nz = [k for k, v in enumerate(row) if v != 0]
    for k in nz:
        row[k] = row[k] / p
    row[j] = p / p  # one, in the number type of the tableau
    for i, other in enumerate(T):
        if i == r:
            continue
        f = other[j]
        if f != 0:
            for k in nz:
                other[k] -= f * row[k]
            other[j] = f - f
    dj = d[j]
    if dj != 0:
        for k in nz:
            d[k] -= dj * row[k]
        d[j] = dj - dj


def primal(T, d, x, basis, state, lo, hi, max_iter, tol=1e-9, bland=False):
    """Run primal simplex iterations in place.  Returns ``(status, iterations)``."""
    m = len(T)
    n = len(d)
    exact = tol == 0
    use_bland = bland or exact
    degenerate = 0
    for it in range(max_iter):
        enter = -1
        edir = 0
        best = tol
        for j in range(n):
            s = state[j]
            if s == BASIC or lo[j] == hi[j]:
                continue
            dj = d[j]
            if s == AT_LO:
                viol, dr = -dj, 1
            elif s == AT_HI:
                viol, dr = dj, -1
            else:
                viol, dr = (-dj, 1) if dj < 0 else (dj, -1)
            if viol > best:
                enter, edir, best = j, dr, viol
                if use_bland:
                    break
        if enter < 0:
            return OPTIMAL, it
        j = enter

        # ratio test
        theta = hi[j] - lo[j] if (hi[j] != INF and lo[j] != -INF) else INF
        r = -1
        lims = []
        for i in range(m):
            a = T[i][j]
            if a == 0:
                continue
            a = a if edir > 0 else -a
            if not exact and -tol <= a <= tol:
                continue
            b = basis[i]
            if a > 0:
                if lo[b] == -INF:
                    continue
                lim = (x[b] - lo[b]) / a
            else:
                if hi[b] == INF:
                    continue
                lim = (hi[b] - x[b]) / (-a)
            if lim < 0:
                lim = lim - lim
            lims.append((lim, i, a))
        if lims:
            best_lim = min(l for l, _, _ in lims)
            if best_lim < theta:
                theta = best_lim
                if exact or use_bland:
                    ties = [(basis[i], i) for l, i, _ in lims if l == best_lim]
                    r = min(ties)[1]
                else:
                    slack = 1e-12 * (1.0 + abs(best_lim))
                    cand = [(abs(a), -i, i) for l, i, a in lims if l <= best_lim + slack]
                    r = max(cand)[2]
        if theta == INF:
            return UNBOUNDED, it

        step = theta if edir > 0 else -theta
        if step != 0:
            x[j] += step
            for i in range(m):
                a = T[i][j]
                if a != 0:
                    x[basis[i]] -= step * a
            degenerate = 0
        else:
            degenerate += 1
            if degenerate > 50:
                use_bland = True
        if r < 0:
            if edir > 0:
                state[j], x[j] = AT_HI, hi[j]
            else:
                state[j], x[j] = AT_LO, lo[j]
            continue
        leave = basis[r]
        a = T[r][j] if edir > 0 else -T[r][j]
        if a > 0:
            state[leave], x[leave] = AT_LO, lo[leave]
        else:
            state[leave], x[leave] = AT_HI, hi[leave]
        pivot(T, d, r, j)
        basis[r] = j
        state[j] = BASIC
    return ITER_LIMIT, max_iter
