# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled twin of ``_pykernel.primal`` for float64 tableaus."""
import numpy as np
from libc.math cimport INFINITY, fabs

cdef enum:
    BASIC = 0
    AT_LO = 1
    AT_HI = 2
    FREE = 3


cdef void _pivot(double[:, ::1] T, double[::1] d, Py_ssize_t r, Py_ssize_t j, Py_ssize_t[::1] nz) noexcept nogil:
    cdef Py_ssize_t m = T.shape[0]
    cdef Py_ssize_t n = T.shape[1]
    cdef Py_ssize_t i, k, q, cnt = 0
    cdef double p = T[r, j]
    cdef double f
    for k in range(n):
        if T[r, k] != 0.0:
            T[r, k] = T[r, k] / p
            nz[cnt] = k
            cnt += 1
    T[r, j] = 1.0
    for i in range(m):
        if i == r:
            continue
        f = T[i, j]
        if f != 0.0:
            for q in range(cnt):
                k = nz[q]
                T[i, k] -= f * T[r, k]
            T[i, j] = 0.0
    f = d[j]
    if f != 0.0:
        for q in range(cnt):
            k = nz[q]
            d[k] -= f * T[r, k]
        d[j] = 0.0


cdef int _primal(double[:, ::1] T, double[::1] d, double[::1] x, Py_ssize_t[::1] basis,
                 signed char[::1] state, double[::1] lo, double[::1] hi,
                 Py_ssize_t max_iter, double tol, bint bland,
                 Py_ssize_t[::1] nz, double[::1] lims, Py_ssize_t* iters) noexcept nogil:
    cdef Py_ssize_t m = T.shape[0]
    cdef Py_ssize_t n = T.shape[1]
    cdef Py_ssize_t it, i, j, r, enter, b, leave
    cdef int edir, dr, s, degenerate = 0
    cdef bint use_bland = bland
    cdef double best, viol, dj, theta, a, lim, best_lim, slack, step, best_a

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
                viol = -dj
                dr = 1
            elif s == AT_HI:
                viol = dj
                dr = -1
            elif dj < 0:
                viol = -dj
                dr = 1
            else:
                viol = dj
                dr = -1
            if viol > best:
                enter = j
                edir = dr
                best = viol
                if use_bland:
                    break
        if enter < 0:
            iters[0] = it
            return 0
        j = enter

        if hi[j] != INFINITY and lo[j] != -INFINITY:
            theta = hi[j] - lo[j]
        else:
            theta = INFINITY
        best_lim = INFINITY
        for i in range(m):
            lims[i] = INFINITY
            a = T[i, j]
            if a == 0.0:
                continue
            if edir < 0:
                a = -a
            if -tol <= a <= tol:
                continue
            b = basis[i]
            if a > 0:
                if lo[b] == -INFINITY:
                    continue
                lim = (x[b] - lo[b]) / a
            else:
                if hi[b] == INFINITY:
                    continue
                lim = (hi[b] - x[b]) / (-a)
            if lim < 0:
                lim = 0.0
            lims[i] = lim
            if lim < best_lim:
                best_lim = lim
        r = -1
        if best_lim < theta:
            theta = best_lim
            if use_bland:
                for i in range(m):
                    if lims[i] == best_lim and (r < 0 or basis[i] < basis[r]):
                        r = i
            else:
                slack = 1e-12 * (1.0 + fabs(best_lim))
                best_a = -1.0
                for i in range(m):
                    if lims[i] <= best_lim + slack:
                        a = fabs(T[i, j])
                        if a > best_a:
                            best_a = a
                            r = i
        if theta == INFINITY:
            iters[0] = it
            return 1

        step = theta if edir > 0 else -theta
        if step != 0.0:
            x[j] += step
            for i in range(m):
                a = T[i, j]
                if a != 0.0:
                    x[basis[i]] -= step * a
            degenerate = 0
        else:
            degenerate += 1
            if degenerate > 50:
                use_bland = True
        if r < 0:
            if edir > 0:
                state[j] = AT_HI
                x[j] = hi[j]
            else:
                state[j] = AT_LO
                x[j] = lo[j]
            continue
        leave = basis[r]
        a = T[r, j] if edir > 0 else -T[r, j]
        if a > 0:
            state[leave] = AT_LO
            x[leave] = lo[leave]
        else:
            state[leave] = AT_HI
            x[leave] = hi[leave]
        _pivot(T, d, r, j, nz)
        basis[r] = j
        state[j] = BASIC
    iters[0] = max_iter
    return 2


def primal(double[:, ::1] T, double[::1] d, double[::1] x, Py_ssize_t[::1] basis,
           signed char[::1] state, double[::1] lo, double[::1] hi,
           Py_ssize_t max_iter, double tol=1e-9, bint bland=False):
    """Same contract as the pure-Python kernel: returns ``(status, iterations)``."""
    cdef Py_ssize_t iters = 0
    cdef int status
    cdef Py_ssize_t[::1] nz = np.empty(T.shape[1], dtype=np.intp)
    cdef double[::1] lims = np.empty(max(T.shape[0], 1), dtype=np.float64)
    with nogil:
        status = _primal(T, d, x, basis, state, lo, hi, max_iter, tol, bland, nz, lims, &iters)
    return status, iters
