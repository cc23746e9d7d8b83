"""Pick the simplex kernel at import time.

The compiled kernel is used when it was built; ``HYBRIDPLAN_KERNEL=python``
forces the pure-Python one (handy for debugging and for the benchmark).
"""
from __future__ import annotations

import os

import numpy as np

from . import _pykernel
from ._pykernel import AT_HI, AT_LO, BASIC, FREE, ITER_LIMIT, OPTIMAL, UNBOUNDED  # noqa: F401

_ck = None
if os.environ.get("HYBRIDPLAN_KERNEL", "").lower() != "python":
    try:
        from . import _ckernel as _ck
    except ImportError:  # extension not built
        _ck = None

KERNEL = "cython" if _ck is not None else "python"


def primal_float(T, d, x, basis, state, lo, hi, max_iter, tol=1e-9, kernel: str | None = None):
    """Float simplex on numpy arrays, updated in place.  Returns ``(status, iters)``."""
    which = kernel or KERNEL
    if which == "cython":
        if _ck is None:
            raise RuntimeError("compiled kernel not available")
        return _ck.primal(T, d, x, basis, state, lo, hi, max_iter, tol, False)
    # the python kernel works on nested lists; copy out and back
    Tl, dl, xl = T.tolist(), d.tolist(), x.tolist()
    bl, sl = basis.tolist(), state.tolist()
    res = _pykernel.primal(Tl, dl, xl, bl, sl, lo.tolist(), hi.tolist(), max_iter, tol)
    if T.shape[0]:  # a 0-row tableau comes back as [], which numpy won't broadcast
        T[:] = Tl
    d[:] = dl
    x[:] = xl
    basis[:] = bl
    state[:] = np.asarray(sl, dtype=state.dtype)
    return res


def primal_exact(T, d, x, basis, state, lo, hi, max_iter):
    """Rational simplex (Bland's rule) on lists of exact numbers."""
    return _pykernel.primal(T, d, x, basis, state, lo, hi, max_iter, tol=0)
