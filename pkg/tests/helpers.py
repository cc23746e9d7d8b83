"""Shared bits for the test modules (not a test file)."""
from hybridplan.encoder import EncodeOptions, encode, extract_input, extract_run
from hybridplan.milp.backends import AutoBackend, HighsBackend, ReferenceBackend
from hybridplan.model import FlowSet, InputSignal, Run, SignalStep, eval_formula

BACKENDS = {"reference": ReferenceBackend, "highs": HighsBackend, "auto": AutoBackend}


def solve_at(a, n, backend="auto", **opts):
    """(solution, run or None, signal or None, model)"""
    model, ctx = encode(a, n, EncodeOptions(**opts))
    sol = BACKENDS[backend]().solve(model)
    if not sol.has_solution:
        return sol, None, None, model
    return sol, extract_run(ctx, sol), extract_input(ctx, sol), model


def append_idle(a, run, sig):
    """Append a zero-duration flow step that keeps the last state.

    Tries the last input point (and then all zeros) and, per group, the first
    flow whose condition holds there.  Returns None if no flow set fits.
    """
    q = dict(run.states[-1])
    candidates = []
    if sig.steps:
        candidates.append(dict(sig.steps[-1].point))
    candidates.append({u: 0.0 for u in a.inputs})
    for point in candidates:
        val = {**q, **point}
        if not all(a.var_map[u].contains(point[u], 0.0) for u in a.inputs):
            continue
        chosen = []
        for k in range(len(a.groups)):
            fk = [f.name for f in a.flows_of(k) if eval_formula(f.cond, val, 1e-9)]
            if not fk:
                break
            chosen.append(fk[0])
        else:
            r2 = Run(run.states + (q,), run.actions + (FlowSet(tuple(chosen)),), run.durations + (0.0,))
            s2 = InputSignal(sig.steps + (SignalStep(run.total_time, 0.0, point, None),))
            return r2, s2
    return None
