"""Command line: plan, validate, export-lp, plot, gen."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import domains
from .encoder import EncodeOptions, encode
from .encoding import MPolicy
from .milp.backends import make_backend
from .milp.lpformat import export_lp
from .milp.model import MilpError
from .model import InputSignal, ModelError, Run, load_automaton
from .planner import InternalConsistencyError, PlanRequest, plan, write_incumbents
from .qsp import QspError, compile_qsp, extract_schedule, load_qsp, project, qsp_to_json
from .validator import validate

EXIT_OK, EXIT_ERROR, EXIT_INFEASIBLE, EXIT_TIMEOUT = 0, 1, 2, 3

log = logging.getLogger("hybridplan")


class CliError(Exception):
    pass


def _read_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise CliError(f"{path}: invalid JSON ({exc})") from None


def _write_json(path: Path, doc) -> None:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _load(model_path, qsp_path=None):
    """(original automaton, automaton to plan on, qsp or None)."""
    base = load_automaton(_read_json(model_path))
    if qsp_path is None:
        return base, base, None
    q = load_qsp(_read_json(qsp_path))
    return base, compile_qsp(base, q), q


def _options(args, ub=None) -> EncodeOptions:
    return EncodeOptions(T_max=args.t_max, policy=MPolicy(args.big_m), cuts=args.cuts == "on", objective_ub=ub)


def _backend(args):
    if args.backend == "external":
        return make_backend("external", command=args.solver_cmd)
    return make_backend(args.backend)


def _write_lp(a, n, args, out: Path, stem="model"):
    model, _ = encode(a, n, _options(args))
    doc = export_lp(model)
    (out / f"{stem}.lp").write_text(doc.text, encoding="utf-8")
    _write_json(out / f"{stem}.names.json", doc.names)


# ---------------------------------------------------------------------------


def cmd_plan(args) -> int:
    base, a, q = _load(args.model, args.qsp)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    req = PlanRequest(
        a,
        n=None if args.iterative else args.n,
        n0=args.n0,
        n_max=args.n_max,
        budget=args.budget,
        backend=_backend(args),
        cuts=args.cuts == "on",
        T_max=args.t_max,
        big_m=args.big_m,
    )
    res = plan(req)
    write_incumbents(out / "incumbents.jsonl", res.incumbents)
    _write_json(out / "stats.json", res.stats_json())
    doc = res.plan_json()
    if q is not None:
        doc["qsp"] = qsp_to_json(q)
        if res.run is not None:
            doc["schedule"] = extract_schedule(res.run, q)
            prun, psig = project(base, a, res.run, res.signal)
            doc["projected"] = {"run": prun.to_json(), "input": psig.to_json()}
    _write_json(out / "plan.json", doc)
    if res.report is not None:
        _write_json(out / "report.json", res.report.to_json())
    n_lp = res.n if res.n is not None else req.schedule()[-1]
    _write_lp(a, n_lp, args, out)
    print(f"{res.status} n={res.n} makespan={res.makespan}")
    if res.run is not None:
        return EXIT_OK
    return EXIT_TIMEOUT if res.status == "timeout" else EXIT_INFEASIBLE


def cmd_validate(args) -> int:
    _, a, _ = _load(args.model, args.qsp)
    doc = _read_json(args.plan)
    if not doc.get("run"):
        raise CliError(f"{args.plan} holds no run (status {doc.get('status')!r})")
    try:
        run = Run.from_json(doc["run"])
        sig = InputSignal.from_json(doc["input"])
    except (KeyError, TypeError, ValueError) as exc:
        raise CliError(f"{args.plan}: malformed run ({exc})") from None
    rep = validate(a, sig, run, args.tol)
    if args.out:
        _write_json(Path(args.out), rep.to_json())
    if rep.ok:
        print(f"ok: {len(rep.checks)} checks passed")
        return EXIT_OK
    for c in rep.failures:
        print(f"FAIL {c.name} step={c.step}: {c.detail}", file=sys.stderr)
    return EXIT_ERROR


def cmd_export_lp(args) -> int:
    _, a, _ = _load(args.model, args.qsp)
    out = Path(args.out)
    model, _ = encode(a, args.n, _options(args))
    doc = export_lp(model)
    out.write_text(doc.text, encoding="utf-8")
    _write_json(out.with_suffix(".names.json"), doc.names)
    print(f"{len(model.vars)} vars, {len(model.rows)} rows -> {out}")
    return EXIT_OK


def _fmt(x: float) -> str:
    return repr(float(x))


def cmd_plot(args) -> int:
    doc = _read_json(args.plan)
    run_doc = doc.get("run")
    if not run_doc:
        raise CliError(f"{args.plan} holds no run")
    run = Run.from_json(run_doc)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    names = list(run.states[0])
    lines = [",".join(["t"] + names)]
    for t, s in zip(run.times, run.states):
        lines.append(",".join([_fmt(t)] + [_fmt(s[v]) for v in names]))
    (out / "trajectory.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    pairs = []
    for spec in args.xy or []:
        xs = spec.split(",")
        if len(xs) != 2 or any(v not in names for v in xs):
            raise CliError(f"--xy {spec!r}: expected two state variables 'x,y'")
        pairs.append(tuple(xs))
    if pairs:
        (out / "trajectory.svg").write_text(_svg(run, pairs), encoding="utf-8")
    print(f"wrote {out / 'trajectory.csv'}" + (f" and {out / 'trajectory.svg'}" if pairs else ""))
    return EXIT_OK


COLORS = ("#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _svg(run: Run, pairs, size: float = 400.0, pad: float = 20.0) -> str:
    xs = [s[x] for s in run.states for x, _ in pairs]
    ys = [s[y] for s in run.states for _, y in pairs]
    x0, x1, y0, y1 = min(xs), max(xs), min(ys), max(ys)
    span = max(x1 - x0, y1 - y0) or 1.0
    k = (size - 2 * pad) / span

    def px(x, y):
        return f"{pad + (x - x0) * k:.3f},{size - pad - (y - y0) * k:.3f}"

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size:g}" height="{size:g}" viewBox="0 0 {size:g} {size:g}">']
    for i, (x, y) in enumerate(pairs):
        pts = " ".join(px(s[x], s[y]) for s in run.states)
        col = COLORS[i % len(COLORS)]
        parts.append(f'<polyline fill="none" stroke="{col}" stroke-width="2" points="{pts}"><title>{x},{y}</title></polyline>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def cmd_gen(args) -> int:
    cfg = domains.load_config(args.config) if args.config else None
    try:
        doc, qdoc = domains.generate(args.family, cfg)
    except (domains.MarsConfigError, domains.AirConfigError, domains.DeliveryConfigError) as exc:
        raise CliError(str(exc)) from None
    load_automaton(doc)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "model.json", doc)
    if qdoc is not None:
        _write_json(out / "qsp.json", qdoc)
    print(f"wrote {out / 'model.json'}" + (f" and {out / 'qsp.json'}" if qdoc else ""))
    return EXIT_OK


# ---------------------------------------------------------------------------


def _encoding_flags(p):
    p.add_argument("--cuts", choices=("on", "off"), default="off", help="add conflict cuts")
    p.add_argument("--big-m", type=float, default=1e6, help="fallback Big-M for unbounded rows")
    p.add_argument("--t-max", type=float, default=1e4, help="upper bound on a single step duration")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hybridplan", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("plan", help="plan and write plan.json, report.json, incumbents.jsonl, model.lp, stats.json")
    p.add_argument("--model", required=True)
    p.add_argument("--qsp")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--n", type=int)
    g.add_argument("--iterative", action="store_true")
    p.add_argument("--n0", type=int, default=1)
    p.add_argument("--n-max", type=int, default=32)
    p.add_argument("--budget", type=float, help="wall-clock seconds for the whole request")
    p.add_argument("--backend", choices=("auto", "reference", "highs", "external"), default="auto")
    p.add_argument("--solver-cmd", help="external solver command template ({lp}, {sol}, {budget})")
    p.add_argument("--out", required=True)
    _encoding_flags(p)
    p.set_defaults(fn=cmd_plan)

    p = sub.add_parser("validate", help="check a plan.json against a model")
    p.add_argument("--model", required=True)
    p.add_argument("--qsp")
    p.add_argument("--plan", required=True)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--out", help="write the report here")
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("export-lp", help="write the MILP encoding in LP format")
    p.add_argument("--model", required=True)
    p.add_argument("--qsp")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--out", required=True)
    _encoding_flags(p)
    p.set_defaults(fn=cmd_export_lp)

    p = sub.add_parser("plot", help="CSV of states at each breakpoint, SVG for position pairs")
    p.add_argument("--plan", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--xy", action="append", help="x,y state pair to draw (repeatable)")
    p.set_defaults(fn=cmd_plot)

    p = sub.add_parser("gen", help="generate a benchmark model from a config")
    p.add_argument("family", choices=domains.FAMILIES)
    p.add_argument("--config", help="shipped config name or path")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_gen)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        return args.fn(args)
    except (CliError, ModelError, QspError, MilpError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except InternalConsistencyError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
