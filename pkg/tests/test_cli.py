import json
import os
import subprocess
import sys

import pytest

from conftest import write_doc
from hybridplan.cli import EXIT_ERROR, EXIT_INFEASIBLE, EXIT_OK, EXIT_TIMEOUT, main
from hybridplan.domains.toy import DWELL, DWELL_MAKESPAN, DWELL_QSP, INST_A, INST_B, INST_C


@pytest.fixture
def files(tmp_path):
    return {
        "a": write_doc(tmp_path / "a.json", INST_A),
        "b": write_doc(tmp_path / "b.json", INST_B),
        "c": write_doc(tmp_path / "c.json", INST_C),
        "dwell": write_doc(tmp_path / "dwell.json", DWELL),
        "dwell_qsp": write_doc(tmp_path / "dwell_qsp.json", DWELL_QSP),
    }


def read(p):
    return json.loads(open(p, encoding="utf-8").read())


def test_plan_inst_a(files, tmp_path):
    out = tmp_path / "out"
    assert main(["plan", "--model", files["a"], "--n", "1", "--backend", "reference", "--out", str(out)]) == EXIT_OK
    doc = read(out / "plan.json")
    assert doc["makespan"] == 5.0 and doc["status"] == "optimal-for-n"
    assert read(out / "report.json")["ok"] is True
    for f in ("incumbents.jsonl", "model.lp", "model.names.json", "stats.json"):
        assert (out / f).exists()


def test_plan_inst_b_too_few_steps(files, tmp_path):
    assert main(["plan", "--model", files["b"], "--n", "1", "--out", str(tmp_path / "o")]) == EXIT_INFEASIBLE
    assert read(tmp_path / "o" / "plan.json")["run"] is None


def test_plan_timeout(files, tmp_path):
    code = main(["plan", "--model", files["a"], "--iterative", "--n-max", "3", "--budget", "0", "--out", str(tmp_path / "o")])
    assert code == EXIT_TIMEOUT


@pytest.mark.slow
def test_plan_mars_iterative(tmp_path):
    assert main(["gen", "mars", "--config", "mars_terrain", "--out", str(tmp_path / "g")]) == EXIT_OK
    out = tmp_path / "o"
    code = main(["plan", "--model", str(tmp_path / "g" / "model.json"), "--iterative", "--n-max", "6",
                 "--backend", "highs", "--out", str(out)])
    assert code == EXIT_OK
    objs = [json.loads(l)["objective"] for l in (out / "incumbents.jsonl").read_text().splitlines()]
    assert objs and all(b <= a for a, b in zip(objs, objs[1:]))
    assert objs[-1] == pytest.approx(read(out / "plan.json")["makespan"], abs=1e-6)


def test_plan_with_qsp(files, tmp_path):
    out = tmp_path / "o"
    code = main(["plan", "--model", files["dwell"], "--qsp", files["dwell_qsp"], "--n", "3", "--out", str(out)])
    assert code == EXIT_OK
    doc = read(out / "plan.json")
    assert doc["makespan"] == pytest.approx(DWELL_MAKESPAN)
    assert 20 - 1e-6 <= doc["schedule"]["e1"] <= 30 + 1e-6
    assert "clock_ep0" not in doc["projected"]["run"]["states"][0]
    assert main(["validate", "--model", files["dwell"], "--qsp", files["dwell_qsp"], "--plan", str(out / "plan.json")]) == EXIT_OK


def test_validate_good_and_mutated(files, tmp_path, capsys):
    out = tmp_path / "o"
    main(["plan", "--model", files["c"], "--n", "3", "--out", str(out)])
    assert main(["validate", "--model", files["c"], "--plan", str(out / "plan.json"), "--out", str(tmp_path / "r.json")]) == EXIT_OK
    assert read(tmp_path / "r.json")["ok"]
    doc = read(out / "plan.json")
    doc["run"]["states"][1]["x"] += 0.5
    bad = write_doc(tmp_path / "bad.json", doc)
    capsys.readouterr()
    assert main(["validate", "--model", files["c"], "--plan", bad]) == EXIT_ERROR
    err = capsys.readouterr().err
    assert "FAIL flow-dynamics step=0" in err


def test_validate_without_run(files, tmp_path, capsys):
    main(["plan", "--model", files["b"], "--n", "1", "--out", str(tmp_path / "o")])
    assert main(["validate", "--model", files["b"], "--plan", str(tmp_path / "o" / "plan.json")]) == EXIT_ERROR
    assert "no run" in capsys.readouterr().err


def test_plot_inst_c(files, tmp_path):
    out = tmp_path / "o"
    main(["plan", "--model", files["c"], "--n", "3", "--out", str(out)])
    assert main(["plot", "--plan", str(out / "plan.json"), "--out", str(tmp_path / "p"), "--xy", "x,x"]) == EXIT_OK
    rows = (tmp_path / "p" / "trajectory.csv").read_text().splitlines()
    assert rows[0] == "t,x"
    pts = [tuple(map(float, r.split(","))) for r in rows[1:]]
    assert (5.0, 5.0) in pts and pts[-1] == (7.5, 10.0)
    svg = (tmp_path / "p" / "trajectory.svg").read_text()
    assert svg.startswith("<svg") and "<polyline" in svg


def test_plot_bad_pair(files, tmp_path, capsys):
    out = tmp_path / "o"
    main(["plan", "--model", files["a"], "--n", "1", "--out", str(out)])
    assert main(["plot", "--plan", str(out / "plan.json"), "--out", str(tmp_path / "p"), "--xy", "x,nope"]) == EXIT_ERROR


def test_export_lp(files, tmp_path):
    lp = tmp_path / "m.lp"
    assert main(["export-lp", "--model", files["b"], "--n", "3", "--out", str(lp)]) == EXIT_OK
    from hybridplan.encoder import encode
    from hybridplan.milp.lpformat import export_lp
    from hybridplan.model import load_automaton

    assert lp.read_text() == export_lp(encode(load_automaton(INST_B), 3)[0]).text
    assert (tmp_path / "m.names.json").exists()


def test_gen_every_family(tmp_path):
    for fam, cfg in (("mars", "mars_terrain"), ("air", "air_one_region"), ("delivery", "delivery_window")):
        out = tmp_path / fam
        assert main(["gen", fam, "--config", cfg, "--out", str(out)]) == EXIT_OK
        assert (out / "model.json").exists()
    assert (tmp_path / "delivery" / "qsp.json").exists()


def test_gen_bad_config(tmp_path, capsys):
    bad = write_doc(tmp_path / "cfg.json", {"battery": 99})
    assert main(["gen", "mars", "--config", bad, "--out", str(tmp_path / "o")]) == EXIT_ERROR
    assert "battery" in capsys.readouterr().err


def test_bad_inputs(tmp_path, capsys):
    assert main(["plan", "--model", str(tmp_path / "missing.json"), "--n", "1", "--out", str(tmp_path)]) == EXIT_ERROR
    (tmp_path / "junk.json").write_text("{not json")
    assert main(["plan", "--model", str(tmp_path / "junk.json"), "--n", "1", "--out", str(tmp_path)]) == EXIT_ERROR
    bad = write_doc(tmp_path / "bad.json", {"vars": [{"name": "x"}]})
    assert main(["plan", "--model", bad, "--n", "1", "--out", str(tmp_path)]) == EXIT_ERROR
    assert capsys.readouterr().err.count("error:") == 3


def test_outputs_are_byte_deterministic(files, tmp_path):
    blobs = []
    for k in range(2):
        out = tmp_path / f"o{k}"
        main(["plan", "--model", files["c"], "--n", "3", "--backend", "reference", "--out", str(out)])
        main(["plot", "--plan", str(out / "plan.json"), "--out", str(out / "plot"), "--xy", "x,x"])
        blobs.append({f: (out / f).read_bytes() for f in ("plan.json", "report.json", "model.lp", "model.names.json",
                                                           "plot/trajectory.csv", "plot/trajectory.svg")})
    assert blobs[0] == blobs[1]


def test_external_backend_via_env(files, tmp_path):
    env = dict(os.environ, HYBRIDPLAN_SOLVER_CMD=f"{sys.executable} -m hybridplan.milp.stub_solver {{lp}} {{sol}}")
    out = tmp_path / "o"
    res = subprocess.run([sys.executable, "-m", "hybridplan.cli", "plan", "--model", files["b"], "--n", "3",
                          "--backend", "external", "--out", str(out)], env=env, capture_output=True, text=True)
    assert res.returncode == EXIT_OK, res.stderr
    objs = [json.loads(l)["objective"] for l in (out / "incumbents.jsonl").read_text().splitlines()]
    assert len(objs) == 2 and objs[0] >= objs[1] == read(out / "plan.json")["makespan"]
