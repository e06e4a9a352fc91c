import csv
import json
import subprocess
import sys

import pytest

from tmlab.cli import main, parse_param
from tmlab.experiments import (EXPERIMENTS, ExperimentSpec, ReportIOError, Row, SchemaError,
                               UnknownExperimentError, exp_order_gap, load_config, run_all, run_experiment,
                               validate_params)

EXPECTED = ["specfn-verify", "lemma33-norms", "gamma-family", "weinstein", "extremal", "blowup", "vanishing",
            "nonattain", "radial-bound", "embedding", "gn-bound"]


def test_registry_contents():
    assert list(EXPERIMENTS) == EXPECTED


@pytest.mark.parametrize("kind, value, ref, tol, ok", [
    ("abs", 1.0, 1.05, 0.1, True), ("abs", 1.0, 1.2, 0.1, False),
    ("rel", 102.0, 100.0, 0.01, False), ("rel", 100.5, 100.0, 0.01, True),
    ("ge", 0.95, 1.0, 0.1, True), ("ge", 0.85, 1.0, 0.1, False),
    ("le", 1.05, 1.0, 0.1, True), ("gt", 1.0, 1.0, 0.0, False),
])
def test_row_verdicts(kind, value, ref, tol, ok):
    assert Row("x", value, ref, tol, "TRIVIAL", kind).passed is ok


def test_row_validation():
    assert Row("x", 1.0).passed is None
    with pytest.raises(ValueError):
        Row("x", 1.0, 1.0, 0.1, "NOPE", "abs")
    with pytest.raises(ValueError):
        Row("x", 1.0, 1.0, None, "PAPER", "abs")
    assert Row("x", float("nan"), 0.0, 1.0, "PAPER", "abs").passed is False


def test_order_gap_no_cancellation():
    import numpy as np
    t = np.array([1e-4, 1.0, 50.0, 100.0])
    gap = exp_order_gap(2.0, 3.0, t)
    # exp_2 - exp_3 = t exactly
    assert gap == pytest.approx(t, rel=1e-9)


def test_schema_errors():
    with pytest.raises(UnknownExperimentError):
        validate_params("unknown-exp", {})
    with pytest.raises(SchemaError):
        validate_params("gamma-family", {"bogus": 1})
    with pytest.raises(SchemaError):
        validate_params("gamma-family", {"alpha0": "zero"})
    with pytest.raises(SchemaError):
        validate_params("extremal", {"n_starts": 2.5})
    assert validate_params("gamma-family", {"alpha0": 0})["alpha0"] == [0.0]
    assert validate_params("extremal", {"n_nodes": 512})["n_nodes"] == 512


def test_gamma_family_report(tmp_path):
    rep = run_experiment(ExperimentSpec("gamma-family", {"alpha0": 0}, str(tmp_path)))
    assert rep.passed
    value = next(r for r in rep.rows if r.label.startswith("value alpha0"))
    assert value.provenance == "PAPER" and value.value == pytest.approx(2.1229513817, abs=1e-9)
    data = json.loads((tmp_path / "gamma-family.report.json").read_text())
    assert data["spec"]["name"] == "gamma-family" and data["passed"] is True
    assert "runtime_seconds" in data and data["grid"]["n_nodes"] == 4096
    for row in data["rows"]:
        assert row["provenance"] in {"PAPER", "DERIVED", "TRIVIAL"}
        if row["reference"] is not None:
            assert row["tolerance"] is not None and row["pass"] is not None
    with open(tmp_path / "gamma-family.rows.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["label", "value", "reference", "tolerance", "pass"]
    assert len(rows) == len(rep.rows) + 1


def test_errors_before_computation(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(ReportIOError):
        run_experiment(ExperimentSpec("gamma-family", {}, str(blocker / "out")))
    with pytest.raises(UnknownExperimentError):
        run_experiment(ExperimentSpec("unknown-exp", {}, str(tmp_path)))
    assert not (tmp_path / "unknown-exp.report.json").exists()


def test_determinism(tmp_path):
    reports = []
    for k in range(2):
        rep = run_experiment(ExperimentSpec("radial-bound", {"n_functions": 10}, str(tmp_path / str(k))))
        reports.append([r.to_dict() for r in rep.rows])
    assert reports[0] == reports[1]


def test_weinstein_sidecar(tmp_path):
    rep = run_experiment(ExperimentSpec("weinstein", {"n_nodes": 1024}, str(tmp_path)))
    assert rep.passed
    from tmlab.grid import read_csv
    u = read_csv(rep.artifacts[0])
    assert u.grid.n_nodes == 1024


def test_load_config(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps([{"name": "gamma-family", "params": {"alpha0": 1}}]))
    specs = load_config(cfg, out_dir=str(tmp_path))
    assert specs[0].output_path == str(tmp_path)
    cfg.write_text("{}")
    with pytest.raises(SchemaError):
        load_config(cfg)
    cfg.write_text("not json")
    with pytest.raises(SchemaError):
        load_config(cfg)
    with pytest.raises(ReportIOError):
        load_config(tmp_path / "missing.json")


def test_run_all_aggregates(tmp_path):
    specs = [ExperimentSpec("gamma-family", {"alpha0": [0.0]}, str(tmp_path)),
             ExperimentSpec("blowup", {"n_nodes": 1024}, str(tmp_path))]
    summary = run_all(specs, jobs=2)
    assert not summary.passed
    assert summary.failures and all(f.startswith("blowup") for f in summary.failures)
    assert summary.to_dict()["experiments"] == {"gamma-family": True, "blowup": False}
    assert run_all([]).passed


def test_parse_param():
    assert parse_param("alpha0=[0, 1]") == ("alpha0", [0, 1])
    assert parse_param("robustness=true") == ("robustness", True)
    assert parse_param("kind=moser") == ("kind", "moser")
    with pytest.raises(Exception):
        parse_param("novalue")


def test_cli_exit_codes(tmp_path, capsys):
    assert main(["run-one", "--name", "gamma-family", "--param", "alpha0=0", "--out", str(tmp_path)]) == 0
    assert main(["run-one", "--name", "unknown-exp"]) == 2
    assert "unknown experiment" in capsys.readouterr().err
    empty = tmp_path / "empty.json"
    empty.write_text("[]")
    assert main(["run", str(empty)]) == 0
    failing = tmp_path / "fail.json"
    failing.write_text(json.dumps([{"name": "gamma-family", "params": {"alpha0": [0]}},
                                   {"name": "blowup", "params": {"n_nodes": 1024}}]))
    assert main(["run", str(failing), "--out", str(tmp_path / "r")]) == 1
    out = capsys.readouterr().out
    assert "[FAIL] blowup" in out
    summary = json.loads((tmp_path / "r" / "summary.json").read_text())
    assert summary["passed"] is False


def test_cli_list_and_expp(capsys):
    assert main(["list"]) == 0
    listing = capsys.readouterr().out
    assert all(name in listing for name in EXPECTED)
    assert main(["expp", "--p", "2", "--t", "1"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "p,t,exp_p_series,exp_p_closed,rel_diff"
    assert float(lines[1].split(",")[2]) == pytest.approx(1.718281828459045)


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "tmlab", "list"], capture_output=True, text=True)
    assert proc.returncode == 0 and "gamma-family" in proc.stdout


def test_bundled_config_covers_registry():
    from tmlab.cli import default_config_path
    names = [d["name"] for d in json.loads(default_config_path().read_text())]
    assert names == EXPECTED
