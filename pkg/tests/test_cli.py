import json
import subprocess
import sys

import numpy as np
import pytest

from dqreg.cli import main
from dqreg.simulate import generate_dataset, get_scenario

QUICK = ["--starts", "1", "--grid-starts", "1", "--max-degree", "1"]


def _write_csv(path, y, delta, x, header="y,delta,x"):
    rows = [header] + [f"{float(a)!r},{int(b)},{float(c)!r}" for a, b, c in zip(y, delta, x)]
    path.write_text("\n".join(rows) + "\n")
    return str(path)


@pytest.fixture(scope="module")
def scen_csv(tmp_path_factory):
    d = generate_dataset(get_scenario("BasisHet"), 1)
    return _write_csv(tmp_path_factory.mktemp("data") / "s1.csv", d.y, d.delta, d.x[:, 1])


def _run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_toy_csv_echoes_config(tmp_path, capsys):
    csv = _write_csv(tmp_path / "toy.csv", [1.0, 2.0, 1.5], [1, 0, 1], [0.0, 1.0, 2.0])
    code, out, _ = _run(["fit", csv, "--copula", "independence", *QUICK, "--max-degree", "0"], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["data"]["n"] == 3 and doc["data"]["p"] == 1
    assert doc["config"]["fit"]["family"] == "independence"


def test_bad_delta_names_row(tmp_path, capsys):
    csv = _write_csv(tmp_path / "bad.csv", [1.0, 2.0, 1.5], [1, 2, 0], [0.0, 1.0, 2.0])
    code, _, err = _run(["fit", csv], capsys)
    assert code == 2
    assert "row 2" in err and "delta" in err


def test_missing_column_and_non_finite(tmp_path, capsys):
    p = tmp_path / "nodelta.csv"
    p.write_text("y,x\n1,2\n")
    code, _, err = _run(["fit", str(p)], capsys)
    assert code == 2 and "delta" in err
    q = tmp_path / "inf.csv"
    q.write_text("y,delta,x\n1,1,0\ninf,0,1\n")
    code, _, err = _run(["fit", str(q)], capsys)
    assert code == 2 and "row 2" in err


def test_log_time_needs_positive_times(tmp_path, capsys):
    csv = _write_csv(tmp_path / "neg.csv", [1.0, -2.0], [1, 0], [0.0, 1.0])
    code, _, err = _run(["fit", csv, "--log-time"], capsys)
    assert code == 2 and "row 2" in err


def test_usage_errors_exit_one(tmp_path, capsys):
    assert _run(["fit"], capsys)[0] == 1
    assert _run(["nonsense"], capsys)[0] == 1
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"fit": {"family": "frank", "colour": "red"}}))
    code, _, err = _run(["fit", "whatever.csv", "--config", str(cfg)], capsys)
    assert code == 1 and "colour" in err
    cfg.write_text(json.dumps({"plots": True}))
    assert _run(["fit", "whatever.csv", "--config", str(cfg)], capsys)[0] == 1


def test_fit_quantiles_and_determinism(scen_csv, tmp_path, capsys):
    out1, out2 = tmp_path / "a.json", tmp_path / "b.json"
    assert _run(["fit", scen_csv, *QUICK, "--seed", "5", "--out", str(out1)], capsys)[0] == 0
    assert _run(["fit", scen_csv, *QUICK, "--seed", "5", "--out", str(out2), "--threads", "2"], capsys)[0] == 0
    assert out1.read_bytes() == out2.read_bytes()
    doc = json.loads(out1.read_text())
    assert np.isfinite(doc["aic"]) and abs(doc["continuity_residual"]) < 1e-6
    lam = doc["params"]["lambda"]
    beta = doc["params"]["beta"]
    code, out, _ = _run(["quantiles", str(out1), "--levels", repr(lam), "--x", "2.0"], capsys)
    assert code == 0
    val = json.loads(out)["quantiles"][0]["value"]
    assert val == pytest.approx(beta[0] + 2.0 * beta[1], abs=1e-12)


def test_emitted_json_reproduces_run(scen_csv, tmp_path, capsys):
    first = tmp_path / "first.json"
    assert _run(["fit", scen_csv, *QUICK, "--seed", "8", "--out", str(first)], capsys)[0] == 0
    second = tmp_path / "second.json"
    assert _run(["fit", scen_csv, "--config", str(first), "--out", str(second)], capsys)[0] == 0
    assert first.read_bytes() == second.read_bytes()


def test_env_seed_override(scen_csv, tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("DQREG_SEED", "77")
    code, out, _ = _run(["fit", scen_csv, *QUICK, "--max-degree", "0"], capsys)
    assert code == 0 and json.loads(out)["config"]["seed"] == 77


def test_homoscedastic_defaults_lambda(scen_csv, capsys):
    code, out, _ = _run(["fit", scen_csv, "--homo", "--copula", "clayton", *QUICK], capsys)
    doc = json.loads(out)
    assert code == 0 and doc["config"]["fit"]["lambda_fixed"] == 0.5
    assert doc["params"]["gamma"][1] == 0.0


def test_simulate_smoke_and_thread_invariance(tmp_path, capsys):
    a, b = tmp_path / "s1.json", tmp_path / "s2.json"
    args = ["simulate", "basis-het", "--reps", "2", "--n", "200", *QUICK, "--seed", "3"]
    assert _run([*args, "--out", str(a)], capsys)[0] == 0
    assert _run([*args, "--out", str(b), "--threads", "2"], capsys)[0] == 0
    assert a.read_bytes() == b.read_bytes()
    rec = json.loads(a.read_text())["records"]
    assert len(rec) == 9
    assert set(rec[0]) == {"scenario", "p", "x", "true", "avg", "evar10", "rbias", "reps", "dropped"}


def test_diagnose_clayton(capsys):
    code, out, _ = _run(["diagnose", "clayton"], capsys)
    assert code == 0
    assert json.loads(out)["verdicts"] == {"h_t_given_c": "vanishing", "h_c_given_t": "non-vanishing"}
    code, out, _ = _run(["diagnose", "frank", "--format", "text"], capsys)
    assert "h_C|T vanishing" in out


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "dqreg", "diagnose", "gumbel"], capture_output=True, text=True)
    assert res.returncode == 0
    assert json.loads(res.stdout)["verdicts"]["h_t_given_c"] == "vanishing"
