import json

import pytest

from artifact import cli


def run(argv, capsys=None):
    code = cli.main(argv)
    return code


def test_budget_prints_table(capsys):
    assert cli.main(["budget", "--N", "59", "--n", "4"]) == 0
    out = capsys.readouterr().out
    assert "CPS" in out and "3481" in out


def test_budget_json(capsys):
    assert cli.main(["budget", "--N", "59", "--n", "4", "--method", "qee", "--json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["rows"][0]["T"] == 3481 and doc["version"].startswith("v")


def test_budget_bad_method_is_usage_error():
    with pytest.raises(SystemExit) as info:
        cli.main(["budget", "--N", "5", "--n", "3", "--method", "xyz"])
    assert info.value.code == 2


def test_budget_small_N_is_usage_error():
    assert cli.main(["budget", "--N", "1", "--n", "3", "--method", "cps"]) == 2


def test_synth_eps_zero_is_usage_error():
    assert cli.main(["synth", "--tau", "0.3", "--eps", "0"]) == 2


def test_synth_writes_plan(tmp_path, capsys):
    out = tmp_path / "plan.json"
    assert cli.main(["synth", "--tau", "0.3", "--eps", "1e-3", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["eps_certified"] <= 1e-3 and doc["n_qsp"] == len(doc["phases"])


def test_missing_config_is_usage_error(tmp_path):
    assert cli.main(["estimate", "--config", str(tmp_path / "nope.ini")]) == 2


def test_unknown_config_key(tmp_path):
    p = tmp_path / "c.ini"
    p.write_text("[experiment]\nbogus = 1\n")
    assert cli.main(["estimate", "--config", str(p)]) == 2


def test_bad_config_value(tmp_path):
    p = tmp_path / "c.ini"
    p.write_text("[experiment]\neta = fast\n")
    assert cli.main(["estimate", "--config", str(p)]) == 2


def test_bad_observable_file(tmp_path):
    obs = tmp_path / "o.txt"
    obs.write_text("1.0 XQ\n")
    assert cli.main(["estimate", "--observable", str(obs), "--out", str(tmp_path / "r")]) == 2


def test_gen_observable_then_estimate(tmp_path):
    obs, circ = tmp_path / "o.txt", tmp_path / "c.txt"
    assert cli.main(["gen-observable", "--n", "2", "--N", "3", "--seed", "4", "--out", str(obs),
                     "--circuit-out", str(circ)]) == 0
    out = tmp_path / "r"
    assert cli.main(["estimate", "--observable", str(obs), "--circuit", str(circ), "--trials", "4",
                     "--eta", "0.05", "--out", str(out)]) == 0
    doc = json.loads((out / "estimate.json").read_text())
    assert doc["N"] == 3 and "cps" in doc and "qee" in doc
    assert doc["cps"]["T"] == doc["qee"]["T"] or abs(doc["cps"]["T"] - doc["qee"]["T"]) <= 3


def test_flags_override_config(tmp_path):
    p = tmp_path / "c.ini"
    p.write_text("[experiment]\neta = 0.05\ntrials = 3\nmethod = qee\n[observable]\nn = 2\nN = 2\n")
    out = tmp_path / "r"
    assert cli.main(["estimate", "--config", str(p), "--trials", "5", "--out", str(out)]) == 0
    doc = json.loads((out / "estimate.json").read_text())
    assert doc["config"]["trials"] == 5 and doc["qee"]["trials"] == 5 and "cps" not in doc


def test_config_hash_ignores_workers_and_output(tmp_path):
    base = ["estimate", "--n", "2", "--N", "2", "--trials", "3", "--eta", "0.1"]
    assert cli.main(base + ["--out", str(tmp_path / "a"), "--workers", "1"]) == 0
    assert cli.main(base + ["--out", str(tmp_path / "b"), "--workers", "2"]) == 0
    ha = json.loads((tmp_path / "a" / "estimate.json").read_text())["config_hash"]
    hb = json.loads((tmp_path / "b" / "estimate.json").read_text())["config_hash"]
    assert ha == hb


def test_compare_empty_sweep_is_usage_error(tmp_path):
    assert cli.main(["compare", "--Ns", "", "--out", str(tmp_path / "x.csv")]) == 2


def test_compare_writes_csv(tmp_path, capsys):
    out = tmp_path / "cmp.csv"
    assert cli.main(["compare", "--Ns", "2,3", "--n", "2", "--trials", "4", "--instances", "1",
                     "--eta", "0.05", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("# config_hash") and lines[1].startswith("N,var_cps")
    assert len(lines) == 4


def test_runtime_failure_exit_code(monkeypatch, tmp_path):
    def boom(*a, **k):
        raise RuntimeError("synthetic")
    monkeypatch.setattr(cli.experiments, "run_cps", boom)
    assert cli.main(["estimate", "--n", "2", "--N", "2", "--method", "cps",
                     "--out", str(tmp_path / "r")]) == 1


def test_single_z_config_estimate(tmp_path):
    obs = tmp_path / "z.txt"
    obs.write_text("1.0 Z\n")
    cfg = tmp_path / "z.ini"
    cfg.write_text(f"[experiment]\nmethod = both\neta = 0.01\ntrials = 3\n[observable]\nobservable = {obs}\n"
                   f"[circuit]\ngates = 0\n")
    out = tmp_path / "r"
    assert cli.main(["estimate", "--config", str(cfg), "--out", str(out)]) == 0
    doc = json.loads((out / "estimate.json").read_text())
    assert doc["exact"] == 1.0 and doc["qee"]["mean"] == 1.0
    assert abs(doc["cps"]["mean"] - 1.0) <= 3 * doc["cps"]["final_half_width"]


def test_same_seed_same_bytes(tmp_path):
    args = ["estimate", "--n", "2", "--N", "3", "--trials", "4", "--eta", "0.05"]
    assert cli.main(args + ["--out", str(tmp_path / "a")]) == 0
    assert cli.main(args + ["--out", str(tmp_path / "b")]) == 0
    assert (tmp_path / "a" / "trials.csv").read_bytes() == (tmp_path / "b" / "trials.csv").read_bytes()


def test_missing_config_message_on_stderr(tmp_path, capsys):
    assert cli.main(["compare", "--config", str(tmp_path / "none.ini")]) == 2
    assert "not found" in capsys.readouterr().err


def test_predicted_ratio_column(tmp_path):
    import csv as _csv
    from artifact.resources import variance_ratio
    out = tmp_path / "c.csv"
    assert cli.main(["compare", "--Ns", "2,4", "--n", "2", "--trials", "3", "--instances", "1",
                     "--eta", "0.05", "--out", str(out)]) == 0
    rows = list(_csv.DictReader(l for l in out.read_text().splitlines() if not l.startswith("#")))
    for r in rows:
        assert float(r["predicted_ratio"]) == variance_ratio(int(r["N"]), 0.05)


def test_budget_cps_large_instance_values(capsys):
    assert cli.main(["budget", "--N", "59", "--n", "4", "--method", "cps"]) == 0
    out = capsys.readouterr().out
    assert "171" in out and "0.0004869" in out


def test_synth_tau_zero_empty(capsys):
    assert cli.main(["synth", "--tau", "0", "--eps", "1e-3"]) == 0
    assert json.loads(capsys.readouterr().out)["phases"] == []
