from __future__ import annotations

import json

import pytest

from maximal_lab.cli import ConfigError, ExperimentConfig, dumps, main, parse_set, run, theorem_table


def _report(capsys, argv):
    code = main(argv)
    out = capsys.readouterr()
    return code, (json.loads(out.out) if out.out else None), out.err


def test_parse_set_forms(tmp_path):
    assert parse_set("power:alpha=2") == {"type": "power", "alpha": 2}
    assert parse_set('{"type": "log", "beta": 1}') == {"type": "log", "beta": 1}
    p = tmp_path / "s.json"
    p.write_text('{"type": "lacunary"}')
    assert parse_set(str(p)) == {"type": "lacunary"}


def test_analyze_lacunary(capsys):
    code, rep, _ = _report(capsys, ["analyze", "--set", "lacunary", "--d", "2", "--nmax", "10"])
    assert code == 0
    assert rep["result"]["critical_exponent"]["p_estimate"] == 1.0
    assert all(v == 1 for row in rep["result"]["N"] for v in row)
    assert rep["version"] and "seconds" in rep["timing"]


def test_check_cpinf_power(capsys):
    code, rep, _ = _report(capsys, ["check", "--set", "power:alpha=1", "--d", "2", "--p", "1.5",
                                    "--condition", "cpinf", "--nmax", "20"])
    assert code == 0
    assert rep["result"]["verdicts"][0]["verdict"] == "Holds"


def test_inconclusive_exit_code():
    cfg = ExperimentConfig("decompose", set={"type": "power", "alpha": 2.0}, p=[1.4], n_max=16)
    report, _, code = run(cfg)
    verdicts = [report["result"]["regularity"][0][k]["verdict"] for k in ("R_p", "R_tilde")]
    assert (code == 2) == ("Inconclusive" in verdicts)


def test_kakeya_lacunary_inapplicable(capsys):
    code, rep, _ = _report(capsys, ["counterexample", "kakeya", "--n", "4", "--set", "lacunary"])
    assert code == 0
    assert rep["result"]["status"] == "construction inapplicable"


def test_errors_exit_one(capsys):
    code, rep, err = _report(capsys, ["analyze", "--set", "power:alpha=-1"])
    assert code == 1 and rep is None
    assert json.loads(err)["error"] == "ValueError"
    with pytest.raises(ConfigError):
        ExperimentConfig("check", set={"type": "lacunary"}, p=[1.5], condition="nope").validate()
    with pytest.raises(ConfigError):
        ExperimentConfig("operator", set={"type": "lacunary"}, p=[1.5], eps=[0.5]).validate()


def test_outputs_and_csv(tmp_path):
    out = tmp_path / "r.json"
    code = main(["analyze", "--set", "power:alpha=1", "--nmax", "8", "--out", str(out),
                 "--csv", str(tmp_path / "run")])
    assert code == 0
    assert json.loads(out.read_text())["config"]["n_max"] == 8
    lines = (tmp_path / "run_profile.csv").read_text().splitlines()
    assert lines[0].replace(" ", "") == "k,n,N"


def test_seed_environment_override(monkeypatch, capsys):
    monkeypatch.setenv("MAXIMAL_LAB_SEED", "7")
    code, rep, _ = _report(capsys, ["counterexample", "kakeya", "--n", "4", "--set", "lacunary"])
    assert rep["config"]["seed"] == 7 and rep["result"]["seed"] == 7


def test_paper_defaults_pin_settings(capsys):
    code, rep, _ = _report(capsys, ["analyze", "--set", "lacunary", "--nmax", "5", "--paper-defaults"])
    assert rep["config"]["n_max"] == 20 and rep["config"]["paper_defaults"]


def test_reports_reproducible():
    cfg = dict(command="counterexample", example="cantor", N=2, samples=512)
    a, _, _ = run(ExperimentConfig(**cfg))
    b, _, _ = run(ExperimentConfig(**cfg, threads=4))
    a.pop("timing"), b.pop("timing")
    a["config"].pop("threads"), b["config"].pop("threads")
    assert dumps(a) == dumps(b)


def test_theorem_table_rows():
    rows = theorem_table(2, [{"type": "power", "alpha": 1}, {"type": "lacunary"}], n_max=20)
    assert rows[0]["predicted"] == 1.5
    assert abs(rows[0]["measured"]["p_estimate"] - 1.5) < 0.02
    assert rows[1]["predicted"] == 1.0 and rows[1]["measured"]["p_estimate"] == 1.0
    rows3 = theorem_table(3, [{"type": "log", "beta": 1}], n_max=12)
    assert rows3[0]["predicted"] == 1.5


def test_multiplier_operator(capsys):
    code, rep, _ = _report(capsys, ["operator", "--probe", "multiplier", "--d", "3"])
    assert code == 0 and rep["result"]["band_ratio"] < 4
