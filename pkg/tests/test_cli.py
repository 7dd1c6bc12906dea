import subprocess
import sys
import xml.etree.ElementTree as ET

import numpy as np
import pytest
import yaml

from clusterd2d import cli
from clusterd2d.geometry import KClosest, Uniform, reference_params
from clusterd2d.mathkernel import IntegrationError
from clusterd2d.montecarlo import SimulationConfig


def make_spec(tmp_path, **kw):
    base = dict(params=reference_params(), strategy=Uniform(), sweep_axis="m_bar",
                sweep_values=(1, 2, 4), methods=("closed-form",), sim=None,
                output_path=str(tmp_path / "out.csv"))
    base.update(kw)
    return cli.ExperimentSpec(**base)


# --- experiment description -------------------------------------------------

def test_spec_invariants(tmp_path):
    with pytest.raises(cli.UsageError):
        make_spec(tmp_path, methods=())
    with pytest.raises(cli.UsageError):
        make_spec(tmp_path, sweep_values=())
    with pytest.raises(cli.UsageError):
        make_spec(tmp_path, sweep_values=(2, 1))
    with pytest.raises(cli.UsageError):
        make_spec(tmp_path, methods=("monte-carlo",))
    with pytest.raises(cli.UsageError):
        make_spec(tmp_path, methods=("bogus",))
    with pytest.raises(cli.UsageError):
        make_spec(tmp_path, sweep_axis="alpha")
    with pytest.raises(cli.UsageError):
        make_spec(tmp_path, sweep_axis="k", sweep_values=(1, 2))
    with pytest.raises(cli.UsageError):
        make_spec(tmp_path, strategy=KClosest(1))
    with pytest.raises(cli.UsageError):
        make_spec(tmp_path, strategy=KClosest(1), sweep_axis="k", sweep_values=(1, 41), methods=("exact",))


def test_spec_point_units(tmp_path):
    spec = make_spec(tmp_path, sweep_axis="lambda_c", sweep_values=(100.0, 300.0))
    p, s = spec.point(300.0)
    assert p.lambda_c == pytest.approx(3e-4)
    spec = make_spec(tmp_path, strategy=KClosest(2), sweep_axis="k", sweep_values=(1, 3), methods=("exact",))
    assert spec.point(3)[1] == KClosest(3)


def test_yaml_round_trip(tmp_path):
    spec = make_spec(tmp_path, methods=("exact", "monte-carlo"),
                     sim=SimulationConfig(trials=500, seed=9))
    text = spec.to_yaml()
    again = cli.ExperimentSpec.from_yaml(text)
    assert again.to_yaml() == text
    assert again.params == spec.params
    assert again.sim.trials == 500 and again.sim.seed == 9


def test_yaml_beta_db_and_errors():
    d = yaml.safe_load(yaml.safe_dump(cli.PRESET))
    d["params"]["beta_db"] = 3.0
    spec = cli.ExperimentSpec.from_dict(d)
    assert spec.params.beta == pytest.approx(10 ** 0.3)
    d["params"]["beta"] = 2.0
    with pytest.raises(cli.UsageError):
        cli.ExperimentSpec.from_dict(d)
    with pytest.raises(cli.UsageError):
        cli.ExperimentSpec.from_yaml("params: [1, 2")
    with pytest.raises(cli.UsageError):
        cli.ExperimentSpec.from_dict({"params": {"sigma": 10}})
    with pytest.raises(cli.UsageError):
        cli.ExperimentSpec.from_dict({"bogus": 1})


def test_parse_strategy_and_values():
    assert cli.parse_strategy("uniform") == Uniform()
    assert cli.parse_strategy("K12") == KClosest(12)
    with pytest.raises(cli.UsageError):
        cli.parse_strategy("closest")
    assert cli._values("1,2,4") == [1.0, 2.0, 4.0]
    assert cli._values("1:4") == [1.0, 2.0, 3.0, 4.0]
    assert cli._values("0.5:1.5:0.5") == [0.5, 1.0, 1.5]


# --- sweep and CSV ------------------------------------------------------------

def test_sweep_rows_and_csv_round_trip(tmp_path):
    spec = make_spec(tmp_path, methods=("closed-form", "approx"))
    rows = cli.run_sweep(spec, workers=3)
    assert [(r["sweep_value"], r["method"]) for r in rows] == [
        (v, m) for v in (1, 2, 4) for m in ("closed-form", "approx")]
    back = cli.read_csv(spec.output_path)
    assert len(back) == len(rows)
    for a, b in zip(rows, back):
        assert a["coverage"] == b["coverage"] and a["ase"] == b["ase"]
        assert b["ci_half_width"] is None
    header = open(spec.output_path).readline().strip()
    assert header == "schema_version,sweep_axis,sweep_value,method,coverage,ase,ci_half_width,wall_time_ms"


def test_beta_sweep_monotone(tmp_path):
    spec = make_spec(tmp_path, sweep_axis="beta", sweep_values=(0.25, 0.5, 1.0, 2.0, 4.0),
                     methods=("approx",))
    cov = [r["coverage"] for r in cli.run_sweep(spec)]
    assert all(a >= b for a, b in zip(cov, cov[1:]))


def test_monte_carlo_rows_carry_ci(tmp_path):
    spec = make_spec(tmp_path, sweep_values=(2,), methods=("closed-form", "monte-carlo"),
                     sim=SimulationConfig(trials=300, seed=1))
    rows = cli.run_sweep(spec)
    assert rows[0]["ci_half_width"] is None and rows[1]["ci_half_width"] > 0
    back = cli.read_csv(spec.output_path)
    assert back[1]["ci_half_width"] == rows[1]["ci_half_width"]


def test_numerical_failure_marks_row(tmp_path, monkeypatch):
    real = cli.ase

    def flaky(params, strategy, method):
        if params.m_bar == 2:
            raise IntegrationError("no convergence", 0.0, 1.0)
        return real(params, strategy, method)

    monkeypatch.setattr(cli, "ase", flaky)
    spec = make_spec(tmp_path)
    rows = cli.run_sweep(spec)
    assert [r["error"] for r in rows] == [None, "IntegrationError", None]
    text = open(spec.output_path).read()
    assert "error:IntegrationError" in text
    back = cli.read_csv(spec.output_path)
    assert back[1]["error"] == "IntegrationError" and back[1]["coverage"] is None
    out = tmp_path / "x.csv"
    code = cli.main(["sweep", "--method", "closed-form", "--values", "1,2", "--out", str(out)])
    assert code == 2


def test_read_csv_errors(tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    with pytest.raises(ValueError, match="empty"):
        cli.read_csv(empty)
    header_only = tmp_path / "h.csv"
    header_only.write_text(",".join(cli.CSV_HEADER) + "\n")
    with pytest.raises(ValueError, match="no data"):
        cli.read_csv(header_only)
    bad = tmp_path / "bad.csv"
    bad.write_text(",".join(cli.CSV_HEADER) + "\n1,m_bar,1,exact,0.5,1e-4,,3\n1,m_bar,x,exact,0.5,1e-4,,3\n")
    with pytest.raises(ValueError, match="row 3"):
        cli.read_csv(bad)


# --- chart ----------------------------------------------------------------------

def _svg_counts(path):
    root = ET.parse(path).getroot()
    ns = "{http://www.w3.org/2000/svg}"
    ids = [g.get("id", "") for g in root.iter(ns + "g")]
    return ids


def test_chart_two_series_with_errorbars(tmp_path):
    spec = make_spec(tmp_path, sweep_values=(1, 2), methods=("closed-form", "monte-carlo"),
                     sim=SimulationConfig(trials=300, seed=1))
    cli.run_sweep(spec)
    svg = tmp_path / "c.svg"
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    seen = {}
    orig = plt.Axes.errorbar

    def spy(self, *a, **k):
        seen["errorbar"] = k.get("label")
        return orig(self, *a, **k)

    plt.Axes.errorbar = spy
    try:
        n = cli.render_chart(spec.output_path, svg, "ase", "t")
    finally:
        plt.Axes.errorbar = orig
    assert n == 2
    assert seen == {"errorbar": "monte-carlo"}
    ids = _svg_counts(svg)
    assert sum(i.startswith("line2d") for i in ids) >= 2
    assert any(i.startswith("LineCollection") for i in ids)


def test_chart_errors(tmp_path):
    empty = tmp_path / "e.csv"
    empty.write_text("")
    assert cli.main(["chart", str(empty)]) == 1
    with pytest.raises(cli.UsageError):
        cli.render_chart(empty, tmp_path / "x.svg", "bogus")


# --- command line -------------------------------------------------------------

def test_main_exit_codes(tmp_path, capsys):
    out = tmp_path / "s.csv"
    assert cli.main(["sweep", "--method", "closed-form", "--values", "1:3", "--out", str(out)]) == 0
    assert len(cli.read_csv(out)) == 3
    assert cli.main(["sweep", "--method", "bogus"]) == 1
    assert cli.main(["sweep", "--nope"]) == 1
    assert cli.main(["sweep", "--beta", "1", "--beta-db", "0"]) == 1
    assert cli.main(["sweep", "--config", str(tmp_path / "missing.yaml")]) == 1
    assert cli.main([]) == 1


def test_main_config_and_overrides(tmp_path):
    cfg = tmp_path / "exp.yaml"
    d = yaml.safe_load(yaml.safe_dump(cli.PRESET))
    d["methods"] = ["closed-form"]
    d["sweep"] = {"axis": "sigma", "values": [5, 10]}
    cfg.write_text(yaml.safe_dump(d))
    out = tmp_path / "o.csv"
    assert cli.main(["sweep", "--config", str(cfg), "--lambda-c", "300", "--out", str(out)]) == 0
    rows = cli.read_csv(out)
    assert [r["sweep_value"] for r in rows] == [5.0, 10.0]
    p = reference_params(sigma=5.0, lambda_c=300e-6)
    from clusterd2d.metrics import coverage_closed_form
    assert rows[0]["coverage"] == pytest.approx(coverage_closed_form(p).value, rel=1e-12)


def test_optimize_command(tmp_path, capsys):
    out = tmp_path / "opt.csv"
    code = cli.main(["optimize", "--method", "closed-form", "--axis", "sigma", "--values", "10,20",
                     "--out", str(out)])
    assert code == 0
    text = capsys.readouterr().out
    assert "m_bar*=1" in text
    lines = open(out).read().splitlines()
    assert lines[0].split(",") == cli.OPTIMIZE_HEADER
    assert len(lines) == 1 + 2 * 40
    assert cli.main(["optimize", "--method", "closed-form", "--compare", "k1"]) == 1


def test_optimize_single_transmitter(tmp_path):
    spec = make_spec(tmp_path, params=reference_params(N=2, M=1, m_bar=1.0), sweep_axis="sigma",
                     sweep_values=(10.0,))
    _, res = cli.run_optimize(spec)
    assert res[("uniform", 10.0)][0] == 1
    with pytest.raises(cli.UsageError):
        cli.run_optimize(make_spec(tmp_path))


def test_selftest_command(capsys):
    assert cli.main(["selftest"]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out and out.count("PASS") >= 8


def test_validate_command_small(capsys):
    code = cli.main(["validate", "--samples", "20000", "--seed", "3"])
    out = capsys.readouterr().out
    assert out.count("PASS") + out.count("FAIL") == 18
    assert code == 0


def test_module_entry_point(tmp_path):
    out = tmp_path / "m.csv"
    r = subprocess.run([sys.executable, "-m", "clusterd2d", "sweep", "--method", "closed-form",
                        "--values", "1,2", "--out", str(out)], capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
    assert len(cli.read_csv(out)) == 2
    r = subprocess.run([sys.executable, "-m", "clusterd2d", "sweep", "--method", "nope"],
                       capture_output=True, text=True)
    assert r.returncode == 1
