import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fptwalk import increments as inc
from fptwalk.boundaries import make_boundary, ug_interpolate
from fptwalk.cli import main
from fptwalk.config import (ConfigError, ExperimentConfig, load_boundary_csv, load_schedule_csv,
                            schedule_from_config)
from fptwalk.exact import evolve, ssrw_survival_oracle
from fptwalk.montecarlo import McConfig, survival_curve
from fptwalk.report import report_grid, run, ratio_report


def ssrw_config(tmp_path, **kw):
    d = {"schedule": {"family": "ssrw"}, "boundary": {"family": "constant", "params": {"x": 0.0}},
         "n_max": 400, "engine": "both", "mc": {"seed": 7, "replications": 20_000},
         "diagnostics": [{"name": "lind_plus", "eps": 0.5}], "output": str(tmp_path / "out")}
    d.update(kw)
    return d


def write_config(tmp_path, d, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(d))
    return str(p)


def test_report_grid():
    g = report_grid(1000)
    assert g[:32] == list(range(1, 33))
    assert {1000, 500, 250, 125, 63}.issubset(g)
    assert report_grid(5) == [1, 2, 3, 4, 5]


configs = st.fixed_dictionaries({
    "schedule": st.sampled_from([{"family": "ssrw"}, {"family": "power_weighted", "params": {"p": 0.5}}]),
    "boundary": st.fixed_dictionaries({"family": st.just("constant"),
                                       "params": st.fixed_dictionaries({"x": st.floats(-5, 0)})}),
    "n_max": st.integers(1, 10**6),
    "engine": st.sampled_from(["exact", "mc", "both"]),
    "mc": st.fixed_dictionaries({"seed": st.integers(0, 2**64 - 1), "threads": st.integers(1, 8)}),
    "report_grid": st.one_of(st.none(), st.lists(st.integers(1, 100), max_size=5)),
})


@settings(max_examples=100, deadline=None)
@given(configs)
def test_config_round_trip(d):
    cfg = ExperimentConfig.from_dict(d)
    again = ExperimentConfig.from_dict(json.loads(cfg.dumps()))
    assert again == cfg and again.dumps() == cfg.dumps()


def test_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"schedule": {}, "boundary": {"family": "constant"}, "n_max": 3})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict(ssrw_config(tmp_path, engine="fast"))
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict(ssrw_config(tmp_path, unknown=1))
    with pytest.raises(ConfigError):
        schedule_from_config({"family": "power_weighted"}, 10)
    with pytest.raises(ConfigError):
        ExperimentConfig.load(tmp_path / "missing.json")


def test_csv_loaders(tmp_path):
    sched = tmp_path / "s.csv"
    sched.write_text("k,value,prob\n1,-1,0.5\n1,1,0.5\n2,-2,0.25\n2,0,0.25\n2,1,0.5\n")
    s = load_schedule_csv(sched)
    assert s.n_max == 2 and s.lattice == 1.0 and s.sigma2_at(2) == 1.5
    bnd = tmp_path / "b.csv"
    bnd.write_text("n,g\n1,0\n2,-0.5\n")
    assert load_boundary_csv(bnd) == [0.0, -0.5]
    bnd.write_text("n,g\n1,0\n3,-0.5\n")
    with pytest.raises(ConfigError):
        load_boundary_csv(bnd)


def test_ssrw_ratio_report():
    s = inc.make_ssrw(400)
    res = evolve(s, make_boundary("constant", {"x": 0.0}), 400, keep_laws=False)
    rep = ratio_report(res, s)
    row = rep.row(400)
    expected = math.sqrt(400) * ssrw_survival_oracle(200) / 0.5
    assert row["r_n"] == pytest.approx(expected, rel=1e-12)
    assert abs(row["r_n"] / math.sqrt(2 / math.pi) - 1) < 0.005
    assert row["lambda_n"] == pytest.approx(0.05)
    assert not rep.estimated
    assert all(r["r_n"] > 0 for r in rep.rows)
    curve = rep.ug_curve()
    for r in rep.rows:
        assert ug_interpolate(curve, r["B"] ** 2) == r["ez_star"]


def test_mc_report_is_flagged_estimated():
    s = inc.make_four_point(10**4)
    curve = survival_curve(s, make_boundary("constant", {"x": 0.0}), [100, 1000, 10_000],
                           McConfig(seed=1, replications=3_000_000))
    rep = ratio_report(curve, s)
    assert rep.estimated and all(r["ez_estimated"] for r in rep.rows)
    col = rep.column("sqrt_n_survival")
    assert col[0] < col[1] < col[2]


def test_run_writes_reports_deterministically(tmp_path, capsys):
    d = ssrw_config(tmp_path)
    out1 = run(d, out=tmp_path / "a")
    out2 = run(d, out=tmp_path / "b")
    lines = capsys.readouterr().out.splitlines()
    assert any(line.startswith("exact: optional-stopping residual") and "[ok]" in line for line in lines)
    names = sorted(p.name for p in out1.iterdir())
    assert names == ["config.json", "estimates.json", "exact.csv", "report_exact.csv", "report_mc.csv",
                     "summary.txt", "verdicts.json"]
    for name in names:
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()
    residuals = np.loadtxt(out1 / "exact.csv", delimiter=",", skiprows=1)[:, -1]
    assert residuals.max() < 1e-10
    verdicts = json.loads((out1 / "verdicts.json").read_text())
    assert verdicts[0]["classification"] == "converges"


def test_cli_exit_codes_and_atomicity(tmp_path):
    good = write_config(tmp_path, ssrw_config(tmp_path, n_max=50))
    assert main(["exact", "--config", good, "--out", str(tmp_path / "e")]) == 0
    assert (tmp_path / "e" / "report_exact.csv").exists()
    assert not (tmp_path / "e" / "report_mc.csv").exists()

    bad = write_config(tmp_path, ssrw_config(tmp_path, n_max=10,
                                             boundary={"family": "custom", "params": {"values": []}}),
                       "bad.json")
    assert main(["report", "--config", bad, "--out", str(tmp_path / "x")]) == 2
    assert not (tmp_path / "x").exists()
    assert [p.name for p in tmp_path.iterdir() if p.name.startswith(".")] == []

    # a failing rerun leaves the previous output untouched
    before = (tmp_path / "e" / "exact.csv").read_bytes()
    tight = write_config(tmp_path, ssrw_config(tmp_path, n_max=2000, max_states=100), "tight.json")
    assert main(["exact", "--config", tight, "--out", str(tmp_path / "e")]) == 3
    assert (tmp_path / "e" / "exact.csv").read_bytes() == before

    assert main(["mc", "--config", str(tmp_path / "nope.json")]) == 2
    infeasible = write_config(tmp_path, ssrw_config(tmp_path, n_max=3,
                                                    boundary={"family": "custom",
                                                              "params": {"values": [0, 5, 0]}}), "inf.json")
    with pytest.warns(UserWarning, match="o\\(B_n\\)"):
        assert main(["exact", "--config", infeasible, "--out", str(tmp_path / "i")]) == 2


def test_cli_overrides_and_thread_invariance(tmp_path):
    cfg = write_config(tmp_path, ssrw_config(tmp_path, n_max=100))
    assert main(["mc", "--config", cfg, "--seed", "3", "--threads", "1", "--out", str(tmp_path / "t1")]) == 0
    assert main(["mc", "--config", cfg, "--seed", "3", "--threads", "4", "--out", str(tmp_path / "t4")]) == 0
    assert main(["mc", "--config", cfg, "--seed", "4", "--out", str(tmp_path / "s4")]) == 0
    a = (tmp_path / "t1" / "report_mc.csv").read_bytes()
    assert a == (tmp_path / "t4" / "report_mc.csv").read_bytes()
    assert a != (tmp_path / "s4" / "report_mc.csv").read_bytes()
    assert main(["diagnose", "--config", cfg, "--n-max", "1000", "--out", str(tmp_path / "d")]) == 0
    saved = json.loads((tmp_path / "d" / "config.json").read_text())
    assert saved["n_max"] == 1000
    assert sorted(p.name for p in (tmp_path / "d").iterdir()) == ["config.json", "summary.txt", "verdicts.json"]
    assert main(["mc", "--config", cfg, "--threads", "0"]) == 2


def test_exact_engine_for_non_lattice_schedules(tmp_path):
    d = ssrw_config(tmp_path, n_max=60, engine="exact", schedule={"family": "four_point"}, diagnostics=[])
    with pytest.raises(ConfigError):
        run(d, echo=None)
    d["lattice_span"] = 0.05
    out = run(d, echo=None)
    assert "stopping_residual" in (out / "exact.csv").read_text().splitlines()[0]


def test_diagnostics_may_look_past_n_max(tmp_path):
    d = ssrw_config(tmp_path, n_max=200, engine="exact", schedule={"family": "four_point"},
                    lattice_span=0.05, diagnostics=[{"name": "lind_plus", "eps": 0.5, "N": 100_000}])
    out = run(d, echo=None)
    v = json.loads((out / "verdicts.json").read_text())[0]
    assert v["partial_sums"][-1][0] == 100_000 and v["classification"] == "diverges"
