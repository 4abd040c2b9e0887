import csv
import json

import numpy as np
import pytest

from stattrade import pipeline
from stattrade.cli import main
from stattrade.config import ConfigError, load_config
from stattrade.datagen import planted_matrix
from stattrade.snooping import PerformanceMatrix, write_matrix


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    d = tmp_path_factory.mktemp("run")
    assert main(["gen", "gbm", "--out", str(d / "bars.csv"), "--days", "12", "--seed", "3"]) == 0
    (d / "run.ini").write_text(
        "[data]\npath_15 = bars.csv\n[output]\ndir = out\ntop_n = 2\n[selector]\npool_threshold = 0\n"
    )
    return d


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_config_defaults_and_overrides(workspace):
    cfg = load_config(workspace / "run.ini", jobs=1)
    assert cfg.capital == 1e6 and cfg.B == 500 and cfg.Q == 0.9 and cfg.alphas == (0.05, 0.10)
    assert cfg.jobs == 1 and cfg.top_n == 2
    assert cfg.data[15] == workspace / "bars.csv"


def test_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.ini")
    (tmp_path / "bad.ini").write_text("[data]\npath_15 = nope.csv\n")
    with pytest.raises(ConfigError):
        load_config(tmp_path / "bad.ini")
    with pytest.raises(ConfigError):
        load_config(alphas=(0.0,))


def test_grid_family_kdj(workspace, tmp_path):
    out = tmp_path / "kdj"
    code = main(["run", "grid", "--config", str(workspace / "run.ini"), "--family", "KDJ", "--jobs", "1",
                 "--out", str(out)])
    assert code == 0
    assert len(rows(out / "reports_cost.csv")) == 15
    assert len(rows(out / "reports_nocost.csv")) == 15
    summary = json.loads((out / "summary.json").read_text())
    assert summary["strategies"] == 15 and summary["errors"] == {}


def test_costs_never_raise_ar(workspace, tmp_path):
    out = tmp_path / "ma"
    assert main(["run", "grid", "--config", str(workspace / "run.ini"), "--family", "MA", "--jobs", "2",
                 "--out", str(out)]) == 0
    cost = {r["strategy"]: float(r["AR"]) for r in rows(out / "reports_cost.csv")}
    free = {r["strategy"]: float(r["AR"]) for r in rows(out / "reports_nocost.csv")}
    assert len(cost) == 192
    assert all(cost[k] <= free[k] for k in cost)


def test_costs_flag_limits_outputs(workspace, tmp_path):
    out = tmp_path / "on"
    assert main(["run", "grid", "--config", str(workspace / "run.ini"), "--family", "BOLL", "--costs", "on",
                 "--jobs", "1", "--out", str(out)]) == 0
    assert (out / "reports_cost.csv").exists() and not (out / "reports_nocost.csv").exists()
    assert len(rows(out / "appendix_cost_Boll_30.csv")) == 24
    svg = (out / "equity_cost.svg").read_text()
    assert svg.startswith("<svg") and svg.count("<polyline") == 2


def test_env_output_dir(workspace, tmp_path, monkeypatch):
    monkeypatch.setenv("STATTRADE_OUTPUT_DIR", str(tmp_path / "env"))
    assert main(["run", "grid", "--config", str(workspace / "run.ini"), "--strategies",
                 "MA_15(5,60,0.001),Boll_30(20,1)", "--jobs", "1"]) == 0
    assert len(rows(tmp_path / "env" / "reports_cost.csv")) == 2


def test_failing_strategy_does_not_abort(workspace, tmp_path, monkeypatch):
    real = pipeline.positions_for

    def flaky(spec, series, cross):
        if spec.name == "KDJ_15(9,3,3)":
            raise RuntimeError("boom")
        return real(spec, series, cross)

    monkeypatch.setattr(pipeline, "positions_for", flaky)
    out = tmp_path / "flaky"
    code = main(["run", "grid", "--config", str(workspace / "run.ini"), "--family", "KDJ", "--jobs", "1",
                 "--out", str(out)])
    assert code == 1
    assert len(rows(out / "reports_cost.csv")) == 14
    errors = json.loads((out / "summary.json").read_text())["errors"]
    assert list(errors) == ["KDJ_15(9,3,3)"] and "boom" in errors["KDJ_15(9,3,3)"]


def test_tests_all_zero_matrix(tmp_path):
    m = PerformanceMatrix(np.zeros((60, 3)), ("MA_15(1,20,0.0001)", "KDJ_15(5,1,3)", "Boll_15(20,0.1)"))
    write_matrix(m, tmp_path / "zero.csv")
    assert main(["run", "tests", "--matrix", str(tmp_path / "zero.csv"), "--alpha", "0.05,0.10", "--seed", "1",
                 "--B", "100", "--out", str(tmp_path / "t")]) == 0
    spa = json.loads((tmp_path / "t" / "spa.json").read_text())
    assert all(v["significant"] == [] and not v["reject"] for v in spa["alphas"].values())
    table = rows(tmp_path / "t" / "table5.csv")
    assert [r["family"] for r in table] == ["MA", "KDJ", "Boll", "Total"]
    assert list(table[0]) == ["family", "15s@0.05", "15s@0.1"]


def test_tests_planted_matrix(tmp_path):
    assert main(["gen", "planted", "--out", str(tmp_path / "p.csv"), "--strategies", "10", "--days", "300",
                 "--effect", "0.6", "--seed", "2"]) == 0
    assert main(["run", "tests", "--matrix", str(tmp_path / "p.csv"), "--seed", "4", "--B", "200",
                 "--out", str(tmp_path / "t")]) == 0
    spa = json.loads((tmp_path / "t" / "spa.json").read_text())
    assert spa["alphas"]["0.05"]["significant"] == ["S0"]
    assert rows(tmp_path / "t" / "table5.csv")[-2]["family"] == "Other"


def test_tests_with_adf(workspace, tmp_path):
    out = tmp_path / "g"
    assert main(["run", "grid", "--config", str(workspace / "run.ini"), "--family", "BOLL", "--jobs", "1",
                 "--out", str(out)]) == 0
    assert main(["run", "tests", "--matrix", str(out / "matrix_cost.csv"), "--config", str(workspace / "run.ini"),
                 "--B", "100", "--out", str(tmp_path / "t")]) == 0
    adf = json.loads((tmp_path / "t" / "adf.json").read_text())
    assert adf["logret_15"]["H"] == [1, 1, 1]
    table = rows(tmp_path / "t" / "adf_SBoll_60_15.csv")
    assert [r["stat"] for r in table][-5:] == ["FStat", "AIC", "BIC", "p-value", "H"]


def test_select_with_pool_file(tmp_path):
    m = planted_matrix(6, 200, effect=0.1, seed=3)
    write_matrix(m, tmp_path / "m.csv")
    (tmp_path / "pool.txt").write_text("# pool\nS1\nS3\n\nS5\n")
    assert main(["run", "select", "--matrix", str(tmp_path / "m.csv"), "--pool", str(tmp_path / "pool.txt"),
                 "--out", str(tmp_path / "s")]) == 0
    table = rows(tmp_path / "s" / "table7.csv")
    assert len(table) == 35
    assert list(table[0]) == ["Train", "Test", "AR", "MDP", "AR/MDP", "SR"]
    picks = json.loads((tmp_path / "s" / "selection.json").read_text())
    assert {p["strategy"] for plan in picks.values() for p in plan} <= {"S1", "S3", "S5"}


def test_bad_inputs_exit_2(tmp_path):
    assert main(["run", "select", "--matrix", str(tmp_path / "none.csv")]) == 2
    assert main(["run", "grid", "--config", str(tmp_path / "none.ini")]) == 2
    with pytest.raises(SystemExit):
        main(["run", "grid"])
