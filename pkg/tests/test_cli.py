import json

import numpy as np
import pytest

from phca.cli import main
from phca.fixtures import data_path
from phca.network import save_network
from phca.scenario import write_scenarios

NET = data_path("feeder6.json")


@pytest.fixture(scope="module")
def scen_dir(tmp_path_factory, scen6):
    d = tmp_path_factory.mktemp("scen")
    write_scenarios(scen6.subset(range(1, 7)), d)
    return d


def test_validate_ok(capsys, scen_dir):
    assert main(["validate", "--network", NET, "--scenarios", str(scen_dir)]) == 0
    assert "OK" in capsys.readouterr().out


def test_validate_reports_cycle(tmp_path, capsys):
    data = json.load(open(NET))
    data["lines"].append({"from": 3, "to": 5, "r": 0.01, "x": 0.01, "s_max": 1.0})
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(data))
    assert main(["validate", "--network", str(bad)]) == 1
    assert "cycle / |E| != |V|" in capsys.readouterr().out


def test_validate_bad_scenarios(tmp_path, capsys, scen6):
    write_scenarios(scen6.subset([1]), tmp_path)
    path = tmp_path / "day_1.csv"
    lines = path.read_text().splitlines()
    lines[2] = "1.7" + lines[2][lines[2].index(",") :]
    path.write_text("\n".join(lines) + "\n")
    assert main(["validate", "--network", NET, "--scenarios", str(tmp_path)]) == 1
    assert "day_1.csv, row 3" in capsys.readouterr().out


def test_missing_file_is_validation_failure(capsys):
    assert main(["evaluate", "--network", "nope.json", "--scenarios", ".", "--psi", "1,1"]) == 1


def test_evaluate_prints_json(capsys, scen_dir):
    assert main(["evaluate", "--network", NET, "--scenarios", str(scen_dir), "--psi", "1.2,2.0", "--verbose"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["eps_hat"] == 1.0 and len(out["day_flags"]) == 6
    assert out["objective"] < 0


def test_evaluate_wrong_psi_length(capsys, scen_dir):
    assert main(["evaluate", "--network", NET, "--scenarios", str(scen_dir), "--psi", "1.0"]) == 1


def test_eps_bar_range_rejected(scen_dir):
    with pytest.raises(SystemExit):
        main(["evaluate", "--network", NET, "--scenarios", str(scen_dir), "--psi", "1,1", "--eps-bar", "1.5"])


def test_powerflow(tmp_path, capsys):
    inj = tmp_path / "inj.csv"
    inj.write_text(
        ",".join([f"p_{j}" for j in range(1, 6)] + [f"q_{j}" for j in range(1, 6)]) + "\n"
        + ",".join(["-0.01"] * 5 + ["0"] * 5) + "\n"
    )
    assert main(["powerflow", "--network", NET, "--injections", str(inj)]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["converged"] and out["feasible"] and len(out["v"]) == 6


def test_generate_round_trip(tmp_path, capsys):
    out = tmp_path / "gen"
    assert main(["generate", "--network", NET, "--out", str(out), "--days", "3", "--T", "6", "--seed", "2"]) == 0
    assert sorted(p.name for p in out.iterdir()) == ["day_1.csv", "day_2.csv", "day_3.csv", "scenarios_meta.json"]
    assert main(["validate", "--network", NET, "--scenarios", str(out)]) == 0


def test_generate_multimodal_fixture(tmp_path):
    assert main(["generate", "--fixture", "multimodal", "--out", str(tmp_path / "mm")]) == 0
    assert main(["validate", "--network", data_path("multimodal.json"), "--scenarios", str(tmp_path / "mm")]) == 0


def test_solve_is_bit_identical(tmp_path, capsys, scen_dir):
    args = ["solve", "--network", NET, "--scenarios", str(scen_dir), "--budget", "7", "--seed", "7"]
    assert main(args + ["--out", str(tmp_path / "a.json")]) == 0
    assert main(args + ["--out", str(tmp_path / "b.json"), "--threads", "3"]) == 0
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()
    summary = capsys.readouterr().out
    assert "1'psi" in summary and "bestobj" in summary


def test_solve_and_report(tmp_path, capsys, scen_dir):
    base = ["solve", "--network", NET, "--scenarios", str(scen_dir)]
    assert main(base + ["--method", "pattern", "--budget", "12", "--x0", "0.1,0.1", "--out", str(tmp_path / "pat.json")]) == 0
    assert main(base + ["--method", "grid", "--points-per-dim", "3", "--out", str(tmp_path / "grid.json"), "--timing"]) == 0
    assert main(base + ["--budget", "6", "--out", str(tmp_path / "bo.json"), "--dump-gp", str(tmp_path / "gp")]) == 0
    assert (tmp_path / "gp.0.json").exists() and (tmp_path / "gp.1.json").exists()
    capsys.readouterr()
    summ = tmp_path / "summary.json"
    assert main(["report", str(tmp_path / "bo.json"), str(tmp_path / "pat.json"), str(tmp_path / "grid.json"),
                 "--out-dir", str(tmp_path / "hist"), "--summary", str(summ)]) == 0
    text = capsys.readouterr().out
    assert "improvement of bo over others" in text
    rows = json.loads(summ.read_text())
    assert [r["versus"] for r in rows] == ["pat", "grid"]
    assert rows[1]["nfuncall_other"] == 9
    hist = (tmp_path / "hist" / "bo.csv").read_text().splitlines()
    assert hist[0] == "iter,best_obj,eps_hat" and len(hist) == 7


def test_report_rejects_bad_trace(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{}")
    assert main(["report", str(bad)]) == 1


def test_threads_env_fallback(monkeypatch, capsys, scen_dir):
    monkeypatch.setenv("PHCA_THREADS", "4")
    assert main(["evaluate", "--network", NET, "--scenarios", str(scen_dir), "--psi", "0.5,0.5"]) == 0
    a = json.loads(capsys.readouterr().out)
    monkeypatch.setenv("PHCA_THREADS", "1")
    assert main(["evaluate", "--network", NET, "--scenarios", str(scen_dir), "--psi", "0.5,0.5"]) == 0
    assert json.loads(capsys.readouterr().out) == a


def test_solve_objective_surrogate(tmp_path, capsys, scen_dir):
    args = ["solve", "--network", NET, "--scenarios", str(scen_dir), "--budget", "6",
            "--surrogate", "objective", "--warp", "rank", "--out", str(tmp_path / "o.json")]
    assert main(args) == 0
    data = json.loads((tmp_path / "o.json").read_text())
    assert data["summary"]["nfuncall"] == 6
