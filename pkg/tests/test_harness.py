import json
import math

import numpy as np
import pytest

from bpi.errors import WorkerPanic
from bpi.harness import Check, ExperimentReport, McConfig, experiment, load_mechanism, main, run_mc
from bpi.mechanisms import kingman_mechanism
from bpi.ctmc_sim import path_rng


def test_constant_task_has_no_error():
    mean, se, info = run_mc(lambda seed, i: 2.5, McConfig(n_paths=500))
    assert mean == 2.5 and se == 0.0 and info["n"] == 500


def test_bernoulli_mean_within_three_sigma():
    def coin(seed, i):
        return float(path_rng(seed, i).random() < 0.5)

    mean, se, _ = run_mc(coin, McConfig(n_paths=10**5, seed=3), chunk=8192)
    assert abs(mean - 0.5) <= 3 * se
    assert se == pytest.approx(0.5 / math.sqrt(10**5), rel=1e-2)


def test_worker_count_does_not_change_result():
    def task(seed, i):
        return path_rng(seed, i).normal()

    one = run_mc(task, McConfig(n_paths=3000, seed=1, workers=1), chunk=256)
    four = run_mc(task, McConfig(n_paths=3000, seed=1, workers=4), chunk=256)
    assert one[0] == four[0] and one[1] == four[1]


def test_failures_carry_the_index():
    def task(seed, i):
        if i == 137:
            raise RuntimeError("boom")
        return 0.0

    with pytest.raises(WorkerPanic) as info:
        run_mc(task, McConfig(n_paths=200))
    assert "137" in str(info.value)


def test_config_validation():
    with pytest.raises(ValueError):
        McConfig(n_paths=10)
    with pytest.raises(ValueError):
        McConfig(confidence=1.0)
    assert McConfig().sigmas == pytest.approx(3.0, abs=1e-9)


def test_check_rules_recompute_from_fields():
    assert Check("s", 1.0, 1.2, "sigma", 3.0, 0.05, 0.06).passed
    assert not Check("s", 1.0, 1.2, "sigma", 3.0, 0.05, 0.0).passed
    assert Check("r", 1.01, 1.0, "rel", 0.02).passed
    assert not Check("a", 1.01, 1.0, "abs", 1e-3).passed
    assert Check("le", 0.0, 1e-3, "le").passed and Check("ge", 1.0, 0.999, "ge").passed
    assert Check("eq", "Yes", "Yes", "eq").passed
    assert not Check("nan", float("nan"), 0.0, "abs", 1.0).passed
    d = Check("s", 1.0, 1.2, "sigma", 3.0, 0.05, 0.06).to_dict()
    again = Check(**{k: v for k, v in d.items() if k != "passed"})
    assert again.passed == d["passed"]


def test_report_passes_only_if_every_check_passes(tmp_path):
    rep = ExperimentReport("demo", {}, {}, [Check("a", 1, 1, "eq"), Check("b", 0, 1, "abs", 0.5)],
                           {"t": [{"x": 0.1, "y": 2}]})
    assert not rep.passed
    rep.write(tmp_path)
    stored = json.loads((tmp_path / "report.json").read_text())
    assert stored["passed"] is False
    assert [c["passed"] for c in stored["checks"]] == [True, False]
    assert (tmp_path / "t.csv").read_text().startswith("x,y")


def test_load_mechanism_forms(tmp_path):
    k = kingman_mechanism()
    assert load_mechanism("kingman").to_dict() == k.to_dict()
    assert load_mechanism(k.to_json()).to_dict() == k.to_dict()
    f = tmp_path / "m.json"
    f.write_text(k.to_json())
    assert load_mechanism(f"@{f}").to_dict() == k.to_dict()


def test_experiment_rejects_unknown_name():
    with pytest.raises(ValueError):
        experiment("nope", kingman_mechanism())


def test_small_pgfx_experiment():
    rep = experiment("pgfX", kingman_mechanism(), {"ts": [0.5], "us": [0.5]}, McConfig(n_paths=2000, seed=2))
    assert rep.passed and rep.tables["pgf_x"][0]["u"] == 0.5


def test_cli_classify(tmp_path, capsys):
    assert main(["--out", str(tmp_path), "classify", "-m", "sibuya"]) == 0
    rep = json.loads((tmp_path / "report.json").read_text())
    assert rep == json.loads(capsys.readouterr().out)


def test_cli_simulate_binary(tmp_path, capsys):
    assert main(["--out", str(tmp_path), "--seed", "4", "simulate", "-m", "lb", "--binary"]) == 0
    assert (tmp_path / "trajectory.bin").read_bytes()[:4] == b"BPI1"
    assert "events" in capsys.readouterr().out


def test_cli_riccati(tmp_path):
    assert main(["--out", str(tmp_path), "riccati", "-m", "lb", "--q", "1"]) == 0
    assert (tmp_path / "riccati.csv").exists()


def test_cli_experiment_from_config(tmp_path):
    conf = {"mechanism": "lb", "experiment": "extinction-prob",
            "params": {"zs": [1, 2], "N": 200, "expect_kind": "AlmostSure"}, "mc": {"n_paths": 100}}
    cfile = tmp_path / "c.json"
    cfile.write_text(json.dumps(conf))
    out = tmp_path / "out"
    assert main(["--config", str(cfile), "--out", str(out)]) == 0
    rows = (out / "extinction_prob.csv").read_text().splitlines()
    assert rows[0].startswith("z,formula,oracle") and len(rows) == 3


def test_cli_without_command_prints_help(capsys):
    assert main([]) == 2
    assert "usage" in capsys.readouterr().out
