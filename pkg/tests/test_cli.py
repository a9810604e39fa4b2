import json

import pytest

from solarbs import cli, pipeline
from solarbs.errors import InfeasibleError

TINY = {
    "data": {"synth_years": 3},
    "split": {"train_years": 1, "val_years": 1, "test_years": 1},
    "train": {"max_epochs": 1, "patience": 1, "steps_per_epoch": 3},
    "sizing": {"horizon_hours": 96},
}


@pytest.fixture
def cfg_path(tmp_path):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(TINY))
    return p


def test_usage_errors(capsys):
    assert cli.main([]) == 1
    assert cli.main(["frobnicate"]) == 1
    assert cli.main(["run", "--variant", "gru"]) == 1
    assert cli.main(["run", "--set", "novalue"]) == 1


def test_help_exits_zero(capsys):
    assert cli.main(["--help"]) == 0
    assert "cross-region" in capsys.readouterr().out


def test_run_and_flags(cfg_path, tmp_path):
    out = tmp_path / "o"
    code = cli.main(["run", "--config", str(cfg_path), "--out", str(out), "--seed", "3",
                     "--variant", "lstm", "--set", "sizing.method=bigm"])
    assert code == 0
    summary = (out / "summary.txt").read_text()
    assert "variant: lstm" in summary and "seed: 3" in summary
    assert json.loads((out / "sizing_solution.json").read_text())["method"] == "bigm_milp"


def test_missing_data_path_names_file(cfg_path, tmp_path, capsys):
    missing = tmp_path / "weather_missing.csv"
    code = cli.main(["run", "--config", str(cfg_path), "--out", str(tmp_path / "o"),
                     "--set", f"data.path={missing}"])
    assert code == 2
    assert str(missing) in capsys.readouterr().err


def test_missing_config_file(tmp_path, capsys):
    assert cli.main(["run", "--config", str(tmp_path / "absent.json")]) == 2
    assert "absent.json" in capsys.readouterr().err


def test_stage_commands(cfg_path, tmp_path, capsys):
    out = str(tmp_path / "s")
    base = ["--config", str(cfg_path), "--out", out]
    for cmd in ("synth", "truth", "train", "predict", "evaluate", "size"):
        assert cli.main([cmd, *base]) == 0, cmd
    printed = capsys.readouterr().out
    assert '"nrmse_hourly"' in printed and '"n"' in printed


def test_predict_without_checkpoint(cfg_path, tmp_path, capsys):
    assert cli.main(["predict", "--config", str(cfg_path), "--out", str(tmp_path / "e")]) == 2
    assert "checkpoint" in capsys.readouterr().err


def test_infeasible_exit_code(cfg_path, tmp_path, monkeypatch):
    def boom(config, problem):
        raise InfeasibleError("no (n, m) in bounds", block="search_bounds")

    monkeypatch.setattr(pipeline, "solve", boom)
    assert cli.main(["run", "--config", str(cfg_path), "--out", str(tmp_path / "i")]) == 3


def test_domain_error_exit_code(cfg_path, tmp_path, capsys):
    code = cli.main(["run", "--config", str(cfg_path), "--out", str(tmp_path / "d"),
                     "--set", "traffic.peak_load=5000000"])
    assert code == 2
