import json

import numpy as np
import pytest

from solarbs.errors import DataError, SizingError
from solarbs.forecaster import load_checkpoint
from solarbs.metrics import COLUMNS, ErrorReport
from solarbs.pipeline import (
    StudyConfig,
    compare_baselines,
    cross_region,
    run_study,
    stage_evaluate,
    stage_predict,
    stage_size,
    stage_train,
    timeseries_cv,
)
from solarbs.pvtruth import read_energy_csv
from solarbs.sizing import SizingSolution
from solarbs.weather import HOURS_PER_YEAR, read_canonical_csv

TINY = {
    "data": {"synth_years": 3},
    "split": {"train_years": 1, "val_years": 1, "test_years": 1},
    "train": {"max_epochs": 2, "patience": 1, "steps_per_epoch": 5},
    "sizing": {"horizon_hours": 168},
}


def tiny(out, **extra):
    d = json.loads(json.dumps(TINY))
    d["out"] = str(out)
    d.update(extra)
    return StudyConfig.from_dict(d)


@pytest.fixture(scope="module")
def study(tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    return out, run_study(tiny(out))


def test_run_emits_artifacts(study):
    out, res = study
    for name in ("harvest.csv", "checkpoint.json", "error_report.json", "sizing_solution.json", "summary.txt"):
        assert (out / name).is_file(), name
    assert (out / "forecast_week.svg").read_text().startswith("<?xml")
    assert (out / "forecast_week.csv").is_file()


def test_artifacts_reparse(study):
    out, res = study
    assert ErrorReport.from_dict(json.loads((out / "error_report.json").read_text())) == res.report
    sol = SizingSolution.from_dict(json.loads((out / "sizing_solution.json").read_text()))
    assert (sol.n, sol.m) == (res.solution.n, res.solution.m)
    ts, _, wh = read_energy_csv(out / "harvest.csv")
    assert len(wh) == 3 * HOURS_PER_YEAR
    _, _, fc = read_energy_csv(out / "predictions.csv")
    assert len(fc) == HOURS_PER_YEAR and np.all(fc >= 0)
    model = load_checkpoint(out / "checkpoint.json")
    assert model.n_params == 5665


def test_rerun_is_byte_identical(study, tmp_path):
    out, _ = study
    run_study(tiny(tmp_path))
    for f in sorted(out.iterdir()):
        assert (tmp_path / f.name).read_bytes() == f.read_bytes(), f.name


def test_seed_changes_outputs(study, tmp_path):
    out, _ = study
    # a two-epoch network can forecast near zero and make sizing infeasible
    cfg = tiny(tmp_path, variant="markov")
    cfg.override("seed", 1)
    run_study(cfg)
    assert (tmp_path / "harvest.csv").read_bytes() != (out / "harvest.csv").read_bytes()


def test_missing_data_path(tmp_path):
    cfg = tiny(tmp_path)
    cfg.override("data.path", str(tmp_path / "nope.csv"))
    with pytest.raises(DataError, match="nope.csv"):
        run_study(cfg)


def test_unknown_config_key():
    with pytest.raises(DataError):
        StudyConfig.from_dict({"trian": {}})


def test_staged_run_matches_full_run(study, tmp_path):
    out, res = study
    cfg = tiny(tmp_path)
    stage_train(cfg)
    stage_predict(cfg)
    rep = stage_evaluate(cfg)
    assert rep == res.report
    assert stage_size(cfg).total_cost == res.solution.total_cost


def test_markov_study(tmp_path):
    res = run_study(tiny(tmp_path, variant="markov"))
    assert (tmp_path / "markov.json").is_file()
    assert res.report.nrmse_hourly > 0


def test_canonical_csv_input(study, tmp_path):
    from solarbs.pipeline import stage_synth

    src = tiny(tmp_path / "synth")
    path = stage_synth(src)
    assert len(read_canonical_csv(path)) == 3 * HOURS_PER_YEAR
    cfg = tiny(tmp_path / "again")
    cfg.override("data.path", str(path))
    res = run_study(cfg)
    assert res.report == study[1].report


def test_compare_rows(tmp_path):
    res = compare_baselines(tiny(tmp_path))
    assert set(res.reports) == {"markov", "lstm", "cond"}
    assert sorted(res.ranking) == ["cond", "lstm", "markov"]
    for rep in res.reports.values():
        assert all(np.isfinite(getattr(rep, k)) for k in COLUMNS)
    rows = (tmp_path / "compare.txt").read_text().splitlines()
    assert sum(1 for r in rows if r.split() and r.split()[0] in res.reports) == 3
    again = json.loads((tmp_path / "compare.json").read_text())
    assert again["ranking"] == res.ranking


def test_cv_fold_boundaries(tmp_path):
    cfg = tiny(tmp_path, data={"synth_years": 20}, cv={"methods": ["markov"]})
    rows = timeseries_cv(cfg)
    y = HOURS_PER_YEAR
    assert [(r["train_years"], r["test_years"]) for r in rows] == [(4, 4), (8, 4), (12, 4), (16, 4)]
    for r in rows:
        assert r["train_rows"] == [0, r["train_years"] * y]
        assert r["test_rows"] == [r["train_years"] * y, (r["train_years"] + 4) * y]
    assert (tmp_path / "cv_nrmse.svg").is_file() and (tmp_path / "cv.json").is_file()


def test_cv_needs_twenty_years(tmp_path):
    with pytest.raises(SizingError, match="20 years"):
        timeseries_cv(tiny(tmp_path))


def test_cross_region_degenerate_case(study, tmp_path):
    _, res = study
    sec, = cross_region(tiny(tmp_path))
    assert sec["report"] == res.report.to_dict()
    assert (sec["n"], sec["m"]) == (res.solution.n, res.solution.m)
    assert (sec["truth_n"], sec["truth_m"]) == (res.truth_solution.n, res.truth_solution.m)


def test_cross_region_sections(study, tmp_path):
    out, _ = study
    locs = [{"latitude": 44.0, "longitude": -100.0, "timezone_offset": -6.0, "region_label": "SD"},
            {"latitude": 36.7, "longitude": -119.8, "timezone_offset": -8.0, "region_label": "CA"}]
    cfg = tiny(tmp_path, eval_locations=locs, checkpoint=str(out / "checkpoint.json"))
    secs = cross_region(cfg)
    assert [s["region"] for s in secs] == ["SD", "CA"]
    for s in secs:
        assert {"n", "m", "cost_difference"} <= set(s)
    data = json.loads((tmp_path / "cross_region.json").read_text())
    assert len(data["regions"]) == 2


def test_cross_region_rejects_markov(tmp_path):
    with pytest.raises(DataError):
        cross_region(tiny(tmp_path, variant="markov"))
