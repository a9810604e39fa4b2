"""End-to-end study orchestration: data, truth, training, evaluation, sizing.

Every entry point takes a :class:`StudyConfig`. Artifacts are written under
``config.out`` with deterministic content: JSON uses sorted keys and floats
in shortest round-trip form, so a rerun with the same seed reproduces the
files byte for byte.
"""

from __future__ import annotations

import copy
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import plotting
from .errors import DataError, SizingError
from .forecaster import TrainConfig, load_checkpoint, predict_series, save_checkpoint, train
from .markov import MarkovModel, fit_markov, predict_day_ahead
from .metrics import ErrorReport, cost_difference, error_report, format_table, nrmse, report_table
from .pvtruth import MODULE_RATING_W, ARRAY_RATING_W, PanelSpec, harvest_series, read_energy_csv, write_energy_csv
from .sizing import SizingProblem, SizingSolution, optimize_bigm_milp, optimize_enumeration
from .traffic import PowerParams, consumption_series, synth_traffic
from .weather import (
    HOURS_PER_YEAR,
    Location,
    WeatherSeries,
    parse_psm3_csv,
    read_canonical_csv,
    split_chronological,
    synth_weather,
)
from .weather import _MONTH_START, write_canonical_csv

log = logging.getLogger(__name__)

VARIANTS = ("markov", "lstm", "cond")
CV_FOLDS = ((4, 4), (8, 4), (12, 4), (16, 4))

_TRAIN_KEYS = tuple(k for k in TrainConfig.__dataclass_fields__ if k != "seed")

DEFAULTS = {
    "seed": 0,
    "out": "solarbs-out",
    "variant": "cond",
    "checkpoint": None,
    "location": {"latitude": 41.6, "longitude": -93.6, "timezone_offset": -6.0, "region_label": "IA"},
    "data": {"path": None, "synth_years": 6, "start_year": 2000},
    "split": {"train_years": 4, "val_years": 1, "test_years": 1},
    "panel": {"rated_power_stc": ARRAY_RATING_W, "module_power": MODULE_RATING_W,
              "tilt": None, "azimuth": None, "gamma": -0.0037, "noct": 45.0},
    "power": PowerParams().to_dict(),
    "traffic": {"peak_load": 14000},
    "train": {k: getattr(TrainConfig(), k) for k in _TRAIN_KEYS},
    "sizing": {"horizon_hours": 671, "start_hour": 0, "max_outage_hours": 0,
               "battery_capacity_cb": 3000.0, "dod_floor": 0.2, "pv_unit_cost": 244.22,
               "battery_unit_cost": 2093.37, "epsilon": 1.0, "method": "enumeration",
               "source": "forecast"},
    "cv": {"folds": [list(f) for f in CV_FOLDS], "methods": list(VARIANTS)},
    "cross_region": {"local_baseline": False},
    "eval_locations": [],
}


def _merge(base, over, path=""):
    out = copy.deepcopy(base)
    for k, v in over.items():
        if k not in base:
            raise DataError(f"unknown config key: {path + k}")
        if isinstance(base[k], dict) and isinstance(v, dict):
            out[k] = _merge(base[k], v, path + k + ".")
        else:
            out[k] = copy.deepcopy(v)
    return out


@dataclass
class StudyConfig:
    """Nested settings document; see :data:`DEFAULTS` for every key."""

    values: dict = field(default_factory=lambda: copy.deepcopy(DEFAULTS))

    @classmethod
    def from_dict(cls, d):
        return cls(_merge(DEFAULTS, d))

    @classmethod
    def load(cls, path):
        p = Path(path)
        if not p.exists():
            raise DataError(f"config file not found: {p}")
        try:
            d = json.loads(p.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise DataError(f"{p}: invalid JSON: {exc}") from None
        return cls.from_dict(d)

    def to_dict(self):
        return copy.deepcopy(self.values)

    def to_json(self):
        return json.dumps(self.values, indent=2, sort_keys=True)

    def override(self, dotted, value):
        """Set ``a.b.c`` to ``value``; the key must already exist."""
        keys = dotted.split(".")
        node = self.values
        for k in keys[:-1]:
            if not isinstance(node.get(k), dict):
                raise DataError(f"unknown config key: {dotted}")
            node = node[k]
        if keys[-1] not in node:
            raise DataError(f"unknown config key: {dotted}")
        node[keys[-1]] = value
        return self

    def __getitem__(self, key):
        return self.values[key]

    @property
    def seed(self):
        return int(self.values["seed"])

    @property
    def out(self):
        return Path(self.values["out"])

    def location(self):
        return Location.from_dict(self.values["location"])

    def train_config(self, seed=None):
        return TrainConfig(seed=self.seed if seed is None else seed, **self.values["train"])

    def power_params(self):
        return PowerParams.from_dict(self.values["power"])


# ------------------------------------------------------------- helpers

def _dump_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _outdir(config, sub=None):
    d = config.out if sub is None else config.out / sub
    d.mkdir(parents=True, exist_ok=True)
    return d


def load_weather(config, location_entry=None):
    """``(Location, WeatherSeries)`` from the configured path or the synthesiser.

    ``location_entry`` is an ``eval_locations`` item; it may carry its own
    ``path``, otherwise synthetic data with the study seed is used.
    """
    data = config["data"]
    if location_entry is not None:
        path = location_entry.get("path")
        loc_d = {k: v for k, v in location_entry.items() if k != "path"}
    else:
        path = data["path"]
        loc_d = config["location"]
    if path:
        paths = path if isinstance(path, list) else [path]
        parts = []
        location = None
        for p in paths:
            p = Path(p)
            if not p.exists():
                raise DataError(f"data path not found: {p}")
            with p.open(encoding="utf-8") as fh:
                first = fh.readline()
            if first.startswith("timestamp"):
                parts.append(read_canonical_csv(p))
                location = location or Location.from_dict(loc_d)
            else:
                loc, s = parse_psm3_csv(p)
                parts.append(s)
                location = location or loc
        series = WeatherSeries.concat(parts) if len(parts) > 1 else parts[0]
        return location, series.validate()
    location = Location.from_dict(loc_d)
    return location, synth_weather(location, int(data["synth_years"]), config.seed, int(data["start_year"]))


def panel_for(config, location):
    p = config["panel"]
    kw = {k: p[k] for k in ("tilt", "azimuth") if p.get(k) is not None}
    return PanelSpec.for_location(location, float(p["rated_power_stc"]), gamma=p["gamma"], noct=p["noct"], **kw)


def truth_harvest(config, location, series):
    """Reference-array hourly harvest (Wh)."""
    return harvest_series(series, location, panel_for(config, location))


def consumption_for(config, hours):
    profile = synth_traffic(hours, int(config["traffic"]["peak_load"]), config.seed)
    return consumption_series(profile, config.power_params())


def _noleap_doy(series, i=0):
    ts = series.timestamps[i].astype("datetime64[D]")
    month = int(series.columns["month"][i])
    day = int((ts - ts.astype("datetime64[M]")).astype(int)) + 1
    return int(_MONTH_START[month - 1] + day - 1)


def _split(config, series, years=None):
    s = config["split"]
    tr, va, te = years if years is not None else (s["train_years"], s["val_years"], s["test_years"])
    return split_chronological(series, int(tr), int(va), int(te))


def _test_context(split, lookback):
    """Test rows preceded by ``lookback - 1`` rows of history."""
    prev = WeatherSeries.concat([p for p in (split.train, split.validation) if len(p)])
    return WeatherSeries.concat([prev[len(prev) - (lookback - 1):], split.test])


def fit_and_forecast(config, variant, split, harvest, seed=None, checkpoint_path=None):
    """Fit ``variant`` on ``split`` and forecast its test rows.

    Returns ``(model, log_or_None, forecast)``; the forecast is aligned with
    ``split.test``.
    """
    if variant not in VARIANTS:
        raise DataError(f"unknown variant: {variant}")
    (a, b), (_, c), (_, d) = split.bounds()
    if variant == "markov":
        hist = np.asarray(harvest[:c], dtype=np.float64)
        history_series = WeatherSeries.concat([p for p in (split.train, split.validation) if len(p)])
        day_month = history_series.columns["month"][::24]
        model = fit_markov(hist, day_month=day_month)
        fc = predict_day_ahead(model, hist, harvest[c:d], _noleap_doy(split.test))
        return model, None, fc
    cfg = config.train_config(seed)
    model, tlog = train(split, harvest[:d], cfg, variant, checkpoint_path)
    fc = predict_series(model, _test_context(split, model.lookback))
    return model, tlog, fc


def per_module(config, wh):
    p = config["panel"]
    return np.asarray(wh, dtype=np.float64) * (float(p["module_power"]) / float(p["rated_power_stc"]))


def sizing_problem(config, harvest_array_wh, consumption_wh):
    """Problem over the configured window of an hourly series pair."""
    sz = config["sizing"]
    start = int(sz["start_hour"])
    stop = start + int(sz["horizon_hours"])
    if stop > len(consumption_wh):
        raise SizingError(f"sizing window [{start}, {stop}) exceeds {len(consumption_wh)} hours")
    return SizingProblem(
        per_module(config, harvest_array_wh[start:stop]),
        np.asarray(consumption_wh[start:stop], dtype=np.float64),
        battery_capacity_cb=float(sz["battery_capacity_cb"]),
        dod_floor=float(sz["dod_floor"]),
        pv_unit_cost=float(sz["pv_unit_cost"]),
        battery_unit_cost=float(sz["battery_unit_cost"]),
        max_outage_hours=int(sz["max_outage_hours"]),
        epsilon=float(sz["epsilon"]),
    )


def solve(config, problem):
    method = config["sizing"]["method"]
    if method == "enumeration":
        return optimize_enumeration(problem)
    if method in ("bigm", "bigm_milp", "milp"):
        return optimize_bigm_milp(problem)
    raise DataError(f"unknown sizing method: {method}")


def sizing_table(rows):
    """Rows of ``(label, SizingSolution, cost difference %)``."""
    body = [[lbl, str(s.n), str(s.m), f"{s.total_cost:.2f}", f"{diff:.3f}"] for lbl, s, diff in rows]
    return format_table(body, ("Harvest", "PV modules", "Battery modules", "Cost", "Cost diff %"))


# ------------------------------------------------------------- commands

@dataclass
class StudyResult:
    report: ErrorReport
    solution: SizingSolution
    truth_solution: SizingSolution
    artifacts: dict


def run_study(config):
    """Full single-region pipeline; writes every artifact under ``config.out``."""
    out = _outdir(config)
    variant = config["variant"]
    location, series = load_weather(config)
    harvest = truth_harvest(config, location, series)
    write_energy_csv(out / "harvest.csv", series.timestamps, series.tz_offset, harvest)
    consumption = consumption_for(config, len(series))
    split = _split(config, series)
    (_, _), (_, c), (_, d) = split.bounds()
    art = {"harvest": out / "harvest.csv"}

    if variant == "markov":
        model, tlog, fc = fit_and_forecast(config, variant, split, harvest)
        model.save(out / "markov.json")
        art["model"] = out / "markov.json"
    else:
        model, tlog, fc = fit_and_forecast(config, variant, split, harvest)
        save_checkpoint(model, out / "checkpoint.json")
        tlog.write_csv(out / "training_log.csv")
        art["model"] = out / "checkpoint.json"
        art["training_log"] = out / "training_log.csv"
    actual = harvest[c:d]
    write_energy_csv(out / "predictions.csv", split.test.timestamps, series.tz_offset, fc)
    art["predictions"] = out / "predictions.csv"

    report = error_report(actual, fc)
    _dump_json(out / "error_report.json", report.to_dict())
    art["error_report"] = out / "error_report.json"

    cons = consumption[c:d]
    sol = solve(config, sizing_problem(config, fc, cons))
    truth = solve(config, sizing_problem(config, actual, cons))
    diff = cost_difference(sol.total_cost, truth.total_cost)
    _dump_json(out / "sizing_solution.json", sol.to_dict())
    _dump_json(out / "sizing_truth.json", truth.to_dict())
    art["sizing_solution"] = out / "sizing_solution.json"
    art["sizing_truth"] = out / "sizing_truth.json"

    week = slice(0, 7 * 24)
    art["plot"] = plotting.line_chart(out / "forecast_week.svg", {"actual": actual[week], variant: fc[week]},
                                      title=f"{location.region_label} first test week")

    summary = [
        f"region: {location.region_label} ({location.latitude}, {location.longitude})",
        f"variant: {variant}",
        f"seed: {config.seed}",
        "",
        report_table({variant: report}),
        sizing_table([("ground truth", truth, 0.0), (variant, sol, diff)]),
    ]
    (out / "summary.txt").write_text("\n".join(summary), encoding="utf-8")
    art["summary"] = out / "summary.txt"
    return StudyResult(report, sol, truth, art)


@dataclass
class CompareResult:
    reports: dict
    ranking: list

    def to_dict(self):
        return {"reports": {k: v.to_dict() for k, v in self.reports.items()}, "ranking": self.ranking}


def compare_baselines(config, write=True):
    """Markov, LSTM and Cond-LSTM on the same split; ranked by hourly nRMSE."""
    location, series = load_weather(config)
    harvest = truth_harvest(config, location, series)
    split = _split(config, series)
    (_, _), (_, c), (_, d) = split.bounds()
    actual = harvest[c:d]
    reports = {}
    for v in VARIANTS:
        _, _, fc = fit_and_forecast(config, v, split, harvest)
        reports[v] = error_report(actual, fc)
        log.info("%s nRMSE %.4f", v, reports[v].nrmse_hourly)
    ranking = sorted(reports, key=lambda k: reports[k].nrmse_hourly)
    res = CompareResult(reports, ranking)
    if write:
        out = _outdir(config)
        _dump_json(out / "compare.json", res.to_dict())
        (out / "compare.txt").write_text(
            report_table(reports) + "\nranking: " + " < ".join(ranking) + "\n", encoding="utf-8")
    return res


def timeseries_cv(config, write=True):
    """Growing-window folds with a fixed test length, no validation part.

    Without validation data, early stopping monitors the training loss.
    """
    folds = [tuple(int(x) for x in f) for f in config["cv"]["folds"]]
    need = max(tr + te for tr, te in folds)
    location, series = load_weather(config)
    if len(series) < need * HOURS_PER_YEAR:
        raise SizingError(f"cross-validation needs {need} years ({need * HOURS_PER_YEAR} rows), "
                          f"series has {len(series)}")
    harvest = truth_harvest(config, location, series)
    rows = []
    for k, (tr, te) in enumerate(folds, 1):
        split = _split(config, series, (tr, 0, te))
        (_, a), _, (_, d) = split.bounds()
        actual = harvest[a:d]
        for v in config["cv"]["methods"]:
            _, _, fc = fit_and_forecast(config, v, split, harvest)
            rows.append({
                "fold": k, "train_years": tr, "test_years": te,
                "train_rows": [0, a], "test_rows": [a, d], "method": v,
                "rmse": float(np.sqrt(np.mean((fc - actual) ** 2))),
                "nrmse": nrmse(actual, fc),
            })
    if write:
        out = _outdir(config)
        _dump_json(out / "cv.json", {"folds": rows})
        table = [[str(r["fold"]), r["method"], r["rmse"], r["nrmse"]] for r in rows]
        (out / "cv.txt").write_text(format_table(table, ("Fold", "Method", "RMSE W", "nRMSE %")), encoding="utf-8")
        methods = list(config["cv"]["methods"])
        groups = {m: [r["nrmse"] for r in rows if r["method"] == m] for m in methods}
        plotting.bar_chart(out / "cv_nrmse.svg", [f"{tr}/{te}" for tr, te in folds], groups,
                           title="nRMSE per fold", ylabel="nRMSE %")
    return rows


def cross_region(config, write=True):
    """Apply one trained forecaster to other regions without retraining.

    The model comes from ``config.checkpoint`` when set, otherwise it is
    trained on the home location. Each region gets an ErrorReport and a
    sizing comparison against its own ground-truth harvest.
    """
    variant = config["variant"]
    if variant == "markov":
        raise DataError("cross-region evaluation needs a neural variant (lstm or cond)")
    if config["checkpoint"]:
        model = load_checkpoint(config["checkpoint"])
    else:
        location, series = load_weather(config)
        harvest = truth_harvest(config, location, series)
        model, _, _ = fit_and_forecast(config, variant, _split(config, series), harvest)
    entries = config["eval_locations"] or [dict(config["location"])]
    sections = []
    for entry in entries:
        loc, series = load_weather(config, entry)
        harvest = truth_harvest(config, loc, series)
        split = _split(config, series)
        (_, _), (_, c), (_, d) = split.bounds()
        actual = harvest[c:d]
        fc = predict_series(model, _test_context(split, model.lookback))
        rep = error_report(actual, fc)
        cons = consumption_for(config, len(series))[c:d]
        sol = solve(config, sizing_problem(config, fc, cons))
        truth = solve(config, sizing_problem(config, actual, cons))
        sec = {
            "region": loc.region_label, "location": loc.to_dict(), "report": rep.to_dict(),
            "n": sol.n, "m": sol.m, "total_cost": sol.total_cost,
            "truth_n": truth.n, "truth_m": truth.m, "truth_cost": truth.total_cost,
            "cost_difference": cost_difference(sol.total_cost, truth.total_cost),
        }
        if config["cross_region"]["local_baseline"]:
            _, _, local_fc = fit_and_forecast(config, variant, split, harvest)
            sec["local_nrmse"] = nrmse(actual, local_fc)
        sections.append(sec)
    if write:
        out = _outdir(config)
        _dump_json(out / "cross_region.json", {"variant": variant, "regions": sections})
        lines = []
        for s in sections:
            lines.append(f"[{s['region']}] nRMSE {s['report']['nrmse_hourly']:.3f}%")
            lines.append(format_table(
                [["forecast", str(s["n"]), str(s["m"]), f"{s['total_cost']:.2f}", f"{s['cost_difference']:.3f}"],
                 ["ground truth", str(s["truth_n"]), str(s["truth_m"]), f"{s['truth_cost']:.2f}", "0.000"]],
                ("Harvest", "PV modules", "Battery modules", "Cost", "Cost diff %")))
        (out / "cross_region.txt").write_text("\n".join(lines), encoding="utf-8")
    return sections


# ------------------------------------------------------- single stages

def stage_ingest(config):
    if not config["data"]["path"]:
        raise DataError("ingest needs data.path")
    location, series = load_weather(config)
    out = _outdir(config)
    write_canonical_csv(out / "weather.csv", series)
    _dump_json(out / "location.json", location.to_dict())
    return out / "weather.csv"


def stage_synth(config):
    location, series = load_weather(config)
    out = _outdir(config)
    write_canonical_csv(out / "weather.csv", series)
    _dump_json(out / "location.json", location.to_dict())
    cons = consumption_for(config, len(series))
    write_energy_csv(out / "consumption.csv", series.timestamps, series.tz_offset, cons)
    return out / "weather.csv"


def stage_truth(config):
    location, series = load_weather(config)
    out = _outdir(config)
    harvest = truth_harvest(config, location, series)
    write_energy_csv(out / "harvest.csv", series.timestamps, series.tz_offset, harvest)
    return out / "harvest.csv"


def stage_train(config):
    variant = config["variant"]
    location, series = load_weather(config)
    harvest = truth_harvest(config, location, series)
    out = _outdir(config)
    split = _split(config, series)
    model, tlog, fc = fit_and_forecast(config, variant, split, harvest)
    if variant == "markov":
        model.save(out / "markov.json")
        return out / "markov.json"
    save_checkpoint(model, out / "checkpoint.json")
    tlog.write_csv(out / "training_log.csv")
    return out / "checkpoint.json"


def stage_predict(config):
    variant = config["variant"]
    location, series = load_weather(config)
    split = _split(config, series)
    out = _outdir(config)
    if variant == "markov":
        path = Path(config["checkpoint"] or out / "markov.json")
        if not path.exists():
            raise DataError(f"model file not found: {path}")
        model = MarkovModel.load(path)
        harvest = truth_harvest(config, location, series)
        (_, _), (_, c), (_, d) = split.bounds()
        fc = predict_day_ahead(model, harvest[:c], harvest[c:d], _noleap_doy(split.test))
    else:
        path = Path(config["checkpoint"] or out / "checkpoint.json")
        if not path.exists():
            raise DataError(f"checkpoint not found: {path}")
        model = load_checkpoint(path)
        fc = predict_series(model, _test_context(split, model.lookback))
    write_energy_csv(out / "predictions.csv", split.test.timestamps, series.tz_offset, fc)
    return out / "predictions.csv"


def _read_predictions(config):
    path = config.out / "predictions.csv"
    if not path.exists():
        raise DataError(f"predictions not found: {path}")
    return read_energy_csv(path)[2]


def stage_evaluate(config):
    location, series = load_weather(config)
    split = _split(config, series)
    (_, _), (_, c), (_, d) = split.bounds()
    actual = truth_harvest(config, location, series)[c:d]
    rep = error_report(actual, _read_predictions(config))
    out = _outdir(config)
    _dump_json(out / "error_report.json", rep.to_dict())
    return rep


def stage_size(config):
    location, series = load_weather(config)
    split = _split(config, series)
    (_, _), (_, c), (_, d) = split.bounds()
    if config["sizing"]["source"] == "truth":
        wh = truth_harvest(config, location, series)[c:d]
    else:
        wh = _read_predictions(config)
    cons = consumption_for(config, len(series))[c:d]
    sol = solve(config, sizing_problem(config, wh, cons))
    out = _outdir(config)
    _dump_json(out / "sizing_solution.json", sol.to_dict())
    return sol
