"""Forecast a year of harvest with the conditional LSTM, then size from it.

A short training budget keeps this around half a minute on one core;
raise ``max_epochs`` for a better forecast.
"""

import numpy as np

from solarbs.forecaster import TrainConfig, predict_series, train
from solarbs.metrics import cost_difference, error_report, report_table
from solarbs.pvtruth import PanelSpec, harvest_series
from solarbs.sizing import SizingProblem, optimize_enumeration
from solarbs.traffic import PowerParams, consumption_series, synth_traffic
from solarbs.weather import Location, WeatherSeries, split_chronological, synth_weather

iowa = Location(41.6, -93.6, -6.0, "IA")
weather = synth_weather(iowa, years=6, seed=0)
split = split_chronological(weather, 4, 1, 1)

# Ground truth: what the 48.94 kW reference array would have produced.
harvest = harvest_series(weather, iowa, PanelSpec.for_location(iowa, 48940.0))
n_fit = len(split.train) + len(split.validation)

model, log = train(split, harvest[:n_fit], TrainConfig(max_epochs=20, patience=5, seed=0), "cond")
print(f"trained {len(log.epochs)} epochs, best validation MSE {model.best_val_loss:.4g}")

# The first test hour needs 23 hours of history from the validation year.
context = WeatherSeries.concat([split.validation[-(model.lookback - 1):], split.test])
forecast = predict_series(model, context)
actual = harvest[n_fit:]
print(report_table({"cond": error_report(actual, forecast)}))

# Size one January month from the forecast and from the truth.
traffic = synth_traffic(len(weather), seed=0)
load = consumption_series(traffic, PowerParams())[n_fit:]
window = slice(0, 671)
per_module = 430.0 / 48940.0
sized = optimize_enumeration(SizingProblem(forecast[window] * per_module, load[window]))
truth = optimize_enumeration(SizingProblem(actual[window] * per_module, load[window]))
print(f"forecast: n={sized.n} m={sized.m} ${sized.total_cost:,.2f}")
print(f"truth:    n={truth.n} m={truth.m} ${truth.total_cost:,.2f}")
print(f"cost difference {cost_difference(sized.total_cost, truth.total_cost):.3f}%")
print("zero forecast at night:", bool(np.all(forecast[context.columns['dhi'][model.lookback - 1:] == 0] == 0)))
