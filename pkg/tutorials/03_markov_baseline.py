"""The three-state Markov baseline on its own.

Days are binned into low, mid and high energy per calendar month; each
month gets a transition matrix and a mean hourly profile per state.
"""

import numpy as np

from solarbs.markov import fit_markov, predict_day_ahead, predict_markov
from solarbs.metrics import nrmse
from solarbs.pvtruth import PanelSpec, harvest_series
from solarbs.weather import Location, synth_weather

loc = Location(41.6, -93.6, -6.0, "IA")
weather = synth_weather(loc, years=3, seed=4)
harvest = harvest_series(weather, loc, PanelSpec.for_location(loc, 48940.0))
fit, test = harvest[: 2 * 8760], harvest[2 * 8760:]

model = fit_markov(fit)
np.set_printoptions(precision=2, suppress=True)
print("July transitions (rows: today low/mid/high):")
print(model.transitions[6])

# Expected harvest for a week starting from a high-energy day in July.
week = predict_markov(model, prev_day_state=2, month=7, horizon_days=7)
print("daily kWh:", (week.reshape(7, 24).sum(axis=1) / 1000).round(1))

# Day-ahead: each day's forecast starts from yesterday's observed state.
fc = predict_day_ahead(model, fit, test, first_day_of_year=0)
print(f"day-ahead nRMSE over the test year: {nrmse(test, fc):.2f}%")
