"""Sizing a base station's PV array and battery bank by hand.

Run with ``python tutorials/01_sizing_walkthrough.py``. Nothing is trained
here; the harvest is a synthetic clear-sky week so the numbers are easy to
follow.
"""

import numpy as np

from solarbs.sizing import (
    SizingProblem,
    full_charge_capacity,
    optimize_bigm_milp,
    optimize_enumeration,
    simulate_battery,
    total_cost,
)

# Unit prices: $244.22 per 430 W module, $2093.37 per 3 kWh battery.
print("cost of 48 modules + 22 batteries:", total_cost(48, 22))
nameplate, usable = full_charge_capacity(22)
print(f"22 batteries hold {nameplate / 1000:g} kWh, {usable / 1000:g} kWh above the 20% floor")

# One week, hourly. Each module yields a sine-shaped day peaking at 350 Wh.
hours = np.arange(168)
per_module = 350.0 * np.clip(np.sin(2 * np.pi * ((hours % 24) - 6) / 24), 0, None)
load = np.full(168, 6000.0)
problem = SizingProblem(per_module, load)

# The bank starts full; every hour it gains n * harvest and pays the load.
trace = simulate_battery(problem, n=80, m=40)
print(f"n=80, m=40: {trace.outage_hours} outage hours, "
      f"lowest stored energy {trace.e_trim.min() / 1000:.1f} kWh")

trace = simulate_battery(problem, n=60, m=10)
print(f"n=60,  m=10: {trace.outage_hours} outage hours")

# Cheapest outage-free configuration, two ways.
enum = optimize_enumeration(problem)
milp = optimize_bigm_milp(problem)
print(f"enumeration: n={enum.n} m={enum.m} ${enum.total_cost:,.2f}")
print(f"big-M MILP:  n={milp.n} m={milp.m} ${milp.total_cost:,.2f} "
      f"({milp.stats['nodes']} branch-and-bound nodes)")

# Tolerating a few outage hours buys a cheaper system.
for k in (0, 6, 24):
    problem.max_outage_hours = k
    s = optimize_enumeration(problem)
    print(f"K={k:>2}: n={s.n} m={s.m} ${s.total_cost:,.2f}, {s.outage_hours} outage hours used")
