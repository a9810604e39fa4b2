from .bigm import BigMModel, optimize_bigm_milp
from .enumeration import optimize_enumeration
from .problem import (
    BATTERY_CAPACITY_WH,
    BATTERY_UNIT_COST,
    PV_UNIT_COST,
    BatteryTrace,
    SearchBounds,
    SizingProblem,
    SizingSolution,
    count_outages,
    full_charge_capacity,
    is_feasible,
    search_bounds,
    simulate_battery,
    total_cost,
)
