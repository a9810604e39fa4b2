"""Sizing problem data, battery dynamics and the shared search bounds."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import AlignmentError, DataError, DomainError, SchemaError

PV_UNIT_COST = 244.22
BATTERY_UNIT_COST = 2093.37
BATTERY_CAPACITY_WH = 3000.0


@dataclass
class SizingProblem:
    harvest_per_module: np.ndarray
    consumption: np.ndarray
    battery_capacity_cb: float = BATTERY_CAPACITY_WH
    dod_floor: float = 0.2
    pv_unit_cost: float = PV_UNIT_COST
    battery_unit_cost: float = BATTERY_UNIT_COST
    max_outage_hours: int = 0
    epsilon: float = 1.0

    def __post_init__(self):
        self.harvest_per_module = np.asarray(self.harvest_per_module, dtype=np.float64)
        self.consumption = np.asarray(self.consumption, dtype=np.float64)
        if self.harvest_per_module.shape != self.consumption.shape or self.harvest_per_module.ndim != 1:
            raise AlignmentError("harvest and consumption must be 1-D and of equal length")
        if np.any(self.harvest_per_module < 0) or np.any(self.consumption < 0):
            raise DataError("harvest and consumption must be non-negative")
        if not 0.0 <= self.dod_floor < 1.0:
            raise DomainError("dod_floor must lie in [0, 1)")
        if self.pv_unit_cost <= 0 or self.battery_unit_cost <= 0 or self.battery_capacity_cb <= 0:
            raise DomainError("costs and battery capacity must be positive")
        if self.max_outage_hours < 0:
            raise DomainError("max_outage_hours must be >= 0")

    @property
    def len_data(self):
        return len(self.consumption)

    def cost(self, n, m):
        return round(n * self.pv_unit_cost + m * self.battery_unit_cost, 2)

    def to_dict(self):
        return {
            "harvest_per_module": self.harvest_per_module.tolist(),
            "consumption": self.consumption.tolist(),
            "battery_capacity_cb": self.battery_capacity_cb,
            "dod_floor": self.dod_floor,
            "pv_unit_cost": self.pv_unit_cost,
            "battery_unit_cost": self.battery_unit_cost,
            "max_outage_hours": self.max_outage_hours,
            "epsilon": self.epsilon,
        }

    @classmethod
    def from_dict(cls, d):
        for k in ("harvest_per_module", "consumption"):
            if k not in d:
                raise SchemaError(k)
        return cls(**d)

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict()), encoding="utf-8")

    @classmethod
    def load(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def total_cost(n, m, pv_unit_cost=PV_UNIT_COST, battery_unit_cost=BATTERY_UNIT_COST):
    """Purchase cost of ``n`` modules and ``m`` batteries, rounded to the cent."""
    return round(n * pv_unit_cost + m * battery_unit_cost, 2)


def full_charge_capacity(m, battery_capacity_cb=BATTERY_CAPACITY_WH, dod_floor=0.2):
    """``(nameplate Wh, usable Wh)`` of a bank of ``m`` batteries."""
    if m < 1:
        raise DomainError("need at least one battery")
    nameplate = m * battery_capacity_cb
    return nameplate, (1.0 - dod_floor) * nameplate


@dataclass
class BatteryTrace:
    e_avail: np.ndarray
    e_battery: np.ndarray
    e_trim: np.ndarray
    outage: np.ndarray

    @property
    def outage_hours(self):
        return int(self.outage.sum())

    def to_dict(self):
        return {
            "e_avail": self.e_avail.tolist(),
            "e_battery": self.e_battery.tolist(),
            "e_trim": self.e_trim.tolist(),
            "outage": self.outage.astype(int).tolist(),
        }


def simulate_battery(problem, n, m):
    """Hour-by-hour bank state for ``n`` modules and ``m`` batteries.

    An hour is an outage when the available energy falls below the DoD
    floor plus epsilon; its load is shed, so the bank keeps the energy it
    had plus the harvest. Stored energy is capped at ``m * C_B``.
    """
    if m < 1:
        raise DomainError("m must be >= 1: the bank starts full at m * C_B")
    if n < 0:
        raise DomainError("n must be >= 0")
    p = problem
    cap = m * p.battery_capacity_cb
    floor = p.dod_floor * cap + p.epsilon
    gain = (n * p.harvest_per_module).tolist()
    use = p.consumption.tolist()
    T = len(use)
    e_avail = [0.0] * T
    e_batt = [0.0] * T
    e_trim = [0.0] * T
    outage = [False] * T
    prev = cap
    for i in range(T):
        avail = prev + gain[i] - use[i]
        out = avail < floor
        batt = avail + use[i] if out else avail
        prev = batt if batt < cap else cap
        e_avail[i] = avail
        e_batt[i] = batt
        e_trim[i] = prev
        outage[i] = out
    return BatteryTrace(np.array(e_avail), np.array(e_batt), np.array(e_trim), np.array(outage, dtype=bool))


def count_outages(problem, n, m, stop_after=None):
    """Outage hours for ``(n, m)``; stops early once ``stop_after`` is exceeded."""
    p = problem
    cap = m * p.battery_capacity_cb
    floor = p.dod_floor * cap + p.epsilon
    gain = (n * p.harvest_per_module).tolist()
    use = p.consumption.tolist()
    limit = math.inf if stop_after is None else stop_after
    prev = cap
    count = 0
    for g, u in zip(gain, use):
        avail = prev + g - u
        if avail < floor:
            count += 1
            if count > limit:
                return count
            avail += u
        prev = avail if avail < cap else cap
    return count


def is_feasible(problem, n, m):
    return count_outages(problem, n, m, problem.max_outage_hours) <= problem.max_outage_hours


@dataclass
class SearchBounds:
    n_max: int
    m_max: int


def search_bounds(problem):
    """Generous upper bounds on (n, m).

    ``m_max`` stores twice the largest daily consumption above the DoD
    floor; ``n_max`` is the smallest module count whose mean daily harvest
    is at least twice the mean daily consumption.
    """
    p = problem
    T = p.len_data
    ndays = max(1, math.ceil(T / 24))
    pad = ndays * 24 - T
    use = np.pad(p.consumption, (0, pad)).reshape(ndays, 24).sum(axis=1)
    gain = np.pad(p.harvest_per_module, (0, pad)).reshape(ndays, 24).sum(axis=1)
    m_max = max(1, math.ceil(2.0 * use.max() / ((1.0 - p.dod_floor) * p.battery_capacity_cb)))
    mean_gain, mean_use = gain.mean(), use.mean()
    n_max = math.ceil(2.0 * mean_use / mean_gain) if mean_gain > 0 else 0
    return SearchBounds(int(n_max), int(m_max))


@dataclass
class SizingSolution:
    n: int
    m: int
    total_cost: float
    outage_hours: int
    trace: BatteryTrace | None = None
    method: str = ""
    stats: dict = field(default_factory=dict)

    def to_dict(self, with_trace=False):
        d = {
            "n": self.n,
            "m": self.m,
            "total_cost": self.total_cost,
            "outage_hours": self.outage_hours,
            "method": self.method,
            "stats": self.stats,
        }
        if with_trace and self.trace is not None:
            d["trace"] = self.trace.to_dict()
        return d

    @classmethod
    def from_dict(cls, d):
        for k in ("n", "m", "total_cost", "outage_hours"):
            if k not in d:
                raise SchemaError(k)
        return cls(int(d["n"]), int(d["m"]), float(d["total_cost"]), int(d["outage_hours"]),
                   None, d.get("method", ""), d.get("stats", {}))
