"""Macro base-station load and power consumption.

The power model is load dependent through the component efficiencies and
loss factors; an optional anchor rescales it so that the peak load draws a
fixed peak power (11.5 kW by default).
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, replace

import numpy as np
from scipy.signal import lfilter

from .errors import DomainError


@dataclass(frozen=True)
class PowerParams:
    p_tx: float = 500.0
    p_bb: float = 100.0
    p_rf: float = 100.0
    c: tuple = (0.75, 0.8, 0.8, 0.65, 0.15, 0.47)
    eps: tuple = (1e-7,) * 6
    n_sectors: int = 3
    devices_per_antenna: float = 1e4
    peak_power_anchor: float | None = 11500.0
    peak_load: float = 14000.0

    def __post_init__(self):
        if len(self.c) != 6 or len(self.eps) != 6:
            raise DomainError("c and eps need six entries each")
        if not all(0.0 < ci < 1.0 for ci in self.c):
            raise DomainError("every c_i must lie in (0, 1)")
        if any(e < 0 for e in self.eps):
            raise DomainError("eps_i must be >= 0")
        if self.n_sectors < 1:
            raise DomainError("n_sectors must be >= 1")

    def raw(self):
        """Same parameters with the peak anchor switched off."""
        return replace(self, peak_power_anchor=None)

    def to_dict(self):
        d = asdict(self)
        d["c"] = list(self.c)
        d["eps"] = list(self.eps)
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        for k in ("c", "eps"):
            if k in d:
                d[k] = tuple(float(x) for x in d[k])
        return cls(**d)


def default_params_json(indent=2):
    """JSON config block pre-filled with the default constants."""
    return json.dumps(PowerParams().to_dict(), indent=indent)


def _raw_power(n, p):
    n = np.asarray(n, dtype=np.float64)
    if np.any(n < 0):
        raise DomainError("connection count must be >= 0")
    c, e = p.c, p.eps
    eta = [c[i] - e[i] * n for i in range(3)]
    keep = [1.0 - (c[i] + e[i] * n) for i in range(3, 6)]
    if any(np.any(x <= 0) for x in eta + keep):
        raise DomainError(
            "efficiency or loss factor left (0, 1) at this load; parameters out of validity range"
        )
    n_tx = n / p.devices_per_antenna
    num = p.n_sectors * n_tx * (p.p_tx / eta[0] + p.p_bb / eta[1] + p.p_rf / eta[2])
    return num / (keep[0] * keep[1] * keep[2])


def base_station_power(n, params=PowerParams()):
    """Power draw (W) at ``n`` active connections (scalar or array)."""
    p = _raw_power(n, params)
    if params.peak_power_anchor is not None:
        p = p * (params.peak_power_anchor / _raw_power(params.peak_load, params))
    return float(p) if np.ndim(p) == 0 else p


@dataclass
class TrafficProfile:
    counts: np.ndarray
    peak_load: int

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if np.any(self.counts < 0) or np.any(self.counts > self.peak_load):
            raise DomainError("connection counts must lie in [0, peak_load]")

    def __len__(self):
        return len(self.counts)


def synth_traffic(hours, peak_load=14000, seed=0, start_weekday=5):
    """Diurnal connection-count profile with weekday/weekend modulation.

    ``start_weekday`` is the weekday (Mon=0) of hour 0; 2000-01-01 was a
    Saturday. The maximum of the returned profile equals ``peak_load``.
    """
    if hours < 24:
        raise ValueError("hours must be >= 24")
    rng = np.random.default_rng(seed)
    t = np.arange(hours)
    hod = t % 24
    dow = (start_weekday + t // 24) % 7
    # trough near 03:00, broad afternoon peak
    shape = 0.18 + 0.82 * (0.5 - 0.5 * np.cos(2 * np.pi * (hod - 3) / 24.0)) ** 1.4
    weekly = np.where(dow >= 5, 0.85, 1.0)
    eps = rng.standard_normal(hours) * 0.06
    noise = np.exp(np.clip(lfilter([1.0], [1.0, -0.7], eps), -0.25, 0.25))
    x = shape * weekly * noise
    counts = np.round(peak_load * x / x.max()).astype(np.int64)
    return TrafficProfile(np.clip(counts, 0, peak_load), int(peak_load))


def consumption_series(profile, params=PowerParams()):
    """Hourly energy draw (Wh) for a traffic profile (1 h steps, so W == Wh)."""
    counts = profile.counts if isinstance(profile, TrafficProfile) else np.asarray(profile)
    return np.asarray(base_station_power(counts, params), dtype=np.float64).reshape(np.shape(counts))
