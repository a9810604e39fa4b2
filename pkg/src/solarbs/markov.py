"""Three-state first-order Markov baseline over daily harvest regimes.

Days are labelled 0 (low), 1 (medium) or 2 (high energy) by the terciles of
daily energy within their calendar month. Each month has its own 3x3
transition matrix and a mean 24-hour profile per state; forecasts are the
expected profile under the evolved state distribution.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError, InsufficientDataError, SchemaError, StateError
from .weather import DAY_MONTH

N_STATES = 3


@dataclass
class MarkovModel:
    transitions: np.ndarray | None = None   # (12, 3, 3), row-stochastic
    profiles: np.ndarray | None = None      # (12, 3, 24) Wh
    thresholds: np.ndarray | None = None    # (12, 2) daily Wh

    @property
    def fitted(self):
        return self.transitions is not None

    def classify(self, daily_energy, month):
        """State of a day with total ``daily_energy`` in calendar ``month``."""
        if not self.fitted:
            raise StateError("Markov model is not fitted")
        t1, t2 = self.thresholds[month - 1]
        e = np.asarray(daily_energy)
        return np.where(e <= t1, 0, np.where(e <= t2, 1, 2))

    def to_dict(self):
        if not self.fitted:
            raise StateError("Markov model is not fitted")
        return {
            "transitions": self.transitions.tolist(),
            "profiles": self.profiles.tolist(),
            "thresholds": self.thresholds.tolist(),
        }

    @classmethod
    def from_dict(cls, d):
        for k in ("transitions", "profiles", "thresholds"):
            if k not in d:
                raise SchemaError(k)
        return cls(np.asarray(d["transitions"], float), np.asarray(d["profiles"], float),
                   np.asarray(d["thresholds"], float))

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=1), encoding="utf-8")

    @classmethod
    def load(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def day_months(n_days, first_day_of_year=0):
    """Calendar month of each day on a 365-day calendar."""
    doy = (first_day_of_year + np.arange(n_days)) % 365
    return DAY_MONTH[doy]


def fit_markov(harvest, years=None, day_month=None):
    """Fit per-month transition matrices, tercile thresholds and state profiles.

    ``harvest`` must hold whole days. Months come from ``day_month`` (one
    entry per day) or, by default, from a 365-day calendar starting Jan 1.
    Transition counts get +1 Laplace smoothing.
    """
    h = np.asarray(harvest, dtype=np.float64)
    if h.size % 24:
        raise DataError("harvest length must be a whole number of days")
    if years is not None and h.size != 8760 * years:
        raise DataError(f"expected {8760 * years} hours for {years} years, got {h.size}")
    days = h.reshape(-1, 24)
    energy = days.sum(axis=1)
    months = day_months(len(days)) if day_month is None else np.asarray(day_month)
    if len(months) != len(days):
        raise DataError("day_month must have one entry per day")

    trans = np.ones((12, N_STATES, N_STATES))
    profiles = np.zeros((12, N_STATES, 24))
    thresholds = np.zeros((12, 2))
    states = np.zeros(len(days), dtype=int)
    for mo in range(1, 13):
        idx = np.flatnonzero(months == mo)
        if idx.size < 2:
            raise InsufficientDataError(f"month {mo} has {idx.size} day(s); need at least 2")
        t1, t2 = np.percentile(energy[idx], [100 / 3, 200 / 3])
        thresholds[mo - 1] = (t1, t2)
        s = np.where(energy[idx] <= t1, 0, np.where(energy[idx] <= t2, 1, 2))
        states[idx] = s
        month_mean = days[idx].mean(axis=0)
        for k in range(N_STATES):
            sel = idx[s == k]
            profiles[mo - 1, k] = days[sel].mean(axis=0) if sel.size else month_mean

    same_month = months[1:] == months[:-1]
    for a, b, mo in zip(states[:-1][same_month], states[1:][same_month], months[1:][same_month]):
        trans[mo - 1, a, b] += 1
    trans /= trans.sum(axis=2, keepdims=True)
    return MarkovModel(trans, profiles, thresholds)


def predict_markov(model, prev_day_state, month, horizon_days=1):
    """Expected hourly harvest (Wh) for the ``horizon_days`` days after a
    day in state ``prev_day_state``, using ``month``'s chain."""
    if not model.fitted:
        raise StateError("Markov model is not fitted")
    P = model.transitions[month - 1]
    prof = model.profiles[month - 1]
    p = np.zeros(N_STATES)
    p[prev_day_state] = 1.0
    out = np.empty((horizon_days, 24))
    for d in range(horizon_days):
        p = p @ P
        out[d] = p @ prof
    return out.ravel()


def predict_day_ahead(model, harvest_history, harvest_target, first_day_of_year):
    """Rolling one-day-ahead forecast over ``harvest_target``.

    Each day is predicted from the observed state of the day before; the
    first uses the last day of ``harvest_history``.
    """
    prev = np.asarray(harvest_history, dtype=np.float64)[-24:]
    target = np.asarray(harvest_target, dtype=np.float64).reshape(-1, 24)
    months = day_months(len(target) + 1, first_day_of_year - 1)
    out = np.empty_like(target)
    prev_e = prev.sum()
    for d in range(len(target)):
        state = int(model.classify(prev_e, months[d]))
        out[d] = predict_markov(model, state, months[d + 1], 1)
        prev_e = target[d].sum()
    return out.ravel()
