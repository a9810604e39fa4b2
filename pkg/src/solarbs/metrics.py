"""Forecast error metrics and the sizing cost difference."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from .errors import AlignmentError, DataError, DomainError

COLUMNS = ("nrmse_hourly", "rmse_hourly", "rmse_daily", "mae_daily", "me_daily", "mpe_daily")
HEADERS = ("nRMSE(H) %", "RMSE(H) W", "RMSE(D) W", "MAE(D) W", "ME(D) W", "MPE(D) %")


@dataclass
class ErrorReport:
    nrmse_hourly: float
    rmse_hourly: float
    rmse_daily: float
    mae_daily: float
    me_daily: float
    mpe_daily: float

    def to_dict(self):
        return asdict(self)

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, d):
        return cls(**{k: float(d[k]) for k in COLUMNS})


def nrmse(actual, predicted):
    """Hourly RMSE over the range of ``actual``, in percent."""
    a = np.asarray(actual, dtype=np.float64)
    p = np.asarray(predicted, dtype=np.float64)
    if a.shape != p.shape:
        raise AlignmentError(f"length mismatch: {a.shape} vs {p.shape}")
    span = a.max() - a.min()
    if span <= 0:
        raise DataError("nRMSE undefined: actual series has zero range")
    return float(np.sqrt(np.mean((p - a) ** 2)) / span * 100.0)


def error_report(actual, predicted):
    """Hourly and daily error metrics. Errors are ``predicted - actual``;
    MPE skips days whose actual energy is zero."""
    a = np.asarray(actual, dtype=np.float64)
    p = np.asarray(predicted, dtype=np.float64)
    if a.shape != p.shape:
        raise AlignmentError(f"length mismatch: {a.shape} vs {p.shape}")
    if a.size % 24:
        raise AlignmentError("daily metrics need a whole number of days")
    err = p - a
    da = a.reshape(-1, 24).sum(axis=1)
    dp = p.reshape(-1, 24).sum(axis=1)
    derr = dp - da
    nz = da != 0
    mpe = float(np.mean(derr[nz] / da[nz]) * 100.0) if nz.any() else 0.0
    return ErrorReport(
        nrmse_hourly=nrmse(a, p),
        rmse_hourly=float(np.sqrt(np.mean(err ** 2))),
        rmse_daily=float(np.sqrt(np.mean(derr ** 2))),
        mae_daily=float(np.mean(np.abs(derr))),
        me_daily=float(np.mean(derr)),
        mpe_daily=mpe,
    )


def cost_difference(candidate_cost, truth_cost):
    """``|candidate - truth| / truth`` in percent."""
    if truth_cost <= 0:
        raise DomainError("truth cost must be positive")
    return abs(candidate_cost - truth_cost) / truth_cost * 100.0


def format_table(rows, headers, floatfmt="{:.3f}"):
    """Aligned plain-text table; ``rows`` are sequences of cells."""
    cells = [[c if isinstance(c, str) else floatfmt.format(c) for c in r] for r in rows]
    widths = [max(len(h), *(len(r[i]) for r in cells)) if cells else len(h) for i, h in enumerate(headers)]
    line = lambda r: "  ".join(c.rjust(w) if j else c.ljust(w) for j, (c, w) in enumerate(zip(r, widths)))
    out = [line(headers), "  ".join("-" * w for w in widths)]
    out += [line(r) for r in cells]
    return "\n".join(out) + "\n"


def report_table(reports):
    """Table-II-style text table from ``{method: ErrorReport}``."""
    rows = [[name, *(getattr(r, k) for k in COLUMNS)] for name, r in reports.items()]
    return format_table(rows, ("Method", *HEADERS))
