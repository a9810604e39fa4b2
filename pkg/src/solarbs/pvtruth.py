"""PVWatts-style ground truth: sun position, plane-of-array irradiance, DC output.

Isotropic-sky transposition, NOCT cell temperature and a linear
temperature-derated DC model. No inverter, so energy stays on the DC side.
"""

from __future__ import annotations

import csv
import datetime as _dt
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError
from .weather import format_timestamps, parse_timestamps

#: DC rating of the single module used for sizing (W)
MODULE_RATING_W = 430.0
#: reference array rating used for forecasting (W)
ARRAY_RATING_W = 48940.0


@dataclass(frozen=True)
class PanelSpec:
    rated_power_stc: float = MODULE_RATING_W
    tilt: float = 30.0
    azimuth: float = 180.0
    gamma: float = -0.0037
    noct: float = 45.0

    def __post_init__(self):
        if not self.rated_power_stc > 0:
            raise DataError("rated_power_stc must be > 0")
        if not 0.0 <= self.tilt <= 90.0:
            raise DataError("tilt must lie in [0, 90]")
        if not -1.0 < self.gamma < 0.0:
            raise DataError("gamma must lie in (-1, 0)")

    @classmethod
    def for_location(cls, location, rated_power_stc=MODULE_RATING_W, **kw):
        """Fixed-tilt panel facing the equator with tilt equal to |latitude|."""
        kw.setdefault("tilt", abs(location.latitude))
        kw.setdefault("azimuth", 180.0 if location.latitude >= 0 else 0.0)
        return cls(rated_power_stc=rated_power_stc, **kw)

    def scaled(self, rated_power_stc):
        return PanelSpec(rated_power_stc, self.tilt, self.azimuth, self.gamma, self.noct)

    def to_dict(self):
        return {k: getattr(self, k) for k in ("rated_power_stc", "tilt", "azimuth", "gamma", "noct")}


@dataclass(frozen=True)
class SolarPosition:
    zenith: np.ndarray | float
    azimuth: np.ndarray | float


def _to_utc_datetime64(location, times):
    if isinstance(times, _dt.datetime):
        if times.tzinfo is not None:
            t = times.astimezone(_dt.timezone.utc).replace(tzinfo=None)
            return np.datetime64(t, "s")
        times = np.datetime64(times, "s")
    local = np.asarray(times, dtype="datetime64[s]")
    return local - np.timedelta64(int(round(location.timezone_offset * 3600)), "s")


def solar_position(location, times):
    """Sun zenith and azimuth (degrees, azimuth clockwise from north).

    ``times`` is an aware ``datetime`` or naive ``datetime64`` value(s) in
    the location's standard time. Uses the NOAA spreadsheet formulation
    (Meeus low-precision series); no refraction correction.
    """
    utc = _to_utc_datetime64(location, times)
    secs = utc.astype("datetime64[s]").astype(np.int64).astype(np.float64)
    jd = secs / 86400.0 + 2440587.5
    T = (jd - 2451545.0) / 36525.0

    L0 = np.mod(280.46646 + T * (36000.76983 + T * 0.0003032), 360.0)
    M = np.radians(357.52911 + T * (35999.05029 - 0.0001537 * T))
    e = 0.016708634 - T * (0.000042037 + 0.0000001267 * T)
    C = (
        np.sin(M) * (1.914602 - T * (0.004817 + 0.000014 * T))
        + np.sin(2 * M) * (0.019993 - 0.000101 * T)
        + np.sin(3 * M) * 0.000289
    )
    omega = np.radians(125.04 - 1934.136 * T)
    lam = np.radians(L0 + C - 0.00569 - 0.00478 * np.sin(omega))
    eps0 = 23.0 + (26.0 + (21.448 - T * (46.815 + T * (0.00059 - T * 0.001813))) / 60.0) / 60.0
    eps = np.radians(eps0 + 0.00256 * np.cos(omega))
    decl = np.arcsin(np.sin(eps) * np.sin(lam))

    y = np.tan(eps / 2.0) ** 2
    L0r = np.radians(L0)
    eot = 4.0 * np.degrees(
        y * np.sin(2 * L0r)
        - 2 * e * np.sin(M)
        + 4 * e * y * np.sin(M) * np.cos(2 * L0r)
        - 0.5 * y * y * np.sin(4 * L0r)
        - 1.25 * e * e * np.sin(2 * M)
    )
    utc_minutes = np.mod(secs, 86400.0) / 60.0
    true_solar = np.mod(utc_minutes + eot + 4.0 * location.longitude, 1440.0)
    ha = np.radians(true_solar / 4.0 - 180.0)

    lat = np.radians(location.latitude)
    cosz = np.sin(lat) * np.sin(decl) + np.cos(lat) * np.cos(decl) * np.cos(ha)
    zenith = np.degrees(np.arccos(np.clip(cosz, -1.0, 1.0)))
    az = np.degrees(np.arctan2(np.sin(ha), np.cos(ha) * np.sin(lat) - np.tan(decl) * np.cos(lat)))
    azimuth = np.mod(az + 180.0, 360.0)
    if np.ndim(zenith) == 0:
        return SolarPosition(float(zenith), float(azimuth))
    return SolarPosition(zenith, azimuth)


def angle_of_incidence_cos(pos, panel):
    z = np.radians(pos.zenith)
    t = np.radians(panel.tilt)
    return np.cos(z) * np.cos(t) + np.sin(z) * np.sin(t) * np.cos(np.radians(pos.azimuth - panel.azimuth))


def transpose_isotropic(dni, dhi, ghi, albedo, pos, panel):
    """Isotropic-sky plane-of-array irradiance (W/m²), never negative."""
    cos_aoi = angle_of_incidence_cos(pos, panel)
    ct = np.cos(np.radians(panel.tilt))
    poa = (
        np.asarray(dni) * np.maximum(0.0, cos_aoi)
        + np.asarray(dhi) * (1.0 + ct) / 2.0
        + np.asarray(ghi) * np.asarray(albedo) * (1.0 - ct) / 2.0
    )
    return np.maximum(poa, 0.0)


def poa_irradiance(rec, pos, panel):
    """POA irradiance for a record: any mapping with dni, dhi, ghi and
    surface_albedo entries (scalars or aligned arrays)."""
    return transpose_isotropic(rec["dni"], rec["dhi"], rec["ghi"], rec["surface_albedo"], pos, panel)


def cell_temperature(poa, ambient, panel):
    return np.asarray(ambient) + np.asarray(poa) / 800.0 * (panel.noct - 20.0)


def dc_power(poa, t_cell, panel):
    p = panel.rated_power_stc * np.asarray(poa) / 1000.0 * (1.0 + panel.gamma * (np.asarray(t_cell) - 25.0))
    return np.maximum(p, 0.0)


def harvest_series(series, location, panel):
    """Hourly DC energy (Wh) of ``panel`` for every hour of ``series``."""
    c = series.columns
    pos = solar_position(location, series.timestamps)
    poa = poa_irradiance(c, pos, panel)
    t_cell = cell_temperature(poa, c["temperature"], panel)
    wh = dc_power(poa, t_cell, panel)
    return np.where(c["ghi"] > 0, wh, 0.0)


# ------------------------------------------------------------ energy CSV

def write_energy_csv(path, timestamps, tz_offset, wh):
    """Write a ``timestamp,wh`` series."""
    wh = np.asarray(wh, dtype=np.float64)
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["timestamp", "wh"])
        for s, v in zip(format_timestamps(timestamps, tz_offset), wh):
            w.writerow([s, repr(float(v))])


def read_energy_csv(path):
    """Return ``(timestamps, tz_offset, wh)``."""
    with Path(path).open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][:2] != ["timestamp", "wh"]:
        raise DataError(f"{path}: expected header 'timestamp,wh'")
    ts, tz = parse_timestamps([r[0] for r in rows[1:]])
    return ts, tz, np.array([float(r[1]) for r in rows[1:]])
