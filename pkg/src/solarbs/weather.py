"""Hourly weather series: PSM3 ingestion, canonical CSV, synthetic weather, splits.

A year is always 8760 rows. Feb 29 is dropped on ingestion and never
generated, so year ``k`` of a series starts at row ``8760 * k``.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.signal import lfilter

from .errors import (
    ContinuityError,
    EmptyInputError,
    ParseError,
    SchemaError,
    SizingError,
    DataError,
)

HOURS_PER_YEAR = 8760

#: Column order of :func:`feature_matrix` (and of the canonical CSV after the timestamp).
FEATURES = (
    "month",
    "hour",
    "dni",
    "dhi",
    "ghi",
    "dew_point",
    "temperature",
    "pressure",
    "humidity",
    "wind_direction",
    "wind_speed",
    "surface_albedo",
)
DHI_INDEX = FEATURES.index("dhi")

# PSM3 header name for each feature
PSM3_COLUMNS = {
    "dni": "DNI",
    "dhi": "DHI",
    "ghi": "GHI",
    "dew_point": "Dew Point",
    "temperature": "Temperature",
    "pressure": "Pressure",
    "humidity": "Relative Humidity",
    "wind_direction": "Wind Direction",
    "wind_speed": "Wind Speed",
    "surface_albedo": "Surface Albedo",
}

_DAYS_IN_MONTH = np.array([31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31])
_MONTH_START = np.concatenate([[0], np.cumsum(_DAYS_IN_MONTH)[:-1]])
#: month (1-12) of each day of a 365-day year
DAY_MONTH = np.repeat(np.arange(1, 13), _DAYS_IN_MONTH)


@dataclass(frozen=True)
class Location:
    latitude: float
    longitude: float
    timezone_offset: float = 0.0
    region_label: str = ""

    def __post_init__(self):
        if not -90.0 <= self.latitude <= 90.0:
            raise DataError(f"latitude out of range: {self.latitude}")
        if not -180.0 <= self.longitude <= 180.0:
            raise DataError(f"longitude out of range: {self.longitude}")

    def to_dict(self):
        return {
            "latitude": self.latitude,
            "longitude": self.longitude,
            "timezone_offset": self.timezone_offset,
            "region_label": self.region_label,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            float(d["latitude"]),
            float(d["longitude"]),
            float(d.get("timezone_offset", 0.0)),
            str(d.get("region_label", "")),
        )


@dataclass
class WeatherSeries:
    """Column-oriented hourly weather.

    ``timestamps`` are naive ``datetime64[s]`` in local standard time;
    ``tz_offset`` (hours east of UTC) makes them offset-aware.
    """

    timestamps: np.ndarray
    columns: dict = field(default_factory=dict)
    tz_offset: float = 0.0

    def __post_init__(self):
        self.timestamps = np.asarray(self.timestamps, dtype="datetime64[s]")
        cols = {}
        for name in FEATURES:
            if name not in self.columns:
                raise SchemaError(name)
            dtype = np.int64 if name in ("month", "hour") else np.float64
            cols[name] = np.asarray(self.columns[name], dtype=dtype)
            if cols[name].shape != self.timestamps.shape:
                raise DataError(f"column {name!r} has wrong length")
        self.columns = cols

    def __len__(self):
        return len(self.timestamps)

    def __getitem__(self, key):
        if not isinstance(key, slice):
            raise TypeError("WeatherSeries only supports slicing")
        return WeatherSeries(
            self.timestamps[key],
            {k: v[key] for k, v in self.columns.items()},
            self.tz_offset,
        )

    def __getattr__(self, name):
        cols = self.__dict__.get("columns", {})
        if name in cols:
            return cols[name]
        raise AttributeError(name)

    def __eq__(self, other):
        if not isinstance(other, WeatherSeries):
            return NotImplemented
        return (
            self.tz_offset == other.tz_offset
            and np.array_equal(self.timestamps, other.timestamps)
            and all(np.array_equal(self.columns[k], other.columns[k]) for k in FEATURES)
        )

    @property
    def utc_timestamps(self):
        return self.timestamps - np.timedelta64(int(round(self.tz_offset * 3600)), "s")

    @classmethod
    def concat(cls, parts):
        parts = list(parts)
        if not parts:
            raise EmptyInputError("nothing to concatenate")
        return cls(
            np.concatenate([p.timestamps for p in parts]),
            {k: np.concatenate([p.columns[k] for p in parts]) for k in FEATURES},
            parts[0].tz_offset,
        )

    def validate(self):
        """Raise :class:`DataError` if any record invariant is violated."""
        c = self.columns
        for name in ("dni", "dhi", "ghi"):
            bad = np.flatnonzero(~(c[name] >= 0))
            if bad.size:
                raise ParseError(int(bad[0]), f"{name} must be >= 0")
        bad = np.flatnonzero((c["dni"] == 0) & (c["dhi"] == 0) & (c["ghi"] != 0))
        if bad.size:
            raise ParseError(int(bad[0]), "ghi must be 0 when dni and dhi are 0")
        bad = np.flatnonzero(~((c["surface_albedo"] >= 0) & (c["surface_albedo"] <= 1)))
        if bad.size:
            raise ParseError(int(bad[0]), "surface_albedo outside [0, 1]")
        bad = np.flatnonzero(~((c["humidity"] >= 0) & (c["humidity"] <= 100)))
        if bad.size:
            raise ParseError(int(bad[0]), "humidity outside [0, 100]")
        bad = np.flatnonzero((c["month"] < 1) | (c["month"] > 12))
        if bad.size:
            raise ParseError(int(bad[0]), "month outside 1..12")
        bad = np.flatnonzero((c["hour"] < 0) | (c["hour"] > 23))
        if bad.size:
            raise ParseError(int(bad[0]), "hour outside 0..23")
        _check_continuity(self.timestamps)
        return self


def _noleap_hour_index(ts):
    """Hours since 1970-01-01 on a 365-day calendar (Feb 29 must be absent)."""
    ts = np.asarray(ts, dtype="datetime64[s]")
    years = ts.astype("datetime64[Y]")
    month = (ts.astype("datetime64[M]") - years.astype("datetime64[M]")).astype(np.int64)
    day = (ts.astype("datetime64[D]") - ts.astype("datetime64[M]").astype("datetime64[D]")).astype(np.int64)
    hour = (ts - ts.astype("datetime64[D]")).astype("timedelta64[h]").astype(np.int64)
    doy = _MONTH_START[month] + day
    return years.astype(np.int64) * HOURS_PER_YEAR + doy * 24 + hour


def _check_continuity(ts):
    if len(ts) < 2:
        return
    secs = (ts - ts.astype("datetime64[h]")).astype(np.int64)
    idx = _noleap_hour_index(ts)
    steps = np.diff(idx)
    bad = np.flatnonzero((steps != 1) | (np.diff(secs) != 0))
    if bad.size:
        i = int(bad[0])
        raise ContinuityError(
            f"non-hourly step between rows {i} and {i + 1}: {ts[i]} -> {ts[i + 1]}"
        )


def _is_leap_day(ts):
    ts = np.asarray(ts, dtype="datetime64[s]")
    month = (ts.astype("datetime64[M]") - ts.astype("datetime64[Y]").astype("datetime64[M]")).astype(np.int64)
    day = (ts.astype("datetime64[D]") - ts.astype("datetime64[M]").astype("datetime64[D]")).astype(np.int64)
    return (month == 1) & (day == 28)


def noleap_timestamps(start_year, years, minute=0):
    """Hourly local timestamps covering ``years`` 365-day years (no Feb 29)."""
    out = []
    hours = np.arange(HOURS_PER_YEAR, dtype=np.int64)
    doy = hours // 24
    for y in range(start_year, start_year + years):
        base = np.datetime64(f"{y:04d}-01-01T00:00:00", "s")
        leap = (y % 4 == 0 and y % 100 != 0) or y % 400 == 0
        shift_days = doy + (leap & (doy >= 59))
        out.append(
            base
            + shift_days.astype("timedelta64[D]")
            + (hours % 24).astype("timedelta64[h]")
            + np.timedelta64(minute, "m")
        )
    return np.concatenate(out) if out else np.array([], dtype="datetime64[s]")


def _month_hour(ts):
    ts = np.asarray(ts, dtype="datetime64[s]")
    month = (ts.astype("datetime64[M]") - ts.astype("datetime64[Y]").astype("datetime64[M]")).astype(np.int64) + 1
    hour = (ts - ts.astype("datetime64[D]")).astype("timedelta64[h]").astype(np.int64)
    return month, hour


# --------------------------------------------------------------------- PSM3

def _num(cell, row, col):
    try:
        v = float(cell)
    except (TypeError, ValueError):
        raise ParseError(row, f"non-numeric value {cell!r} in column {col!r}") from None
    if not np.isfinite(v):
        raise ParseError(row, f"non-finite value {cell!r} in column {col!r}")
    return v


def parse_psm3_csv(path):
    """Read an NSRDB PSM3-style CSV.

    Layout: a metadata-names row, a metadata-values row (must include
    Latitude, Longitude and Time Zone), the data header row, then hourly
    rows. Returns ``(Location, WeatherSeries)``; Feb 29 rows are dropped.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 3:
        raise SchemaError("header", f"{path}: expected two metadata rows and a header row")

    meta = {k.strip(): v.strip() for k, v in zip(rows[0], rows[1])}
    for key in ("Latitude", "Longitude", "Time Zone"):
        if key not in meta:
            raise SchemaError(key)
    label = meta.get("State") or meta.get("Location ID") or ""
    location = Location(
        _num(meta["Latitude"], 1, "Latitude"),
        _num(meta["Longitude"], 1, "Longitude"),
        _num(meta["Time Zone"], 1, "Time Zone"),
        label,
    )

    header = [h.strip() for h in rows[2]]
    col = {h: i for i, h in enumerate(header)}
    for name in ("Year", "Month", "Day", "Hour", *PSM3_COLUMNS.values()):
        if name not in col:
            raise SchemaError(name)

    data = [r for r in rows[3:] if any(c.strip() for c in r)]
    n = len(data)
    raw = {name: np.empty(n) for name in PSM3_COLUMNS}
    stamp = np.empty(n, dtype="datetime64[s]")
    for i, r in enumerate(data):
        if len(r) < len(header):
            raise ParseError(i, f"expected {len(header)} cells, got {len(r)}")
        y, mo, d, h = (int(_num(r[col[k]], i, k)) for k in ("Year", "Month", "Day", "Hour"))
        mi = int(_num(r[col["Minute"]], i, "Minute")) if "Minute" in col else 0
        try:
            stamp[i] = np.datetime64(f"{y:04d}-{mo:02d}-{d:02d}T{h:02d}:{mi:02d}:00", "s")
        except ValueError:
            raise ParseError(i, f"invalid date {y}-{mo}-{d} {h}:{mi}") from None
        for name, src in PSM3_COLUMNS.items():
            raw[name][i] = _num(r[col[src]], i, src)

    keep = ~_is_leap_day(stamp)
    stamp = stamp[keep]
    raw = {k: v[keep] for k, v in raw.items()}
    order = np.argsort(stamp, kind="stable")
    if not np.array_equal(order, np.arange(len(order))):
        stamp = stamp[order]
        raw = {k: v[order] for k, v in raw.items()}
    month, hour = _month_hour(stamp)
    series = WeatherSeries(stamp, {"month": month, "hour": hour, **raw}, location.timezone_offset)
    return location, series.validate()


def write_psm3_csv(path, location, series):
    """Write a minimal PSM3-layout file (used for fixtures and round trips)."""
    names = ["Source", "Latitude", "Longitude", "Time Zone", "State"]
    values = ["solarbs", repr(location.latitude), repr(location.longitude),
              repr(location.timezone_offset), location.region_label]
    header = ["Year", "Month", "Day", "Hour", "Minute", *PSM3_COLUMNS.values()]
    ts = series.timestamps
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        w.writerow(values)
        w.writerow(header)
        for i in range(len(series)):
            t = ts[i].astype(object)
            w.writerow([t.year, t.month, t.day, t.hour, t.minute,
                        *(repr(float(series.columns[k][i])) for k in PSM3_COLUMNS)])


# ---------------------------------------------------------------- canonical

def _fmt_offset(hours):
    sign = "-" if hours < 0 else "+"
    minutes = int(round(abs(hours) * 60))
    return f"{sign}{minutes // 60:02d}:{minutes % 60:02d}"


def format_timestamps(ts, tz_offset):
    suffix = _fmt_offset(tz_offset)
    return [str(t) + suffix for t in np.asarray(ts, dtype="datetime64[s]")]


def parse_timestamps(strings):
    """Parse ISO-8601 strings with a ``±HH:MM`` suffix into (local datetime64, offset)."""
    if not strings:
        return np.array([], dtype="datetime64[s]"), 0.0
    offsets = set()
    local = np.empty(len(strings), dtype="datetime64[s]")
    for i, s in enumerate(strings):
        s = s.strip()
        if len(s) < 7 or s[-6] not in "+-" or s[-3] != ":":
            raise ParseError(i, f"timestamp {s!r} lacks a UTC offset")
        try:
            local[i] = np.datetime64(s[:-6], "s")
        except ValueError:
            raise ParseError(i, f"bad timestamp {s!r}") from None
        offsets.add(s[-6:])
    if len(offsets) != 1:
        raise DataError("mixed UTC offsets in one series")
    off = offsets.pop()
    hours = int(off[1:3]) + int(off[4:6]) / 60
    return local, (-hours if off[0] == "-" else hours)


def to_canonical_csv(series):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["timestamp", *FEATURES])
    stamps = format_timestamps(series.timestamps, series.tz_offset)
    cols = [series.columns[k] for k in FEATURES]
    for i, s in enumerate(stamps):
        w.writerow([s, *(int(c[i]) if c.dtype.kind == "i" else repr(float(c[i])) for c in cols)])
    return buf.getvalue()


def write_canonical_csv(path, series):
    Path(path).write_text(to_canonical_csv(series), encoding="utf-8")


def read_canonical_csv(path):
    with Path(path).open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise SchemaError("timestamp", f"{path}: empty file")
    header = rows[0]
    for name in ("timestamp", *FEATURES):
        if name not in header:
            raise SchemaError(name)
    idx = {h: i for i, h in enumerate(header)}
    body = rows[1:]
    ts, tz = parse_timestamps([r[idx["timestamp"]] for r in body])
    cols = {}
    for name in FEATURES:
        j = idx[name]
        cols[name] = np.array([_num(r[j], i, name) for i, r in enumerate(body)])
    return WeatherSeries(ts, cols, tz).validate()


# ------------------------------------------------------------------- splits

@dataclass
class DatasetSplit:
    train: WeatherSeries
    validation: WeatherSeries
    test: WeatherSeries

    def bounds(self):
        """Row ranges ``(start, stop)`` of each part within the source series."""
        a = len(self.train)
        b = a + len(self.validation)
        return (0, a), (a, b), (b, b + len(self.test))


def split_chronological(series, train_years, val_years, test_years):
    years = (train_years, val_years, test_years)
    if min(years) < 0:
        raise ValueError("year counts must be non-negative")
    need = HOURS_PER_YEAR * sum(years)
    if len(series) < need:
        raise SizingError(f"split needs {need} hourly rows, series has {len(series)}")
    a = HOURS_PER_YEAR * train_years
    b = a + HOURS_PER_YEAR * val_years
    return DatasetSplit(series[:a], series[a:b], series[b:need])


def feature_matrix(series):
    """``(N, 12)`` float matrix with columns in :data:`FEATURES` order."""
    if len(series) == 0:
        raise EmptyInputError("feature_matrix needs a non-empty series")
    return np.column_stack([series.columns[k].astype(np.float64) for k in FEATURES])


# ---------------------------------------------------------------- synthetic

def _ar1(rng, n, phi, sigma=1.0):
    """Stationary AR(1) with unit marginal variance scaled by ``sigma``."""
    x0 = rng.standard_normal()
    eps = rng.standard_normal(n) * np.sqrt(1.0 - phi * phi)
    eps[0] = 0.0
    x, _ = lfilter([1.0], [1.0, -phi], eps, zi=[phi * x0])
    x[0] = x0
    return sigma * x


def synth_weather(location, years, seed, start_year=2000):
    """Deterministic synthetic hourly weather for ``years`` 365-day years.

    Clear-sky irradiance follows the sun (Haurwitz GHI) and is attenuated
    by a persistent cloudiness factor in [0, 1]; the diffuse fraction rises
    with cloudiness. Night hours carry exactly zero irradiance.
    """
    from .pvtruth import solar_position

    if years < 1:
        raise ValueError("years must be >= 1")
    rng = np.random.default_rng(seed)
    ts = noleap_timestamps(start_year, years)
    n = len(ts)
    month, hour = _month_hour(ts)
    doy = np.tile(np.arange(HOURS_PER_YEAR) // 24, years)
    season = np.cos(2 * np.pi * (doy - 196) / 365.0)  # +1 mid July, -1 mid January
    hemi = 1.0 if location.latitude >= 0 else -1.0

    pos = solar_position(location, ts)
    cosz = np.cos(np.radians(pos.zenith))
    up = cosz > 0.0
    cz = np.where(up, cosz, 1.0)
    ghi_clear = np.where(up, 1098.0 * cz * np.exp(-0.057 / cz), 0.0)

    # daily weather regime plus hourly wobble, mapped through a logistic
    daily = np.repeat(_ar1(rng, n // 24, 0.6), 24)
    hourly = _ar1(rng, n, 0.9, 0.6)
    cloud = 1.0 / (1.0 + np.exp(-(1.6 * daily + hourly - 0.6 + 0.3 * hemi * -season)))
    ghi = (1.0 - 0.75 * cloud) * ghi_clear
    fd = np.clip(0.12 + 0.8 * cloud, 0.0, 0.95)
    dhi = fd * ghi
    dni = np.where(up, (ghi - dhi) / cz, 0.0)
    ghi = dni * cosz * up + dhi  # exact closure GHI = DNI cos z + DHI

    diurnal = -np.cos(2 * np.pi * (hour - 3) / 24.0)
    lat_cool = 0.35 * (abs(location.latitude) - 35.0)
    temperature = (
        12.0 - lat_cool + 12.0 * hemi * season + 5.0 * diurnal * (1.0 - 0.5 * cloud)
        + _ar1(rng, n, 0.98, 3.0)
    )
    spread = np.clip(3.0 + 8.0 * (1.0 - cloud) + 0.5 * _ar1(rng, n, 0.9, 2.0), 0.2, None)
    dew_point = temperature - spread
    # Magnus formula
    def es(t):
        return 6.112 * np.exp(17.62 * t / (243.12 + t))
    humidity = np.clip(100.0 * es(dew_point) / es(temperature), 0.0, 100.0)
    pressure = 1000.0 + 8.0 * _ar1(rng, n, 0.995) - 4.0 * cloud
    wind_speed = np.abs(3.0 + 1.5 * cloud + _ar1(rng, n, 0.95, 1.8))
    wind_direction = np.mod(200.0 + np.cumsum(rng.standard_normal(n) * 8.0), 360.0)
    snow = np.clip(-hemi * season - 0.3, 0.0, None) * max(0.0, abs(location.latitude) - 30) / 15
    surface_albedo = np.clip(0.18 + 0.4 * snow + 0.02 * rng.standard_normal(n // 24).repeat(24), 0.05, 0.9)

    cols = {
        "month": month,
        "hour": hour,
        "dni": np.round(dni, 6),
        "dhi": np.round(dhi, 6),
        "ghi": None,
        "dew_point": np.round(dew_point, 3),
        "temperature": np.round(temperature, 3),
        "pressure": np.round(pressure, 3),
        "humidity": np.round(humidity, 3),
        "wind_direction": np.round(wind_direction, 2),
        "wind_speed": np.round(wind_speed, 3),
        "surface_albedo": np.round(surface_albedo, 4),
    }
    # recompute GHI from the rounded components so closure holds exactly at night
    cols["ghi"] = np.where(up, np.round(cols["dni"] * cosz + cols["dhi"], 6), 0.0)
    cols["dni"] = np.where(up, cols["dni"], 0.0)
    cols["dhi"] = np.where(up, cols["dhi"], 0.0)
    return WeatherSeries(ts, cols, location.timezone_offset).validate()
