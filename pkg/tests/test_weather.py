import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from solarbs.errors import ContinuityError, ParseError, SchemaError, SizingError
from solarbs.weather import (
    DHI_INDEX,
    FEATURES,
    HOURS_PER_YEAR,
    Location,
    WeatherSeries,
    feature_matrix,
    noleap_timestamps,
    parse_psm3_csv,
    read_canonical_csv,
    split_chronological,
    synth_weather,
    to_canonical_csv,
    write_canonical_csv,
    write_psm3_csv,
)

IOWA = Location(41.6, -93.6, -6.0, "IA")


@pytest.fixture(scope="module")
def one_year():
    return synth_weather(IOWA, 1, seed=3)


def _psm3_text(rows, meta=None):
    meta = meta or {"Source": "NSRDB", "Latitude": "41.6", "Longitude": "-93.6", "Time Zone": "-6", "State": "Iowa"}
    head = "Year,Month,Day,Hour,Minute,DNI,DHI,GHI,Dew Point,Temperature,Pressure,Relative Humidity,Wind Direction,Wind Speed,Surface Albedo"
    lines = [",".join(meta), ",".join(meta.values()), head]
    lines += rows
    return "\n".join(lines) + "\n"


def _row(y, mo, d, h, ghi="0"):
    return f"{y},{mo},{d},{h},30,0,0,{ghi},-3.1,1.5,990,80,200,3.2,0.2"


def test_psm3_metadata_and_length(tmp_path):
    p = tmp_path / "a.csv"
    p.write_text(_psm3_text([_row(2020, 1, 1, h) for h in range(24)]))
    loc, s = parse_psm3_csv(p)
    assert (loc.latitude, loc.longitude, loc.timezone_offset) == (41.6, -93.6, -6.0)
    assert loc.region_label == "Iowa"
    assert len(s) == 24
    assert np.all(np.diff(s.timestamps).astype(int) == 3600)
    assert s.hour.tolist() == list(range(24))


def test_psm3_empty_ghi_is_parse_error_at_row(tmp_path):
    rows = [_row(2020, 1, 1, h) for h in range(5)]
    rows[3] = _row(2020, 1, 1, 3, ghi="")
    p = tmp_path / "bad.csv"
    p.write_text(_psm3_text(rows))
    with pytest.raises(ParseError) as ei:
        parse_psm3_csv(p)
    assert ei.value.row == 3


def test_psm3_missing_column_names_field(tmp_path):
    p = tmp_path / "x.csv"
    p.write_text(_psm3_text([_row(2020, 1, 1, 0)]).replace("Surface Albedo", "Albedo"))
    with pytest.raises(SchemaError) as ei:
        parse_psm3_csv(p)
    assert ei.value.field == "Surface Albedo"


def test_psm3_drops_leap_day(tmp_path):
    rows = [_row(2020, 2, d, h) for d in (28, 29) for h in range(24)] + [_row(2020, 3, 1, h) for h in range(24)]
    p = tmp_path / "leap.csv"
    p.write_text(_psm3_text(rows))
    _, s = parse_psm3_csv(p)
    assert len(s) == 48
    assert str(s.timestamps[24])[:10] == "2020-03-01"


def test_gap_is_continuity_error(tmp_path):
    rows = [_row(2020, 1, 1, h) for h in (0, 1, 3)]
    p = tmp_path / "gap.csv"
    p.write_text(_psm3_text(rows))
    with pytest.raises(ContinuityError):
        parse_psm3_csv(p)


def test_psm3_canonical_round_trip(tmp_path, one_year):
    s = one_year[: 24 * 20]
    write_psm3_csv(tmp_path / "w.csv", IOWA, s)
    loc, parsed = parse_psm3_csv(tmp_path / "w.csv")
    assert loc.latitude == IOWA.latitude
    write_canonical_csv(tmp_path / "c.csv", parsed)
    again = read_canonical_csv(tmp_path / "c.csv")
    assert again == parsed
    assert to_canonical_csv(again) == to_canonical_csv(parsed)


def test_canonical_header_and_offset(one_year):
    text = to_canonical_csv(one_year[:2])
    head, first = text.splitlines()[:2]
    assert head.split(",") == ["timestamp", *FEATURES]
    assert first.startswith("2000-01-01T00:00:00-06:00,1,0,")


def test_noleap_calendar():
    ts = noleap_timestamps(2020, 1)
    assert len(ts) == HOURS_PER_YEAR
    assert not any(str(t).startswith("2020-02-29") for t in ts[1300:1500])
    assert str(ts[59 * 24])[:10] == "2020-03-01"


@pytest.mark.parametrize("years,parts,expect", [
    (21, (18, 2, 1), (18, 2, 1)),
    (12, (8, 0, 4), (8, 0, 4)),
])
def test_split_sizes(years, parts, expect):
    ts = noleap_timestamps(2000, years)
    s = WeatherSeries(ts, {k: np.zeros(len(ts)) + (1 if k == "month" else 0) for k in FEATURES})
    sp = split_chronological(s, *parts)
    assert tuple(len(p) // HOURS_PER_YEAR for p in (sp.train, sp.validation, sp.test)) == expect
    joined = WeatherSeries.concat([p for p in (sp.train, sp.validation, sp.test) if len(p)])
    assert joined == s[: HOURS_PER_YEAR * sum(parts)]


def test_split_insufficient():
    ts = noleap_timestamps(2000, 2)
    s = WeatherSeries(ts, {k: np.ones(len(ts)) for k in FEATURES})
    with pytest.raises(SizingError):
        split_chronological(s, 18, 2, 1)


def test_synth_deterministic_and_physical(one_year):
    again = synth_weather(IOWA, 1, seed=3)
    assert to_canonical_csv(again) == to_canonical_csv(one_year)
    s = one_year
    assert np.all(s.ghi[s.hour == 0] == 0)
    assert s.ghi[s.month == 6].mean() > s.ghi[s.month == 12].mean()
    night = (s.dni == 0) & (s.dhi == 0)
    assert np.all(s.ghi[night] == 0)
    assert s.validate() is s


def test_synth_seed_changes_data():
    a = synth_weather(IOWA, 1, seed=1)
    b = synth_weather(IOWA, 1, seed=2)
    assert not np.array_equal(a.ghi, b.ghi)


def test_feature_matrix_layout(one_year):
    F = feature_matrix(one_year)
    assert F.shape == (len(one_year), 12)
    assert np.array_equal(F[:, DHI_INDEX], one_year.dhi)
    assert feature_matrix(one_year[5:6]).shape == (1, 12)
    assert np.isfinite(F).all()


@settings(max_examples=25, deadline=None)
@given(st.floats(-89.9, 89.9), st.floats(-179.9, 179.9), st.integers(0, 2**31))
def test_synth_invariants_any_location(lat, lon, seed):
    loc = Location(lat, lon, round(lon / 15.0))
    s = synth_weather(loc, 1, seed)
    assert len(s) == HOURS_PER_YEAR
    assert (s.dni >= 0).all() and (s.dhi >= 0).all() and (s.ghi >= 0).all()
    assert ((s.humidity >= 0) & (s.humidity <= 100)).all()
    assert ((s.surface_albedo >= 0) & (s.surface_albedo <= 1)).all()


def test_location_bounds():
    from solarbs.errors import DataError

    with pytest.raises(DataError):
        Location(91.0, 0.0)
    assert Location.from_dict(IOWA.to_dict()) == IOWA
