import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from solarbs.errors import DomainError
from solarbs.traffic import (
    PowerParams,
    TrafficProfile,
    base_station_power,
    consumption_series,
    default_params_json,
    synth_traffic,
)


def hand_power(n):
    """Closed form evaluated term by term, no anchor."""
    e = 1e-7
    eta_pa, eta_bb, eta_rf = 0.75 - e * n, 0.8 - e * n, 0.8 - e * n
    s_r, s_dc, s_cool = 0.65 + e * n, 0.15 + e * n, 0.47 + e * n
    num = 3 * (n / 1e4) * (500 / eta_pa + 100 / eta_bb + 100 / eta_rf)
    return num / ((1 - s_r) * (1 - s_dc) * (1 - s_cool))


def test_zero_load_zero_power():
    assert base_station_power(0) == 0.0
    assert base_station_power(0, PowerParams().raw()) == 0.0


def test_raw_power_at_ten_thousand():
    raw = base_station_power(10_000, PowerParams().raw())
    assert raw == pytest.approx(hand_power(10_000), rel=1e-12)
    assert raw == pytest.approx(17567.0, abs=1.0)


def test_anchor_pins_peak():
    assert base_station_power(14_000) == pytest.approx(11_500.0, rel=1e-12)
    p = PowerParams(peak_power_anchor=9000.0, peak_load=12_000)
    assert base_station_power(12_000, p) == pytest.approx(9000.0, rel=1e-12)


def test_anchor_is_a_constant_scale():
    n = np.array([1.0, 500.0, 7000.0, 13999.0])
    ratio = base_station_power(n) / base_station_power(n, PowerParams().raw())
    assert np.allclose(ratio, 11_500.0 / hand_power(14_000), rtol=1e-12)


def test_out_of_range_is_domain_error():
    with pytest.raises(DomainError):
        base_station_power(4e6, PowerParams().raw())
    with pytest.raises(DomainError):
        base_station_power(-1)
    with pytest.raises(DomainError):
        PowerParams(c=(0.75, 0.8, 0.8, 0.65, 0.15, 1.2))


def test_defaults_match_constants():
    d = json.loads(default_params_json())
    assert d["c"] == [0.75, 0.8, 0.8, 0.65, 0.15, 0.47]
    assert d["eps"] == [1e-7] * 6
    assert (d["p_tx"], d["p_bb"], d["p_rf"], d["n_sectors"]) == (500.0, 100.0, 100.0, 3)
    assert PowerParams.from_dict(d) == PowerParams()


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 14_000), st.floats(0, 14_000))
def test_power_monotone_in_load(a, b):
    lo, hi = sorted((a, b))
    assert base_station_power(lo) <= base_station_power(hi)


def test_power_monotone_finite_difference():
    n = np.linspace(0, 14_000, 14_001)
    assert np.all(np.diff(base_station_power(n)) >= 0)


def test_traffic_profile_shape():
    prof = synth_traffic(24 * 28, 14_000, seed=4)
    assert prof.counts.max() == 14_000
    assert prof.counts.min() >= 0
    hod = np.arange(len(prof)) % 24
    assert prof.counts[hod == 3].mean() < prof.counts[hod == 15].mean()
    assert np.array_equal(prof.counts, synth_traffic(24 * 28, 14_000, seed=4).counts)
    assert not np.array_equal(prof.counts, synth_traffic(24 * 28, 14_000, seed=5).counts)


def test_traffic_needs_a_day():
    with pytest.raises(ValueError):
        synth_traffic(10)


def test_traffic_profile_bounds():
    with pytest.raises(DomainError):
        TrafficProfile([0, 15_000], 14_000)


def test_consumption_series_cases():
    assert np.all(consumption_series(TrafficProfile(np.zeros(48), 14_000)) == 0)
    const = consumption_series(TrafficProfile(np.full(24, 5000), 14_000))
    assert np.all(const == const[0])
    rising = consumption_series(TrafficProfile(np.arange(0, 14_000, 50), 14_000))
    assert np.all(np.diff(rising) >= 0)


def test_consumption_peak_equals_anchor():
    prof = synth_traffic(24 * 7, 14_000, seed=0)
    c = consumption_series(prof)
    assert abs(c.max() - 11_500.0) <= 11_500.0 * 1e-6
