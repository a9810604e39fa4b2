"""Solar-powered base-station toolkit: weather, PV truth, load, forecasting and sizing."""

from .errors import (
    DataError,
    DomainError,
    InfeasibleError,
    SchemaError,
    SizingError,
    SolarBSError,
    StateError,
)
from .metrics import ErrorReport, cost_difference, error_report, nrmse
from .pvtruth import PanelSpec, harvest_series, solar_position
from .traffic import PowerParams, base_station_power, consumption_series, synth_traffic
from .weather import Location, WeatherSeries, parse_psm3_csv, split_chronological, synth_weather

__version__ = "0.1.0"
