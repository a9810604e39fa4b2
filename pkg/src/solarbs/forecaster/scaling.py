"""Per-feature min-max and robust (median/IQR) scalers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import EmptyInputError, SchemaError, StateError

METHODS = ("minmax", "robust")


@dataclass
class ScalerParams:
    method: str
    center: np.ndarray | None = None
    scale: np.ndarray | None = None

    @property
    def fitted(self):
        return self.center is not None

    def _check(self):
        if not self.fitted:
            raise StateError("scaler used before fit")

    def transform(self, x):
        self._check()
        return (np.asarray(x, dtype=np.float64) - self.center) / self.scale

    def inverse(self, z):
        self._check()
        return np.asarray(z, dtype=np.float64) * self.scale + self.center

    def to_dict(self):
        self._check()
        return {
            "method": self.method,
            "center": self.center.tolist(),
            "scale": self.scale.tolist(),
        }

    @classmethod
    def from_dict(cls, d):
        for k in ("method", "center", "scale"):
            if k not in d:
                raise SchemaError(k)
        if d["method"] not in METHODS:
            raise SchemaError("method", f"unknown scaler method {d['method']!r}")
        return cls(d["method"], np.asarray(d["center"], dtype=np.float64),
                   np.asarray(d["scale"], dtype=np.float64))


def fit_scaler(data, method):
    """Fit on ``data`` (1-D, or 2-D with features in columns).

    min-max maps each feature's min to 0 and max to 1; robust maps
    ``x -> (x - median) / IQR``. A constant feature (zero range or zero
    IQR) keeps scale 1 so it passes through only shifted.
    """
    if method not in METHODS:
        raise ValueError(f"method must be one of {METHODS}")
    x = np.asarray(data, dtype=np.float64)
    if x.size == 0:
        raise EmptyInputError("cannot fit a scaler on empty data")
    if method == "minmax":
        lo, hi = x.min(axis=0), x.max(axis=0)
        center, scale = lo, hi - lo
    else:
        q25, center, q75 = np.percentile(x, [25, 50, 75], axis=0)
        scale = q75 - q25
    scale = np.where(scale > 0, scale, 1.0)
    return ScalerParams(method, np.asarray(center, dtype=np.float64), np.asarray(scale, dtype=np.float64))
