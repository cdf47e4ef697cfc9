"""Model parameters, thresholds and unit conversions.

Everything downstream works in linear units. Distances are in whatever unit
the density is expressed in (the default system profile uses km and BS/km^2).
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass


class ConfigError(ValueError):
    """Invalid parameter value or combination."""


def _finite(x: float, name: str) -> float:
    x = float(x)
    if not math.isfinite(x):
        raise ConfigError(f"{name} must be finite, got {x!r}")
    return x


def db_to_linear(x_db: float) -> float:
    return 10.0 ** (_finite(x_db, "x_db") / 10.0)


def linear_to_db(x: float) -> float:
    x = _finite(x, "x")
    if x <= 0:
        raise ConfigError(f"cannot express non-positive ratio {x!r} in dB")
    return 10.0 * math.log10(x)


def dbm_to_watts(p_dbm: float) -> float:
    return db_to_linear(p_dbm) * 1e-3


def watts_to_dbm(p_w: float) -> float:
    return linear_to_db(p_w) + 30.0


def noise_power_from_density(psd_dbm_per_hz: float, bandwidth_hz: float) -> float:
    """Thermal noise power in watts for a PSD in dBm/Hz over ``bandwidth_hz``."""
    bandwidth_hz = _finite(bandwidth_hz, "bandwidth_hz")
    if bandwidth_hz <= 0:
        raise ConfigError(f"bandwidth must be positive, got {bandwidth_hz!r}")
    return dbm_to_watts(_finite(psd_dbm_per_hz, "psd") + 10.0 * math.log10(bandwidth_hz))


def alpha_from_pathloss_slope(slope_db_per_decade: float) -> float:
    """Pathloss exponent from a ``slope * log10(d)`` pathloss law."""
    slope = _finite(slope_db_per_decade, "slope")
    if slope <= 20.0:
        raise ConfigError(f"pathloss slope must exceed 20 dB/decade (alpha > 2), got {slope}")
    return slope / 10.0


@dataclass(frozen=True)
class NetworkParams:
    """Physical-layer parameters of the uplink model.

    ``baseline_power`` is mu^-1: the baseline transmit power and, at the same
    time, the mean of the exponential fading power. The two roles are coupled
    on purpose.
    """

    density: float
    pathloss_exponent: float
    pc_factor: float
    baseline_power: float
    noise_power: float = 0.0

    def __post_init__(self) -> None:
        for f in dataclasses.fields(self):
            object.__setattr__(self, f.name, _finite(getattr(self, f.name), f.name))
        if self.density <= 0:
            raise ConfigError(f"density must be > 0, got {self.density}")
        if self.pathloss_exponent <= 2:
            raise ConfigError(f"pathloss exponent must be > 2, got {self.pathloss_exponent}")
        if not 0.0 <= self.pc_factor <= 1.0:
            raise ConfigError(f"power control factor must lie in [0, 1], got {self.pc_factor}")
        if self.baseline_power <= 0:
            raise ConfigError(f"baseline power must be > 0, got {self.baseline_power}")
        if self.noise_power < 0:
            raise ConfigError(f"noise power must be >= 0, got {self.noise_power}")

    @property
    def mu(self) -> float:
        return 1.0 / self.baseline_power

    @property
    def mean_cell_radius(self) -> float:
        """Radius of a disk with area 1/density."""
        return 1.0 / math.sqrt(math.pi * self.density)

    def replace(self, **changes) -> NetworkParams:
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True, order=True)
class SinrThreshold:
    value: float

    def __post_init__(self) -> None:
        v = _finite(self.value, "threshold")
        if v <= 0:
            raise ConfigError(f"SINR threshold must be > 0 (linear), got {v}")
        object.__setattr__(self, "value", v)

    @classmethod
    def from_db(cls, t_db: float) -> SinrThreshold:
        return cls(db_to_linear(t_db))

    @classmethod
    def from_linear(cls, t: float) -> SinrThreshold:
        return cls(t)

    @property
    def db(self) -> float:
        return linear_to_db(self.value)

    def __float__(self) -> float:
        return self.value


@dataclass(frozen=True)
class QuadratureSpec:
    rel_tol: float = 1e-7
    abs_tol: float = 1e-10
    max_subdivisions: int = 2000
    tail_cutoff_mass: float = 1e-12

    def __post_init__(self) -> None:
        if not (self.rel_tol > 0 and self.abs_tol > 0 and self.tail_cutoff_mass > 0):
            raise ConfigError("quadrature tolerances must be positive")
        if not 0 < self.tail_cutoff_mass < 1:
            raise ConfigError("tail_cutoff_mass must lie in (0, 1)")
        if int(self.max_subdivisions) < 1:
            raise ConfigError("max_subdivisions must be >= 1")

    def tighter(self, factor: float = 10.0) -> QuadratureSpec:
        """Spec for an inner integral, one order tighter than this one."""
        return dataclasses.replace(self, rel_tol=self.rel_tol / factor, abs_tol=self.abs_tol / factor)


DEFAULT_QUADRATURE = QuadratureSpec()

# Reference LTE-like system parameters. Distances in km, density in BS/km^2.
SYSTEM_PROFILE = {
    "bandwidth_hz": 10e6,
    "density": 0.24,
    "pathloss_slope_db": 37.0,
    "downlink_tx_dbm": 45.0,
    "uplink_max_tx_dbm": 23.0,
    "fpc_eps": (0.6, 0.8, 1.0),
    "noise_psd_dbm_per_hz": -174.0,
}


def reference_params(pc_factor: float = 0.8, *, noise: bool = True) -> NetworkParams:
    """Uplink parameters of the reference system profile; baseline power is the 23 dBm cap."""
    return NetworkParams(
        density=SYSTEM_PROFILE["density"],
        pathloss_exponent=alpha_from_pathloss_slope(SYSTEM_PROFILE["pathloss_slope_db"]),
        pc_factor=pc_factor,
        baseline_power=dbm_to_watts(SYSTEM_PROFILE["uplink_max_tx_dbm"]),
        noise_power=(
            noise_power_from_density(SYSTEM_PROFILE["noise_psd_dbm_per_hz"], SYSTEM_PROFILE["bandwidth_hz"])
            if noise
            else 0.0
        ),
    )
