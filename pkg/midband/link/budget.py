"""Scalar link-budget math. Everything stays in dB; -inf dBm means no path."""

import math
from typing import Iterable, Literal, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

THERMAL_DENSITY_DBM_HZ = -174.0

FR1_UPPER_HZ = 7.125e9
FR3_UPPER_HZ = 24.25e9
FR1_BANDWIDTH_HZ = 100e6
WIDE_BANDWIDTH_HZ = 400e6

FrequencyRange = Literal["FR1", "FR3", "FR2"]
ArrayLike = Union[float, np.ndarray]


class LinkParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    bandwidth_hz: float = Field(gt=0)
    noise_figure_db: float = Field(default=9.0, ge=0)
    thermal_density_dbm_hz: float = THERMAL_DENSITY_DBM_HZ


def noise_power_dbm(p: LinkParams) -> float:
    return p.thermal_density_dbm_hz + 10.0 * math.log10(p.bandwidth_hz) + p.noise_figure_db


def snr_db(rx_dbm: ArrayLike, noise_dbm: float) -> ArrayLike:
    return rx_dbm - noise_dbm


def inr_db(interference_dbm: ArrayLike, noise_dbm: float) -> ArrayLike:
    return interference_dbm - noise_dbm


def shannon_rate_bps(bandwidth_hz: float, snr: ArrayLike) -> ArrayLike:
    """B log2(1 + SNR); -inf SNR gives 0."""
    if not bandwidth_hz > 0:
        raise ValueError(f"bandwidth must be positive, got {bandwidth_hz}")
    rate = bandwidth_hz * np.log2(1.0 + np.power(10.0, np.asarray(snr, dtype=float) / 10.0))
    return float(rate) if np.ndim(rate) == 0 else rate


# -------- Frequency ranges --------
def frequency_range(carrier_hz: float) -> FrequencyRange:
    if carrier_hz < FR1_UPPER_HZ:
        return "FR1"
    if carrier_hz < FR3_UPPER_HZ:
        return "FR3"
    return "FR2"


def default_bandwidth_hz(carrier_hz: float) -> float:
    return FR1_BANDWIDTH_HZ if frequency_range(carrier_hz) == "FR1" else WIDE_BANDWIDTH_HZ


# -------- Power helpers --------
def dbm_to_mw(dbm: ArrayLike) -> ArrayLike:
    return np.power(10.0, np.asarray(dbm, dtype=float) / 10.0)


def mw_to_dbm(mw: ArrayLike) -> ArrayLike:
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(np.asarray(mw, dtype=float))


def power_sum_dbm(levels_dbm: Union[Iterable[float], np.ndarray], axis=None) -> ArrayLike:
    """Non-coherent sum of powers in dBm. Empty input or all -inf gives -inf."""
    levels = np.asarray(list(levels_dbm) if not isinstance(levels_dbm, np.ndarray) else levels_dbm, dtype=float)
    if levels.size == 0:
        return -math.inf
    peak = np.max(levels, axis=axis, keepdims=True)
    safe_peak = np.where(np.isfinite(peak), peak, 0.0)
    total = np.sum(np.power(10.0, (levels - safe_peak) / 10.0), axis=axis, keepdims=True)
    with np.errstate(divide="ignore"):
        out = np.where(np.isfinite(peak), safe_peak + 10.0 * np.log10(total), -np.inf)
    out = np.squeeze(out, axis=axis) if axis is not None else out.reshape(())
    return float(out) if out.ndim == 0 else out
