"""Aperture-constrained uniform planar array and the omni receive antenna."""

import math
from dataclasses import dataclass, field
from typing import List, Literal, Sequence, Tuple

import numpy as np
from scipy.constants import speed_of_light

from midband.core.errors import DomainError

ElementPattern = Literal["isotropic", "3gpp"]

RX_GAIN_DBI = 0.0


def wrap_azimuth(az: float) -> float:
    """Map any angle to [-pi, pi)."""
    return (az + math.pi) % (2.0 * math.pi) - math.pi


def unit_vector(azimuth: float, elevation: float) -> np.ndarray:
    ce = math.cos(elevation)
    return np.array([ce * math.cos(azimuth), ce * math.sin(azimuth), math.sin(elevation)])


@dataclass(frozen=True)
class SteeringDirection:
    azimuth: float
    elevation: float

    def __post_init__(self):
        if not (-math.pi <= self.azimuth < math.pi):
            raise DomainError(f"azimuth {self.azimuth} outside [-pi, pi)")
        if not (-math.pi / 2 <= self.elevation <= math.pi / 2):
            raise DomainError(f"elevation {self.elevation} outside [-pi/2, pi/2]")

    @classmethod
    def from_vector(cls, v: Sequence[float]) -> "SteeringDirection":
        x, y, z = (float(c) for c in v)
        r = math.sqrt(x * x + y * y + z * z)
        el = math.asin(max(-1.0, min(1.0, z / r)))
        return cls(wrap_azimuth(math.atan2(y, x)), el)

    def unit(self) -> np.ndarray:
        return unit_vector(self.azimuth, self.elevation)


def elements_for_aperture(aperture_side: float, carrier_hz: float) -> Tuple[int, int]:
    """Largest n with (n - 1) * lambda/2 <= aperture_side, per side."""
    if not aperture_side > 0 or not carrier_hz > 0:
        raise DomainError("aperture side and carrier frequency must be positive")
    half_wavelength = speed_of_light / (2.0 * carrier_hz)
    n = max(1, int(math.floor(aperture_side / half_wavelength + 1e-12)) + 1)
    return n, n


@dataclass(frozen=True, eq=False)
class UpaArray:
    n_rows: int
    n_cols: int
    spacing: float
    carrier_hz: float
    boresight: Tuple[float, float, float]
    element_gain_dbi: float = 0.0
    element_pattern: ElementPattern = "isotropic"
    positions: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.n_rows < 1 or self.n_cols < 1:
            raise DomainError("array needs at least one element")
        b = np.asarray(self.boresight, dtype=float)
        b = b / np.linalg.norm(b)
        # horizontal axis stays in the ground plane, vertical axis completes the frame
        h = np.array([-b[1], b[0], 0.0])
        if np.linalg.norm(h) < 1e-12:
            h = np.array([0.0, 1.0, 0.0])
        h = h / np.linalg.norm(h)
        v = np.cross(b, h)
        rows = (np.arange(self.n_rows) - (self.n_rows - 1) / 2.0) * self.spacing
        cols = (np.arange(self.n_cols) - (self.n_cols - 1) / 2.0) * self.spacing
        pos = rows[:, None, None] * v + cols[None, :, None] * h
        object.__setattr__(self, "positions", pos.reshape(-1, 3))
        object.__setattr__(self, "_frame", (b, h, v))

    @classmethod
    def for_aperture(
        cls,
        aperture_side: float,
        carrier_hz: float,
        azimuth_deg: float = 0.0,
        downtilt_deg: float = 12.0,
        element_pattern: ElementPattern = "isotropic",
    ) -> "UpaArray":
        n_rows, n_cols = elements_for_aperture(aperture_side, carrier_hz)
        boresight = unit_vector(math.radians(azimuth_deg), -math.radians(downtilt_deg))
        return cls(
            n_rows=n_rows,
            n_cols=n_cols,
            spacing=speed_of_light / (2.0 * carrier_hz),
            carrier_hz=carrier_hz,
            boresight=tuple(boresight.tolist()),
            element_gain_dbi=8.0 if element_pattern == "3gpp" else 0.0,
            element_pattern=element_pattern,
        )

    @property
    def n_elements(self) -> int:
        return self.n_rows * self.n_cols

    @property
    def wavenumber(self) -> float:
        return 2.0 * math.pi * self.carrier_hz / speed_of_light

    @property
    def boresight_direction(self) -> SteeringDirection:
        return SteeringDirection.from_vector(self.boresight)


# =========================
# Beamforming
# =========================

def _as_units(dirs) -> np.ndarray:
    if isinstance(dirs, SteeringDirection):
        return dirs.unit()[None, :]
    arr = np.asarray(
        [d.unit() if isinstance(d, SteeringDirection) else d for d in dirs] if isinstance(dirs, (list, tuple)) else dirs,
        dtype=float,
    )
    arr = arr.reshape(-1, 3)
    return arr / np.linalg.norm(arr, axis=1, keepdims=True)


def steering_matrix(array: UpaArray, units: np.ndarray) -> np.ndarray:
    """Rows are steering vectors for the given unit directions, shape (k, N)."""
    return np.exp(-1j * array.wavenumber * (units @ array.positions.T))


def steering_vector(array: UpaArray, direction: SteeringDirection) -> np.ndarray:
    return steering_matrix(array, direction.unit()[None, :])[0]


def element_gain_db(array: UpaArray, observe) -> np.ndarray:
    """Per-element gain toward each observation direction."""
    units = _as_units(observe)
    if array.element_pattern == "isotropic":
        return np.full(len(units), array.element_gain_dbi)
    b, h, v = array._frame
    phi = np.degrees(np.arctan2(units @ h, units @ b))
    theta = np.degrees(np.arcsin(np.clip(units @ v, -1.0, 1.0)))
    a_h = np.minimum(12.0 * (phi / 65.0) ** 2, 30.0)
    a_v = np.minimum(12.0 * (theta / 65.0) ** 2, 30.0)
    return array.element_gain_dbi - np.minimum(a_h + a_v, 30.0)


def gain_matrix_db(array: UpaArray, steers, observes) -> np.ndarray:
    """Array gain in dB, rows = steering directions, columns = observation directions."""
    s = steering_matrix(array, _as_units(steers))
    o_units = _as_units(observes)
    o = steering_matrix(array, o_units)
    inner = np.abs(s.conj() @ o.T)
    with np.errstate(divide="ignore"):
        af_db = 20.0 * np.log10(inner) - 10.0 * math.log10(array.n_elements)
    return af_db + element_gain_db(array, o_units)[None, :]


def array_gain_db(array: UpaArray, steer: SteeringDirection, observe) -> float:
    return float(gain_matrix_db(array, steer, _as_units(observe))[0, 0])


def sphere_average_gain_db(array: UpaArray, steer) -> float:
    """Closed-form mean of the linear gain over all observation directions, in dB.

    Isotropic elements only. Half-wavelength linear arrays give exactly 0 dB; square
    UPAs do not, since diagonal element pairs stay correlated over the sphere.
    """
    if array.element_pattern != "isotropic":
        raise DomainError("closed-form sphere average needs isotropic elements")
    s = _as_units(steer)[0]
    k = array.wavenumber
    delta = array.positions[:, None, :] - array.positions[None, :, :]
    coupling = np.sinc(k * np.linalg.norm(delta, axis=2) / math.pi)
    mean = float(np.sum(np.cos(k * (delta @ s)) * coupling)) / array.n_elements
    return 10.0 * math.log10(mean) + array.element_gain_dbi


# =========================
# Codebooks
# =========================

def steering_grid(n_azimuth: int, elevation: float, azimuth_offset: float = 0.0) -> List[SteeringDirection]:
    """Evenly spaced azimuths at one elevation (radians)."""
    return [
        SteeringDirection(wrap_azimuth(azimuth_offset + 2.0 * math.pi * k / n_azimuth), elevation)
        for k in range(n_azimuth)
    ]


def random_steering(rng: np.random.Generator, n: int, elevation_min: float, elevation_max: float) -> np.ndarray:
    """``n`` unit vectors: azimuth uniform in [-pi, pi), elevation uniform in the sector.

    Each direction takes the next two uniforms of ``rng``, so the first k of n draws
    do not depend on n.
    """
    u = rng.random((n, 2))
    az = -math.pi + 2.0 * math.pi * u[:, 0]
    el = elevation_min + (elevation_max - elevation_min) * u[:, 1]
    ce = np.cos(el)
    return np.stack([ce * np.cos(az), ce * np.sin(az), np.sin(el)], axis=1)
