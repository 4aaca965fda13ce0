"""Per-component path gain: free space, Fresnel reflection, knife edge and diffuse lobe."""

import cmath
import math
from typing import Literal, Mapping, Optional, Sequence, Union

import numpy as np
from scipy.constants import epsilon_0, speed_of_light
from scipy.special import fresnel

from midband.core.errors import DomainError
from midband.link.budget import power_sum_dbm
from midband.raytrace.schemas import PathComponent, PathKind, TraceConfig
from midband.scene.schemas import Material

Polarization = Literal["TE", "TM", "average"]

_DEFAULT_CFG = TraceConfig()


def free_space_path_loss_db(distance: float, frequency: float) -> float:
    """20 log10(4 pi d f / c); positive number of dB."""
    if not frequency > 0:
        raise DomainError(f"frequency must be positive, got {frequency}")
    if not distance > 0:
        raise DomainError(f"distance must be positive, got {distance}")
    return 20.0 * math.log10(4.0 * math.pi * distance * frequency / speed_of_light)


# =========================
# Reflection
# =========================

def complex_permittivity(material: Material, reference_hz: float) -> complex:
    return complex(material.relative_permittivity, -material.conductivity / (2.0 * math.pi * reference_hz * epsilon_0))


def fresnel_reflection(
    material: Material,
    incidence_rad: float,
    polarization: Polarization = "average",
    reference_hz: float = 1.0e9,
) -> complex:
    """Reflection coefficient for a smooth half-space.

    ``incidence_rad`` is measured from the surface normal. ``average`` keeps the
    TE phase and takes the magnitude from the mean TE/TM reflected power.
    """
    eta = complex_permittivity(material, reference_hz)
    cos_i = math.cos(incidence_rad)
    root = cmath.sqrt(eta - math.sin(incidence_rad) ** 2)
    gamma_te = (cos_i - root) / (cos_i + root)
    if polarization == "TE":
        return gamma_te
    gamma_tm = (eta * cos_i - root) / (eta * cos_i + root)
    if polarization == "TM":
        return gamma_tm
    magnitude = math.sqrt(0.5 * (abs(gamma_te) ** 2 + abs(gamma_tm) ** 2))
    return magnitude * cmath.exp(1j * cmath.phase(gamma_te))


# =========================
# Diffraction
# =========================

def fresnel_kirchhoff_nu(height_m: float, d1_m: float, d2_m: float, frequency: float) -> float:
    wavelength = speed_of_light / frequency
    return height_m * math.sqrt(2.0 * (d1_m + d2_m) / (wavelength * d1_m * d2_m))


def knife_edge_loss_db(nu: float, model: Literal["fresnel", "itu_approx"] = "fresnel") -> float:
    """Single knife-edge loss in dB (>= 0) for the diffraction parameter ``nu``."""
    if model == "itu_approx":
        if nu <= -0.78:
            return 0.0
        return 6.9 + 20.0 * math.log10(math.sqrt((nu - 0.1) ** 2 + 1.0) + nu - 0.1)
    s, c = fresnel(nu)
    field_sq = 0.5 * ((0.5 - c) ** 2 + (0.5 - s) ** 2)
    return max(0.0, -10.0 * math.log10(field_sq))


# =========================
# Component gain
# =========================

def component_gain_db(
    pc: PathComponent,
    frequency: float,
    materials: Mapping[str, Material],
    cfg: Optional[TraceConfig] = None,
) -> float:
    """Path gain in dB (negative), antenna gains excluded."""
    cfg = cfg or _DEFAULT_CFG
    if not frequency > 0:
        raise DomainError(f"frequency must be positive, got {frequency}")

    if pc.kind == PathKind.SCATTERING:
        patch = pc.patch
        wavelength = speed_of_light / frequency
        lobe = patch.cos_incident * patch.cos_scattered * cfg.scattering_coefficient ** 2 / math.pi
        if lobe <= 0.0:
            return -math.inf
        gain = (
            -free_space_path_loss_db(patch.d1_m, frequency)
            - free_space_path_loss_db(patch.d2_m, frequency)
            + 10.0 * math.log10(lobe)
            + 10.0 * math.log10(4.0 * math.pi * patch.area_m2 / wavelength ** 2)
        )
        # a diffuse lobe never beats an unobstructed path of the same length
        return min(gain, -free_space_path_loss_db(pc.length, frequency))

    gain = -free_space_path_loss_db(pc.length, frequency)
    for bounce in pc.bounces:
        gamma = fresnel_reflection(
            materials[bounce.material], bounce.incidence_rad, cfg.polarization, cfg.material_reference_hz
        )
        if gamma == 0:
            return -math.inf
        gain += 20.0 * math.log10(abs(gamma))
    # successive edges each see the next vertex as their far end
    for edge in pc.knife_edges:
        nu = fresnel_kirchhoff_nu(edge.height_m, edge.d1_m, edge.d2_m, frequency)
        gain -= knife_edge_loss_db(nu, cfg.diffraction_model)
    return gain


def component_phase_rad(
    pc: PathComponent,
    frequency: float,
    materials: Mapping[str, Material],
    cfg: Optional[TraceConfig] = None,
) -> float:
    """Propagation phase plus reflection phases; used only for coherent combining."""
    cfg = cfg or _DEFAULT_CFG
    phase = -2.0 * math.pi * frequency * pc.length / speed_of_light
    for bounce in pc.bounces:
        phase += cmath.phase(
            fresnel_reflection(materials[bounce.material], bounce.incidence_rad, cfg.polarization, cfg.material_reference_hz)
        )
    return phase


def coherent_sum_dbm(levels_dbm: np.ndarray, phases_rad: np.ndarray, axis: int = -1) -> np.ndarray:
    """Field sum of components with the given power levels and phases."""
    levels_dbm = np.asarray(levels_dbm, dtype=float)
    amp = np.sqrt(np.power(10.0, levels_dbm / 10.0)) * np.exp(1j * np.asarray(phases_rad))
    power = np.abs(amp.sum(axis=axis)) ** 2
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(power)


def received_power_dbm(
    components: Sequence[PathComponent],
    frequency: float,
    materials: Mapping[str, Material],
    tx_power_dbm: float,
    tx_gain_db: Union[float, Sequence[float]] = 0.0,
    rx_gain_db: float = 0.0,
    cfg: Optional[TraceConfig] = None,
) -> float:
    """Combine components at the receiver; -inf dBm when there are none.

    ``tx_gain_db`` is either one value for every component or one per component.
    """
    cfg = cfg or _DEFAULT_CFG
    if not components:
        return -math.inf
    tx_gains = np.broadcast_to(np.asarray(tx_gain_db, dtype=float), (len(components),))
    path_gains = np.array([component_gain_db(pc, frequency, materials, cfg) for pc in components])
    levels = tx_power_dbm + tx_gains + rx_gain_db + path_gains
    if cfg.coherent:
        phases = np.array([component_phase_rad(pc, frequency, materials, cfg) for pc in components])
        return float(coherent_sum_dbm(levels, phases))
    return float(power_sum_dbm(levels))
