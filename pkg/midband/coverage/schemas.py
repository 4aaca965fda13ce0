from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

Vec3 = Tuple[float, float, float]


# -------- Deployment --------
class Gnb(BaseModel):
    model_config = ConfigDict(extra="forbid")

    id: int = Field(ge=0)
    position: Vec3
    azimuth_deg: float = 0.0
    # per-site overrides; None falls back to the run config
    aperture_side_m: Optional[float] = Field(default=None, gt=0)
    tx_power_dbm: Optional[float] = None
    downtilt_deg: Optional[float] = None


class DeploymentFile(BaseModel):
    model_config = ConfigDict(extra="forbid")

    description: Optional[str] = None
    gnbs: List[Gnb] = []


@dataclass(frozen=True)
class Site:
    """A gNB with every radio parameter resolved."""

    id: int
    position: Vec3
    azimuth_deg: float
    aperture_side_m: float
    tx_power_dbm: float
    downtilt_deg: float


@dataclass(frozen=True)
class Deployment:
    sites: Tuple[Site, ...]

    def __len__(self) -> int:
        return len(self.sites)

    @property
    def ids(self) -> Tuple[int, ...]:
        return tuple(s.id for s in self.sites)

    def site(self, gnb_id: int) -> Site:
        for s in self.sites:
            if s.id == gnb_id:
                return s
        raise KeyError(f"gNB {gnb_id} not in deployment")

    def density_per_km2(self, area_m2: float) -> float:
        return len(self.sites) / (area_m2 / 1e6)

    def without(self, gnb_ids) -> "Deployment":
        drop = set(gnb_ids)
        return Deployment(tuple(s for s in self.sites if s.id not in drop))


# -------- Coverage map --------
@dataclass(frozen=True, eq=False)
class CoverageMap:
    """Best SNR per cell. Arrays are (n_y, n_x); row j holds cells at y = origin_y + (j + 0.5) * cell_m."""

    origin: Tuple[float, float]
    cell_m: float
    n_x: int
    n_y: int
    snr_db: np.ndarray
    best_gnb: np.ndarray
    best_steering: np.ndarray
    excluded: np.ndarray
    carrier_hz: float
    bandwidth_hz: float
    n_elements: int = 1

    def cell_centers(self) -> Tuple[np.ndarray, np.ndarray]:
        xs = self.origin[0] + (np.arange(self.n_x) + 0.5) * self.cell_m
        ys = self.origin[1] + (np.arange(self.n_y) + 0.5) * self.cell_m
        return np.meshgrid(xs, ys)

    def covered(self, threshold_db: float = 0.0) -> np.ndarray:
        return (~self.excluded) & (self.snr_db >= threshold_db)

    def same_grid(self, other: "CoverageMap") -> bool:
        return (
            self.origin == other.origin
            and self.cell_m == other.cell_m
            and (self.n_x, self.n_y) == (other.n_x, other.n_y)
            and bool(np.array_equal(self.excluded, other.excluded))
        )


class ThroughputStats(BaseModel):
    mean: float
    median: float
    p5: float
    p95: float
    covered_cells: int


class CoverageSummaryRow(BaseModel):
    carrier_hz: float
    bandwidth_hz: float
    n_elements: int
    covered_cells: int
    outdoor_cells: int
    coverage_ratio: float
    mean_rate_bps: float
    median_rate_bps: float
    p5_rate_bps: float
    p95_rate_bps: float
    mean_rate_ratio: float
