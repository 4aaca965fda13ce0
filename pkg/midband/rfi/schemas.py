from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import numpy as np
from pydantic import BaseModel

from midband.core.errors import UnknownCarrier

Vec3 = Tuple[float, float, float]


@dataclass(frozen=True)
class Incumbent:
    """Rooftop fixed-service receiver with an omni 0 dBi antenna."""

    position: Vec3
    victim_bandwidth_hz: Dict[float, float]
    noise_figure_db: float = 9.0
    protection_threshold_db: float = -10.0
    antenna_gain_dbi: float = 0.0


@dataclass(frozen=True)
class LinkDiagnostics:
    gnb_id: int
    distance_m: float
    los: bool
    n_paths: int


@dataclass(frozen=True, eq=False)
class RfiReport:
    """Per (gNB, carrier) statistics. Arrays are (n_gnbs, n_carriers) in ``gnb_ids`` x ``carriers`` order."""

    gnb_ids: Tuple[int, ...]
    carriers: Tuple[float, ...]
    worst_inr_db: np.ndarray
    mean_inr_db: np.ndarray
    worst_interference_dbm: np.ndarray
    mean_interference_dbm: np.ndarray
    noise_dbm: Tuple[float, ...]
    iterations: int
    seed: int
    links: Tuple[LinkDiagnostics, ...] = field(default=())
    protection_threshold_db: float = -10.0

    def carrier_index(self, carrier_hz: float) -> int:
        try:
            return self.carriers.index(carrier_hz)
        except ValueError:
            raise UnknownCarrier(f"carrier {carrier_hz:g} Hz not in report")

    def row(self, gnb_id: int) -> int:
        return self.gnb_ids.index(gnb_id)


class Classification(BaseModel):
    threshold_db: float
    safe_ids: List[int]
    harmful_ids: List[int]


class SuppressionPlan(BaseModel):
    carrier_hz: float
    target_aggregate_inr_db: float
    suppressed_ids: List[int]
    initial_aggregate_inr_db: float
    aggregate_inr_db: float
    worst_case_aggregate_inr_db: float
    initial_worst_case_aggregate_inr_db: float
