from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field

Point = Tuple[float, float, float]

GROUND_ID = -1


class PathKind(str, Enum):
    LOS = "LOS"
    REFLECTION = "REFLECTION"
    DIFFRACTION = "DIFFRACTION"
    SCATTERING = "SCATTERING"


class TraceConfig(BaseModel):
    """Ray-tracing knobs, surfaced under ``propagation`` in the run config."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    max_reflection_order: int = Field(default=2, ge=0, le=3)
    enable_diffraction: bool = True
    enable_scattering: bool = False
    scattering_coefficient: float = Field(default=0.4, ge=0.0, le=1.0)
    max_diffraction_edges: int = Field(default=4, ge=0)
    double_diffraction: bool = False
    diffraction_model: Literal["fresnel", "itu_approx"] = "fresnel"
    polarization: Literal["TE", "TM", "average"] = "average"
    material_reference_hz: float = Field(default=1.0e9, gt=0)
    reference_frequency_hz: float = Field(default=10.0e9, gt=0)
    coherent: bool = False
    max_candidate_distance_m: Optional[float] = Field(default=None, gt=0)


@dataclass(frozen=True)
class Bounce:
    """One specular interaction: surface id (GROUND_ID for the ground plane)."""

    surface: int
    material: str
    incidence_rad: float


@dataclass(frozen=True)
class KnifeEdge:
    # clearance of the edge point above the straight tx-rx line, and the two legs
    height_m: float
    d1_m: float
    d2_m: float


def _flip(edge: Optional[KnifeEdge]) -> Optional[KnifeEdge]:
    return None if edge is None else KnifeEdge(edge.height_m, edge.d2_m, edge.d1_m)


@dataclass(frozen=True)
class ScatterPatch:
    surface: int
    area_m2: float
    cos_incident: float
    cos_scattered: float
    d1_m: float
    d2_m: float


@dataclass(frozen=True)
class PathComponent:
    kind: PathKind
    vertices: Tuple[Point, ...]
    length: float
    departure_dir: Point
    arrival_dir: Point
    bounces: Tuple[Bounce, ...] = ()
    edge: Optional[KnifeEdge] = None
    second_edge: Optional[KnifeEdge] = None
    patch: Optional[ScatterPatch] = None
    order: int = field(default=0)

    def gain_db(self, frequency: float, materials, cfg: Optional[TraceConfig] = None) -> float:
        from .propagation import component_gain_db

        return component_gain_db(self, frequency, materials, cfg)

    @property
    def knife_edges(self) -> Tuple[KnifeEdge, ...]:
        return tuple(e for e in (self.edge, self.second_edge) if e is not None)

    def chain_key(self, ndigits: int = 6) -> Tuple[Point, ...]:
        return tuple(tuple(round(c, ndigits) for c in v) for v in self.vertices)

    def reversed(self) -> "PathComponent":
        return PathComponent(
            kind=self.kind,
            vertices=tuple(reversed(self.vertices)),
            length=self.length,
            departure_dir=self.arrival_dir,
            arrival_dir=self.departure_dir,
            bounces=tuple(reversed(self.bounces)),
            edge=_flip(self.second_edge) if self.second_edge is not None else _flip(self.edge),
            second_edge=None if self.second_edge is None else _flip(self.edge),
            patch=None if self.patch is None else ScatterPatch(
                self.patch.surface, self.patch.area_m2, self.patch.cos_scattered,
                self.patch.cos_incident, self.patch.d2_m, self.patch.d1_m,
            ),
            order=self.order,
        )
