from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict

Vec2 = Tuple[float, float]
Vec3 = Tuple[float, float, float]


class Material(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str
    relative_permittivity: float
    conductivity: float


# concrete at 1 GHz
DEFAULT_MATERIAL = Material(name="concrete", relative_permittivity=5.24, conductivity=0.0462)


class MaterialSpec(BaseModel):
    relative_permittivity: float
    conductivity: float = 0.0


class Origin(BaseModel):
    lat: Optional[float] = None
    lon: Optional[float] = None
    alt: Optional[float] = None
    # file coordinates + offset_m = local ENU coordinates
    offset_m: Vec3 = (0.0, 0.0, 0.0)


class Footprint(BaseModel):
    polygon: List[Vec2]
    height: float
    material: Optional[str] = None


class MeshTriangle(BaseModel):
    vertices: Tuple[Vec3, Vec3, Vec3]
    material: Optional[str] = None


class GroundSpec(BaseModel):
    material: str = DEFAULT_MATERIAL.name


class Extent(BaseModel):
    min: Vec2
    max: Vec2


class SceneFile(BaseModel):
    """On-disk scene document (see data/scenes/README.md)."""

    model_config = ConfigDict(extra="forbid")

    name: Optional[str] = None
    description: Optional[str] = None
    origin: Optional[Origin] = None
    extent: Optional[Extent] = None
    materials: Dict[str, MaterialSpec] = {}
    footprints: List[Footprint] = []
    mesh: List[MeshTriangle] = []
    ground: Optional[GroundSpec] = GroundSpec()
