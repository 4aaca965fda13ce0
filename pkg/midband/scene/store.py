import json
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, Mapping, Optional, Sequence, Tuple

import numpy as np
import pydantic
import shapely
from shapely.geometry import LinearRing, Polygon

from midband.core.errors import ConfigError, ParseError, ValidationError
from midband.scene.geometry import (
    MIN_TRIANGLE_AREA,
    drop_closing_vertex,
    ensure_ccw,
    extrude_prism,
    intersect_triangles,
    mesh_feature_edges,
    segments_blocked,
    triangle_areas,
    triangle_normals,
)
from midband.scene.index import TriangleBVH
from midband.scene.schemas import DEFAULT_MATERIAL, Material, SceneFile

logger = logging.getLogger(__name__)

OCCLUSION_EPS_M = 1e-6


@dataclass(frozen=True)
class Building:
    polygon: Tuple[Tuple[float, float], ...]
    height: float
    material_id: str


@dataclass(frozen=True, eq=False)
class Scene:
    """Immutable triangle world. Ray queries use ``accel`` once built."""

    triangles: np.ndarray
    material_ids: Tuple[str, ...]
    materials: Mapping[str, Material]
    ground: Optional[Material]
    bounds_min: Tuple[float, float, float]
    bounds_max: Tuple[float, float, float]
    buildings: Tuple[Building, ...] = ()
    edge_a: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))
    edge_b: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))
    accel: Optional[TriangleBVH] = None
    name: Optional[str] = None

    def __post_init__(self):
        tris = self.triangles
        object.__setattr__(self, "v0", tris[:, 0] if len(tris) else np.zeros((0, 3)))
        object.__setattr__(self, "e1", tris[:, 1] - tris[:, 0] if len(tris) else np.zeros((0, 3)))
        object.__setattr__(self, "e2", tris[:, 2] - tris[:, 0] if len(tris) else np.zeros((0, 3)))
        object.__setattr__(self, "normals", triangle_normals(tris))
        object.__setattr__(self, "areas", triangle_areas(tris))
        object.__setattr__(self, "_polygons", tuple(Polygon(b.polygon) for b in self.buildings))

    # -------- Construction --------
    @classmethod
    def empty(cls, ground: Optional[Material] = None) -> "Scene":
        inf = math.inf
        return cls(
            triangles=np.zeros((0, 3, 3)),
            material_ids=(),
            materials={DEFAULT_MATERIAL.name: DEFAULT_MATERIAL} if ground is None else {ground.name: ground},
            ground=ground,
            bounds_min=(-inf, -inf, -inf if ground is None else 0.0),
            bounds_max=(inf, inf, inf),
        )

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def material_of(self, surface: int) -> Material:
        if surface < 0:
            return self.ground
        return self.materials[self.material_ids[surface]]

    def contains(self, p: Sequence[float], tol: float = 1e-6) -> bool:
        return all(self.bounds_min[k] - tol <= p[k] <= self.bounds_max[k] + tol for k in range(3))

    # -------- Ray queries --------
    def first_hit(self, origin, direction, t_min: float, t_max: float, any_hit: bool = False) -> Tuple[float, int]:
        origin = np.asarray(origin, dtype=float)
        direction = np.asarray(direction, dtype=float)
        if self.accel is not None:
            return self.accel.nearest(self.v0, self.e1, self.e2, origin, direction, t_min, t_max, first_hit=any_hit)
        return self.first_hit_brute(origin, direction, t_min, t_max)

    def first_hit_brute(self, origin, direction, t_min: float, t_max: float) -> Tuple[float, int]:
        if self.n_triangles == 0:
            return math.inf, -1
        t = intersect_triangles(
            np.asarray(origin, dtype=float), np.asarray(direction, dtype=float),
            self.v0, self.e1, self.e2, t_min, t_max,
        )
        k = int(np.argmin(t))
        return (float(t[k]), k) if np.isfinite(t[k]) else (math.inf, -1)

    def segment_clear(self, a, b, eps: float = OCCLUSION_EPS_M, brute: bool = False) -> bool:
        """True iff the open segment (a, b) crosses no triangle."""
        a = np.asarray(a, dtype=float)
        d = np.asarray(b, dtype=float) - a
        length = float(np.linalg.norm(d))
        if length <= 2 * eps or self.n_triangles == 0:
            return True
        d = d / length
        if brute:
            t, _ = self.first_hit_brute(a, d, eps, length - eps)
        else:
            t, _ = self.first_hit(a, d, eps, length - eps, any_hit=True)
        return not np.isfinite(t)

    def segments_clear(self, starts, ends, eps: float = OCCLUSION_EPS_M) -> np.ndarray:
        """Vectorised ``segment_clear`` for k segments; returns a (k,) mask."""
        return ~segments_blocked(starts, ends, self.v0, self.e1, self.e2, eps)

    # -------- Buildings --------
    def inside_buildings(self, xs: np.ndarray, ys: np.ndarray, z: float) -> np.ndarray:
        """Mask of points strictly inside an extruded footprint below its roof."""
        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=float)
        inside = np.zeros(xs.shape, dtype=bool)
        for building, poly in zip(self.buildings, self._polygons):
            if z < building.height:
                inside |= shapely.contains_xy(poly, xs, ys)
        return inside


# =========================
# Loading
# =========================

def _material_table(doc: SceneFile, extra: Optional[Mapping[str, Material]]) -> Dict[str, Material]:
    table: Dict[str, Material] = {DEFAULT_MATERIAL.name: DEFAULT_MATERIAL}
    table.update(extra or {})
    for name, spec in doc.materials.items():
        table[name] = Material(name=name, relative_permittivity=spec.relative_permittivity, conductivity=spec.conductivity)
    for m in table.values():
        if m.relative_permittivity <= 1.0:
            raise ValidationError(f"material {m.name!r}: relative permittivity must be > 1")
        if m.conductivity < 0.0:
            raise ValidationError(f"material {m.name!r}: conductivity must be >= 0")
    return table


def _resolve(table: Mapping[str, Material], name: Optional[str], what: str) -> str:
    name = name or DEFAULT_MATERIAL.name
    if name not in table:
        raise ValidationError(f"{what}: unknown material {name!r}")
    return name


def scene_from_document(doc: SceneFile, materials: Optional[Mapping[str, Material]] = None) -> Scene:
    """Validate a parsed scene document and extrude it into triangles."""
    table = _material_table(doc, materials)
    off = doc.origin.offset_m if doc.origin else (0.0, 0.0, 0.0)

    chunks, mats, buildings = [], [], []
    edge_a, edge_b = [], []
    for i, fp in enumerate(doc.footprints):
        what = f"footprint {i}"
        poly = drop_closing_vertex([(x + off[0], y + off[1]) for x, y in fp.polygon])
        if len(poly) < 3:
            raise ValidationError(f"{what}: needs at least 3 vertices")
        if not fp.height > 0:
            raise ValidationError(f"{what}: height must be > 0, got {fp.height}")
        if not LinearRing(poly).is_simple or Polygon(poly).area <= MIN_TRIANGLE_AREA:
            raise ValidationError(f"{what}: polygon is not simple")
        mat = _resolve(table, fp.material, what)
        poly = ensure_ccw(poly)
        try:
            prism = extrude_prism(poly, fp.height)
        except ValueError as e:
            raise ValidationError(f"{what}: {e}")
        chunks.append(prism)
        mats.extend([mat] * len(prism))
        buildings.append(Building(tuple(poly), float(fp.height), mat))
        n = len(poly)
        for k in range(n):
            x0, y0 = poly[k]
            x1, y1 = poly[(k + 1) % n]
            edge_a.append((x0, y0, fp.height))  # roof edge
            edge_b.append((x1, y1, fp.height))
            edge_a.append((x0, y0, 0.0))  # vertical corner
            edge_b.append((x0, y0, fp.height))

    if doc.mesh:
        mesh = np.asarray([t.vertices for t in doc.mesh], dtype=np.float64) + np.asarray(off)
        chunks.append(mesh)
        mats.extend(_resolve(table, t.material, f"mesh triangle {i}") for i, t in enumerate(doc.mesh))
        for a, b in mesh_feature_edges(mesh):
            edge_a.append(tuple(a))
            edge_b.append(tuple(b))

    tris = np.concatenate(chunks) if chunks else np.zeros((0, 3, 3))
    areas = triangle_areas(tris)
    bad = np.flatnonzero(areas <= MIN_TRIANGLE_AREA)
    if len(bad):
        raise ValidationError(f"{len(bad)} degenerate triangle(s), first at index {int(bad[0])}")

    ground = table[_resolve(table, doc.ground.material, "ground")] if doc.ground is not None else None
    if len(tris) or doc.extent is not None:
        pts = [tris.reshape(-1, 3)] if len(tris) else []
        if doc.extent is not None:
            pts.append(np.array([[*doc.extent.min, 0.0], [*doc.extent.max, 0.0]]))
        allp = np.concatenate(pts)
        lo = allp.min(axis=0)
        hi = allp.max(axis=0)
        bounds_min = (float(lo[0]), float(lo[1]), 0.0 if ground is not None else float(lo[2]))
        # open above: antennas may sit over the tallest roof
        bounds_max = (float(hi[0]), float(hi[1]), math.inf)
    else:
        bounds_min = (-math.inf, -math.inf, 0.0 if ground is not None else -math.inf)
        bounds_max = (math.inf, math.inf, math.inf)

    return Scene(
        triangles=tris,
        material_ids=tuple(mats),
        materials=table,
        ground=ground,
        bounds_min=bounds_min,
        bounds_max=bounds_max,
        buildings=tuple(buildings),
        edge_a=np.asarray(edge_a, dtype=float).reshape(-1, 3),
        edge_b=np.asarray(edge_b, dtype=float).reshape(-1, 3),
        name=doc.name,
    )


def load_scene(path: Path, materials: Optional[Mapping[str, Material]] = None) -> Scene:
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
        doc = SceneFile.model_validate(raw)
    except FileNotFoundError:
        raise ParseError(f"scene file not found: {path}")
    except (OSError, json.JSONDecodeError, pydantic.ValidationError) as e:
        raise ParseError(f"cannot parse scene {path}: {e}")
    scene = scene_from_document(doc, materials)
    logger.info("Scene %s loaded: %d buildings, %d triangles", path.name, len(scene.buildings), scene.n_triangles)
    return scene


def build_index(scene: Scene) -> Scene:
    return replace(scene, accel=TriangleBVH.build(scene.triangles))


def check_outdoor(scene: Scene, position: Sequence[float], label: str = "position") -> None:
    """Reject configured points that are off the scene or inside a building."""
    if len(position) != 3 or not all(math.isfinite(c) for c in position):
        raise ConfigError(f"{label} {tuple(position)} must be three finite coordinates")
    if not scene.contains(position):
        raise ConfigError(f"{label} {tuple(position)} is outside the scene bounds")
    if scene.inside_buildings([position[0]], [position[1]], position[2])[0]:
        raise ConfigError(f"{label} {tuple(position)} is inside a building")
