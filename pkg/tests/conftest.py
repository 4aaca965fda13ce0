"""Shared fixtures: tiny in-memory scenes and deployments."""

from pathlib import Path
from typing import Optional, Sequence

import pytest

from midband.coverage.schemas import Deployment, Site
from midband.scene.schemas import Extent, Footprint, GroundSpec, SceneFile
from midband.scene.store import Scene, build_index, scene_from_document

REPO_ROOT = Path(__file__).resolve().parents[1]
DATA_DIR = REPO_ROOT / "data"


def make_scene(
    footprints: Sequence[Footprint] = (),
    ground: bool = True,
    mesh=(),
    extent: Optional[float] = None,
    indexed: bool = True,
) -> Scene:
    doc = SceneFile(
        footprints=list(footprints),
        mesh=list(mesh),
        ground=GroundSpec() if ground else None,
        extent=None if extent is None else Extent(min=(-extent, -extent), max=(extent, extent)),
    )
    scene = scene_from_document(doc)
    return build_index(scene) if indexed else scene


def box(x0: float, y0: float, x1: float, y1: float, height: float, material: Optional[str] = None) -> Footprint:
    return Footprint(polygon=[(x0, y0), (x1, y0), (x1, y1), (x0, y1)], height=height, material=material)


def site(gnb_id: int, position, azimuth_deg: float = 0.0, tx_power_dbm: float = 30.0,
         aperture_side_m: float = 0.040, downtilt_deg: float = 0.0) -> Site:
    return Site(
        id=gnb_id,
        position=tuple(float(c) for c in position),
        azimuth_deg=azimuth_deg,
        aperture_side_m=aperture_side_m,
        tx_power_dbm=tx_power_dbm,
        downtilt_deg=downtilt_deg,
    )


@pytest.fixture
def free_space() -> Scene:
    """No buildings and no ground."""
    return make_scene(ground=False)


@pytest.fixture
def ground_only() -> Scene:
    return make_scene(ground=True)


@pytest.fixture
def wall_scene() -> Scene:
    """A 1 m thick, 40 m wide, 30 m tall wall centred on x = 50."""
    return make_scene([box(49.5, -20.0, 50.5, 20.0, 30.0)], ground=False, extent=200.0)


@pytest.fixture
def single_site_deployment() -> Deployment:
    return Deployment((site(1, (0.0, 0.0, 10.0)),))
