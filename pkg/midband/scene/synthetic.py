"""Deterministic Manhattan-grid scene and deployment used as the bundled scenario."""

from typing import Dict, List

from midband.scene.schemas import Extent, Footprint, SceneFile


def building_height(i: int, j: int) -> float:
    # 15..60 m in 5 m steps, no RNG so the bundled JSON is reproducible by hand
    return 15.0 + 5.0 * ((3 * i + 7 * j + (i * j) % 5) % 10)


def synthetic_manhattan(n_x: int = 12, n_y: int = 12, pitch_m: float = 125.0, street_m: float = 30.0) -> SceneFile:
    """Square blocks of side ``pitch_m - street_m`` centred between street centrelines.

    Street centrelines run along x = k * pitch_m and y = l * pitch_m.
    """
    half = street_m / 2.0
    side = pitch_m - street_m
    footprints: List[Footprint] = []
    for i in range(n_x):
        for j in range(n_y):
            x0 = i * pitch_m + half
            y0 = j * pitch_m + half
            footprints.append(
                Footprint(
                    polygon=[(x0, y0), (x0 + side, y0), (x0 + side, y0 + side), (x0, y0 + side)],
                    height=building_height(i, j),
                    material="concrete",
                )
            )
    return SceneFile(
        name="manhattan-grid",
        description=(
            f"{n_x}x{n_y} blocks, pitch {pitch_m:g} m, streets {street_m:g} m, "
            f"footprints {side:g} x {side:g} m, heights 15-60 m"
        ),
        extent=Extent(min=(0.0, 0.0), max=(n_x * pitch_m, n_y * pitch_m)),
        footprints=footprints,
    )


def synthetic_deployment(n_gnbs: int = 50, n_x: int = 12, n_y: int = 12, pitch_m: float = 125.0) -> Dict:
    """Street-corner small cells on interior intersections, picked by a stride walk."""
    inner_x, inner_y = n_x - 1, n_y - 1
    total = inner_x * inner_y
    if n_gnbs > total:
        raise ValueError(f"only {total} interior intersections available")
    gnbs = []
    for m in range(n_gnbs):
        s = (17 * m) % total
        k, l = 1 + s // inner_y, 1 + s % inner_y
        gnbs.append(
            {
                "id": m + 1,
                "position": [k * pitch_m + 6.0, l * pitch_m - 6.0, 10.0 + 2.0 * (m % 3)],
                "azimuth_deg": 45.0 * (m % 8) - 180.0,
            }
        )
    return {"gnbs": gnbs}
