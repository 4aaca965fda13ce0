"""Pipelines behind each subcommand. Each returns the files it wrote (or the text it printed)."""

import logging
import math
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

from midband.antenna.upa import steering_grid
from midband.core.config import CarrierConfig, RunConfig
from midband.core.errors import ConfigError
from midband.coverage.render import format_summary, render_coverage_png, write_coverage_csv, write_summary
from midband.coverage.schemas import Deployment
from midband.coverage.service import compute_coverage_maps, coverage_summary, grid_cells
from midband.coverage.store import load_deployment
from midband.rfi.render import (
    format_report,
    render_rfi_scatter,
    render_spectrum_average_scatter,
    write_classification,
    write_links_csv,
    write_report_csv,
    write_suppression_csv,
)
from midband.rfi.schemas import Incumbent
from midband.rfi.service import classify_gnbs, plan_suppression, run_monte_carlo
from midband.scene.store import Scene, build_index, check_outdoor, load_scene
from midband.spectrum.schemas import Proposer, Region, Status
from midband.spectrum.store import AllocationRegistry, load_allocations

logger = logging.getLogger(__name__)


def _load_world(cfg: RunConfig) -> Tuple[Scene, Deployment]:
    if cfg.deployment_path is None:
        raise ConfigError("deployment_path is required")
    scene = build_index(load_scene(cfg.scene_path))
    deployment = load_deployment(
        cfg.deployment_path, cfg.aperture_side_m, cfg.tx_power_dbm, cfg.downtilt_deg, scene
    )
    return scene, deployment


# -------- coverage --------
def cmd_coverage(cfg: RunConfig, echo=print) -> List[Path]:
    scene, deployment = _load_world(cfg)
    _, _, excluded = grid_cells(scene, cfg.grid, cfg.rx_height_m)
    if excluded.all():
        raise ConfigError(
            f"grid at origin {cfg.grid.origin} has no outdoor cell at receiver height {cfg.rx_height_m:g} m"
        )
    carriers: List[CarrierConfig] = list(cfg.carriers)
    if all(c.carrier_hz != cfg.reference_carrier_hz for c in carriers):
        carriers.insert(0, CarrierConfig(carrier_hz=cfg.reference_carrier_hz))
    steering = steering_grid(cfg.n_steering, -math.radians(cfg.downtilt_deg))

    maps = compute_coverage_maps(
        scene,
        deployment,
        [(c.carrier_hz, c.resolved_bandwidth_hz()) for c in carriers],
        steering,
        cfg.rx_height_m,
        grid=cfg.grid,
        trace=cfg.propagation,
        noise_figure_db=cfg.noise_figure_db,
        element_pattern=cfg.element_pattern,
        max_link_distance_m=cfg.max_link_distance_m,
        workers=cfg.workers,
    )
    reference = next(m for m in maps if m.carrier_hz == cfg.reference_carrier_hz)

    written = []
    for cov in maps:
        written.append(write_coverage_csv(cov, cfg.output_dir))
        written.append(render_coverage_png(cov, cfg.output_dir))
    rows = coverage_summary(maps, reference, cfg.coverage_threshold_db)
    written.append(write_summary(rows, cfg.output_dir))
    echo(format_summary(rows, cfg.reference_carrier_hz))
    return written


# -------- rfi --------
def incumbent_from_config(cfg: RunConfig) -> Incumbent:
    if cfg.rfi is None:
        raise ConfigError("the rfi section (incumbent position) is required")
    return Incumbent(
        position=tuple(cfg.rfi.incumbent_position),
        victim_bandwidth_hz={c.carrier_hz: c.resolved_bandwidth_hz() for c in cfg.carriers},
        noise_figure_db=cfg.noise_figure_db,
        protection_threshold_db=cfg.rfi.threshold_db,
    )


def cmd_rfi(cfg: RunConfig, echo=print) -> List[Path]:
    incumbent = incumbent_from_config(cfg)
    scene, deployment = _load_world(cfg)
    check_outdoor(scene, incumbent.position, "incumbent")
    rfi = cfg.rfi
    report = run_monte_carlo(
        scene,
        deployment,
        incumbent,
        [c.carrier_hz for c in cfg.carriers],
        n_iter=rfi.n_iter,
        seed=rfi.seed,
        trace=cfg.rfi_propagation(),
        element_pattern=cfg.element_pattern,
        elevation_range_deg=(rfi.elevation_min_deg, rfi.elevation_max_deg),
        workers=cfg.workers,
    )
    classification = classify_gnbs(report)
    plans = [plan_suppression(report, c, rfi.target_aggregate_inr_db) for c in report.carriers]

    out = cfg.output_dir
    written = [
        write_report_csv(report, out, incumbent.protection_threshold_db),
        write_links_csv(report, out),
        write_classification(classification, out),
        write_suppression_csv(plans, out),
    ]
    for carrier_hz in report.carriers:
        written.append(render_rfi_scatter(report, deployment, incumbent, carrier_hz, out, classification.harmful_ids))
    written.append(render_spectrum_average_scatter(report, deployment, incumbent, out, classification.harmful_ids))
    echo(format_report(report, classification, plans))
    return written


# -------- bands --------
def cmd_bands(
    registry: AllocationRegistry,
    total: Optional[str] = None,
    region: str = Region.ITU_R2.value,
    status: Optional[str] = Status.PRIMARY.value,
    at: Optional[Tuple[int, int]] = None,
    candidates: Sequence[str] = (),
    rank: bool = False,
    overlap: Optional[Tuple[str, str]] = None,
    echo=print,
) -> str:
    region_e = Region(region)
    status_e = Status(status) if status else None
    lines: List[str] = []
    if total:
        hz = registry.total_allocated_hz(total, region_e, status_e)
        count = registry.band_count(total, region_e, status_e)
        lines.append(f"{total} {region_e.value} {status or 'any'}: {hz / 1e9:.3f} GHz over {count} band(s)")
    if at:
        lines.append(f"services in {at[0] / 1e9:g}-{at[1] / 1e9:g} GHz:")
        for r in registry.overlapping(*at):
            note = f"  [{r.notes}]" if r.notes else ""
            lines.append(
                f"  {r.service:<14} {r.region.value:<7} {r.status.value:<9} "
                f"{r.low_hz / 1e9:.3f}-{r.high_hz / 1e9:.3f} GHz{note}"
            )
    if candidates:
        bands = registry.candidate_intersection([Proposer(p) for p in candidates])
        lines.append(f"candidate bands common to {', '.join(candidates)}:")
        lines.extend(f"  {lo / 1e9:.3f}-{hi / 1e9:.3f} GHz" for lo, hi in bands)
    if rank:
        lines.append(f"services by allocated bandwidth ({region_e.value}, {status or 'any'}):")
        lines.extend(f"  {s:<14} {hz / 1e9:.3f} GHz" for s, hz in registry.rank_services(region_e, status_e))
    if overlap:
        frac = registry.overlap_fraction(overlap[0], overlap[1], region_e, status_e)
        lines.append(f"{overlap[0]} covers {100 * frac:.1f}% of {overlap[1]} ({region_e.value})")
    if not lines:
        lines.append(f"{len(registry)} records, {len(registry.candidates)} candidate bands")
    text = "\n".join(lines)
    echo(text)
    return text


# -------- validate --------
def cmd_validate(cfg: RunConfig, echo=print) -> List[str]:
    """Lint the config and every file it references; raises on the first hard error."""
    notes = [f"config ok: {len(cfg.carriers)} carrier(s), output -> {cfg.output_dir}"]
    scene = load_scene(cfg.scene_path)
    notes.append(f"scene ok: {len(scene.buildings)} buildings, {scene.n_triangles} triangles")
    if cfg.deployment_path is not None:
        deployment = load_deployment(cfg.deployment_path, cfg.aperture_side_m, cfg.tx_power_dbm, cfg.downtilt_deg, scene)
        width = scene.bounds_max[0] - scene.bounds_min[0]
        height = scene.bounds_max[1] - scene.bounds_min[1]
        density = deployment.density_per_km2(width * height) if math.isfinite(width * height) else math.nan
        notes.append(f"deployment ok: {len(deployment)} gNBs, {density:.1f} per km2")
    if cfg.allocations_path is not None:
        registry = load_allocations(cfg.allocations_path)
        notes.append(f"allocations ok: {len(registry)} records")
    if cfg.rfi is not None:
        pos = cfg.rfi.incumbent_position
        check_outdoor(scene, pos, "incumbent")
        notes.append(f"incumbent ok at {pos}")
    for line in notes:
        echo(line)
    return notes
