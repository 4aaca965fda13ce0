"""Coverage maps: trace every (gNB, cell) link once, then evaluate SNR per carrier."""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from midband.antenna.upa import RX_GAIN_DBI, SteeringDirection, UpaArray, gain_matrix_db
from midband.core.config import GridConfig
from midband.core.errors import DomainError, EmptyDeployment, GridMismatch, NoCoveredCells, NoReferenceCoverage
from midband.coverage.schemas import CoverageMap, CoverageSummaryRow, Deployment, Site, ThroughputStats
from midband.link.budget import LinkParams, noise_power_dbm, power_sum_dbm, shannon_rate_bps, snr_db
from midband.raytrace.propagation import coherent_sum_dbm, component_gain_db, component_phase_rad
from midband.raytrace.schemas import PathComponent, TraceConfig
from midband.raytrace.tracer import trace_paths
from midband.scene.store import Scene

logger = logging.getLogger(__name__)

# (point index, site index) -> components
Links = Dict[Tuple[int, int], List[PathComponent]]


# =========================
# Tracing
# =========================

def _trace_jobs(
    scene: Scene,
    positions: np.ndarray,
    points: np.ndarray,
    jobs: Sequence[Tuple[int, int]],
    point_ids: Sequence[int],
    cfg: TraceConfig,
) -> Links:
    out: Links = {}
    for row, s in jobs:
        out[(int(point_ids[row]), int(s))] = trace_paths(scene, positions[s], points[row], cfg)
    return out


def trace_links(
    scene: Scene,
    deployment: Deployment,
    points: np.ndarray,
    cfg: Optional[TraceConfig] = None,
    max_distance_m: Optional[float] = None,
    workers: int = 1,
    point_ids: Optional[Sequence[int]] = None,
) -> Links:
    """Frequency-independent path sets for every site/point pair within range.

    Pairs are split into contiguous chunks of (point, site) order and merged back
    in that order, so results do not depend on ``workers``.
    """
    cfg = cfg or TraceConfig()
    points = np.asarray(points, dtype=float).reshape(-1, 3)
    ids = list(range(len(points))) if point_ids is None else list(point_ids)
    positions = np.array([s.position for s in deployment.sites], dtype=float).reshape(-1, 3)
    in_range = np.ones((len(points), len(positions)), dtype=bool)
    if max_distance_m is not None:
        in_range = np.linalg.norm(points[:, None, :] - positions[None, :, :], axis=2) <= max_distance_m
    jobs = [(int(r), int(s)) for r, s in zip(*np.nonzero(in_range))]

    if workers <= 1 or len(jobs) < 2:
        links = _trace_jobs(scene, positions, points, jobs, ids, cfg)
    else:
        n_chunks = min(len(jobs), workers * 4)
        bounds = np.linspace(0, len(jobs), n_chunks + 1).astype(int)
        links = {}
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(_trace_jobs, scene, positions, points, jobs[a:b], ids, cfg)
                for a, b in zip(bounds[:-1], bounds[1:])
                if b > a
            ]
            for fut in futures:
                links.update(fut.result())
    logger.info("Traced %d links (%d points x %d gNBs)", len(links), len(points), len(positions))
    return links


# =========================
# Evaluation
# =========================

def site_array(site: Site, carrier_hz: float, element_pattern: str = "isotropic") -> UpaArray:
    return UpaArray.for_aperture(
        site.aperture_side_m, carrier_hz, site.azimuth_deg, site.downtilt_deg, element_pattern
    )


def link_power_dbm(
    paths: Sequence[PathComponent],
    site: Site,
    array: UpaArray,
    steer_units: np.ndarray,
    carrier_hz: float,
    materials,
    cfg: TraceConfig,
    rx_gain_db: float = RX_GAIN_DBI,
) -> np.ndarray:
    """Received power for each steering direction, shape (n_steer,)."""
    if not paths:
        return np.full(len(steer_units), -np.inf)
    gains = np.array([component_gain_db(pc, carrier_hz, materials, cfg) for pc in paths])
    departures = np.array([pc.departure_dir for pc in paths])
    levels = site.tx_power_dbm + gain_matrix_db(array, steer_units, departures) + rx_gain_db + gains[None, :]
    if cfg.coherent:
        phases = np.array([component_phase_rad(pc, carrier_hz, materials, cfg) for pc in paths])
        return coherent_sum_dbm(levels, np.broadcast_to(phases, levels.shape), axis=1)
    return power_sum_dbm(levels, axis=1)


def grid_cells(scene: Scene, grid: GridConfig, rx_height_m: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Cell-centre coordinates (n_y, n_x) and the mask of cells left out of coverage."""
    n_x = max(1, int(round(grid.size[0] / grid.cell_m)))
    n_y = max(1, int(round(grid.size[1] / grid.cell_m)))
    xs = grid.origin[0] + (np.arange(n_x) + 0.5) * grid.cell_m
    ys = grid.origin[1] + (np.arange(n_y) + 0.5) * grid.cell_m
    gx, gy = np.meshgrid(xs, ys)
    excluded = scene.inside_buildings(gx, gy, rx_height_m)
    lo, hi = scene.bounds_min, scene.bounds_max
    excluded |= (gx < lo[0]) | (gx > hi[0]) | (gy < lo[1]) | (gy > hi[1])
    return gx, gy, excluded


def compute_coverage_maps(
    scene: Scene,
    deployment: Deployment,
    carriers: Sequence[Tuple[float, float]],
    steering_set: Sequence[SteeringDirection],
    rx_height_m: float = 1.5,
    *,
    grid: Optional[GridConfig] = None,
    trace: Optional[TraceConfig] = None,
    noise_figure_db: float = 9.0,
    element_pattern: str = "isotropic",
    max_link_distance_m: Optional[float] = None,
    workers: int = 1,
) -> List[CoverageMap]:
    """One map per (carrier_hz, bandwidth_hz); geometry is traced once for all of them."""
    if len(deployment) == 0:
        raise EmptyDeployment("deployment has no gNBs")
    if not steering_set:
        raise DomainError("steering set is empty")
    if not rx_height_m > 0:
        raise DomainError(f"receiver height must be positive, got {rx_height_m}")
    grid = grid or GridConfig()
    trace = trace or TraceConfig()

    gx, gy, excluded = grid_cells(scene, grid, rx_height_m)
    n_y, n_x = gx.shape
    outdoor = np.flatnonzero(~excluded.ravel())
    points = np.column_stack([gx.ravel()[outdoor], gy.ravel()[outdoor], np.full(len(outdoor), rx_height_m)])
    links = trace_links(scene, deployment, points, trace, max_link_distance_m, workers, point_ids=outdoor)

    steer_units = np.array([d.unit() for d in steering_set])
    maps = []
    for carrier_hz, bandwidth_hz in carriers:
        noise = noise_power_dbm(LinkParams(bandwidth_hz=bandwidth_hz, noise_figure_db=noise_figure_db))
        arrays = [site_array(site, carrier_hz, element_pattern) for site in deployment.sites]
        best = np.full(n_y * n_x, -np.inf)
        best_gnb = np.full(n_y * n_x, -1, dtype=int)
        best_steer = np.full(n_y * n_x, -1, dtype=int)
        for (pid, s), paths in links.items():
            if not paths:
                continue
            site = deployment.sites[s]
            snr = snr_db(link_power_dbm(paths, site, arrays[s], steer_units, carrier_hz, scene.materials, trace), noise)
            k = int(np.argmax(snr))
            if snr[k] > best[pid] or (snr[k] == best[pid] and best_gnb[pid] >= 0 and site.id < best_gnb[pid]):
                best[pid], best_gnb[pid], best_steer[pid] = snr[k], site.id, k
        cov = CoverageMap(
            origin=tuple(grid.origin),
            cell_m=grid.cell_m,
            n_x=n_x,
            n_y=n_y,
            snr_db=best.reshape(n_y, n_x),
            best_gnb=best_gnb.reshape(n_y, n_x),
            best_steering=best_steer.reshape(n_y, n_x),
            excluded=excluded,
            carrier_hz=carrier_hz,
            bandwidth_hz=bandwidth_hz,
            n_elements=arrays[0].n_elements,
        )
        logger.info(
            "Coverage %.3f GHz: %d/%d outdoor cells at SNR >= 0 dB",
            carrier_hz / 1e9, int(cov.covered().sum()), len(outdoor),
        )
        maps.append(cov)
    return maps


def compute_coverage_map(
    scene: Scene,
    deployment: Deployment,
    carrier_hz: float,
    bandwidth_hz: float,
    steering_set: Sequence[SteeringDirection],
    rx_height_m: float = 1.5,
    **kwargs,
) -> CoverageMap:
    return compute_coverage_maps(scene, deployment, [(carrier_hz, bandwidth_hz)], steering_set, rx_height_m, **kwargs)[0]


# =========================
# Metrics
# =========================

def coverage_ratio(map_f: CoverageMap, map_ref: CoverageMap, threshold_db: float = 0.0) -> float:
    if not map_f.same_grid(map_ref):
        raise GridMismatch("coverage maps are defined on different grids")
    ref = int(map_ref.covered(threshold_db).sum())
    if ref == 0:
        raise NoReferenceCoverage(f"reference map at {map_ref.carrier_hz:g} Hz covers no cells")
    return int(map_f.covered(threshold_db).sum()) / ref


def throughput_stats(cov: CoverageMap, threshold_db: float = 0.0) -> ThroughputStats:
    snr = cov.snr_db[cov.covered(threshold_db)]
    if snr.size == 0:
        raise NoCoveredCells(f"no covered cells at {cov.carrier_hz:g} Hz")
    rates = shannon_rate_bps(cov.bandwidth_hz, snr)
    return ThroughputStats(
        mean=float(np.mean(rates)),
        median=float(np.median(rates)),
        p5=float(np.percentile(rates, 5)),
        p95=float(np.percentile(rates, 95)),
        covered_cells=int(snr.size),
    )


def coverage_summary(maps: Sequence[CoverageMap], reference: CoverageMap, threshold_db: float = 0.0) -> List[CoverageSummaryRow]:
    ref_stats = throughput_stats(reference, threshold_db)
    rows = []
    for cov in maps:
        try:
            stats = throughput_stats(cov, threshold_db)
        except NoCoveredCells:
            logger.warning("No covered cells at %.3f GHz; rate statistics left empty", cov.carrier_hz / 1e9)
            stats = ThroughputStats(mean=math.nan, median=math.nan, p5=math.nan, p95=math.nan, covered_cells=0)
        rows.append(
            CoverageSummaryRow(
                carrier_hz=cov.carrier_hz,
                bandwidth_hz=cov.bandwidth_hz,
                n_elements=cov.n_elements,
                covered_cells=stats.covered_cells,
                outdoor_cells=int((~cov.excluded).sum()),
                coverage_ratio=coverage_ratio(cov, reference, threshold_db),
                mean_rate_bps=stats.mean,
                median_rate_bps=stats.median,
                p5_rate_bps=stats.p5,
                p95_rate_bps=stats.p95,
                mean_rate_ratio=stats.mean / ref_stats.mean,
            )
        )
    return rows
