"""Monte Carlo interference at a fixed incumbent under random gNB beam steering."""

import logging
import math
from typing import Iterable, List, Literal, Optional, Sequence, Tuple

import numpy as np

from midband.antenna.upa import gain_matrix_db, random_steering
from midband.core.errors import DomainError, Infeasible, UnknownCarrier
from midband.coverage.schemas import Deployment
from midband.coverage.service import site_array, trace_links
from midband.link.budget import LinkParams, inr_db, noise_power_dbm, power_sum_dbm
from midband.raytrace.propagation import coherent_sum_dbm, component_gain_db, component_phase_rad
from midband.raytrace.schemas import PathKind, TraceConfig
from midband.rfi.schemas import Classification, Incumbent, LinkDiagnostics, RfiReport, SuppressionPlan
from midband.scene.store import Scene

logger = logging.getLogger(__name__)


def gnb_rng(seed: int, gnb_id: int) -> np.random.Generator:
    """Independent stream per gNB id, so results do not depend on scheduling or on the rest of the deployment."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(gnb_id,)))


def draw_steering(
    seed: int, n_iter: int, gnb_ids: Sequence[int], elevation_range_deg: Tuple[float, float] = (-30.0, 0.0)
) -> np.ndarray:
    """Unit steering vectors, shape (n_iter, len(gnb_ids), 3); shared by every carrier.

    Iteration i of a gNB draws the same beam however many iterations are run.
    """
    lo, hi = (math.radians(v) for v in elevation_range_deg)
    draws = [random_steering(gnb_rng(seed, g), n_iter, lo, hi) for g in gnb_ids]
    return np.stack(draws, axis=1).reshape(n_iter, len(draws), 3)


def run_monte_carlo(
    scene: Scene,
    deployment: Deployment,
    incumbent: Incumbent,
    carriers: Sequence[float],
    n_iter: int = 500,
    seed: int = 0,
    *,
    trace: Optional[TraceConfig] = None,
    element_pattern: str = "isotropic",
    elevation_range_deg: Tuple[float, float] = (-30.0, 0.0),
    workers: int = 1,
) -> RfiReport:
    if len(deployment) == 0:
        raise DomainError("deployment has no gNBs")
    if not carriers:
        raise DomainError("no carriers to evaluate")
    if n_iter < 1:
        raise DomainError(f"n_iter must be >= 1, got {n_iter}")
    trace = trace or TraceConfig()

    links = trace_links(scene, deployment, np.asarray([incumbent.position]), trace, workers=workers)
    steer = draw_steering(seed, n_iter, deployment.ids, elevation_range_deg)

    n_g, n_c = len(deployment), len(carriers)
    worst = np.full((n_g, n_c), -np.inf)
    mean = np.full((n_g, n_c), -np.inf)
    noise = []
    for c, carrier_hz in enumerate(carriers):
        if carrier_hz not in incumbent.victim_bandwidth_hz:
            raise UnknownCarrier(f"no victim bandwidth configured for {carrier_hz:g} Hz")
        noise_dbm = noise_power_dbm(
            LinkParams(bandwidth_hz=incumbent.victim_bandwidth_hz[carrier_hz], noise_figure_db=incumbent.noise_figure_db)
        )
        noise.append(noise_dbm)
        for s, site in enumerate(deployment.sites):
            paths = links.get((0, s), [])
            if not paths:
                continue
            array = site_array(site, carrier_hz, element_pattern)
            gains = np.array([component_gain_db(pc, carrier_hz, scene.materials, trace) for pc in paths])
            departures = np.array([pc.departure_dir for pc in paths])
            levels = (
                site.tx_power_dbm
                + gain_matrix_db(array, steer[:, s], departures)
                + incumbent.antenna_gain_dbi
                + gains[None, :]
            )
            if trace.coherent:
                phases = np.array([component_phase_rad(pc, carrier_hz, scene.materials, trace) for pc in paths])
                received = coherent_sum_dbm(levels, np.broadcast_to(phases, levels.shape), axis=1)
            else:
                received = power_sum_dbm(levels, axis=1)
            worst[s, c] = float(np.max(received))
            # power average over iterations
            mean[s, c] = power_sum_dbm(received) - 10.0 * math.log10(n_iter)
        logger.info("RFI %.3f GHz: noise %.2f dBm, max worst INR %.2f dB",
                    carrier_hz / 1e9, noise_dbm, float(np.max(worst[:, c])) - noise_dbm)

    noise_arr = np.asarray(noise)
    diagnostics = []
    for s, site in enumerate(deployment.sites):
        paths = links.get((0, s), [])
        diagnostics.append(
            LinkDiagnostics(
                gnb_id=site.id,
                distance_m=float(np.linalg.norm(np.asarray(site.position) - np.asarray(incumbent.position))),
                los=any(pc.kind == PathKind.LOS for pc in paths),
                n_paths=len(paths),
            )
        )
    return RfiReport(
        gnb_ids=deployment.ids,
        carriers=tuple(float(c) for c in carriers),
        worst_inr_db=inr_db(worst, noise_arr[None, :]),
        mean_inr_db=inr_db(mean, noise_arr[None, :]),
        worst_interference_dbm=worst,
        mean_interference_dbm=mean,
        noise_dbm=tuple(noise),
        iterations=n_iter,
        seed=seed,
        links=tuple(diagnostics),
        protection_threshold_db=incumbent.protection_threshold_db,
    )


# =========================
# Post-processing
# =========================

def classify_gnbs(report: RfiReport, threshold_db: Optional[float] = None) -> Classification:
    """Harmful: worst-case INR at or above the threshold at any carrier.

    The threshold defaults to the incumbent protection level the report was run with.
    """
    if threshold_db is None:
        threshold_db = report.protection_threshold_db
    if not report.gnb_ids:
        raise DomainError("empty report")
    harmful_rows = np.any(report.worst_inr_db >= threshold_db, axis=1)
    return Classification(
        threshold_db=threshold_db,
        safe_ids=[g for g, h in zip(report.gnb_ids, harmful_rows) if not h],
        harmful_ids=[g for g, h in zip(report.gnb_ids, harmful_rows) if h],
    )


def rank_interferers(report: RfiReport, carrier_hz: float) -> List[int]:
    """gNB ids by mean interference power, strongest first; ties by ascending id."""
    c = report.carrier_index(carrier_hz)
    power = report.mean_interference_dbm[:, c]
    rows = sorted(range(len(report.gnb_ids)), key=lambda r: (-power[r], report.gnb_ids[r]))
    return [report.gnb_ids[r] for r in rows]


def aggregate_inr_db(
    report: RfiReport,
    carrier_hz: float,
    suppressed: Iterable[int] = (),
    case: Literal["mean", "worst"] = "mean",
) -> float:
    c = report.carrier_index(carrier_hz)
    power = report.mean_interference_dbm if case == "mean" else report.worst_interference_dbm
    drop = set(suppressed)
    active = [power[r, c] for r, g in enumerate(report.gnb_ids) if g not in drop]
    return float(inr_db(power_sum_dbm(active), report.noise_dbm[c]))


def plan_suppression(report: RfiReport, carrier_hz: float, target_aggregate_inr_db: float = -10.0) -> SuppressionPlan:
    """Smallest ranked prefix whose silencing brings the mean aggregate INR to the target."""
    ranked = rank_interferers(report, carrier_hz)
    for k in range(len(ranked) + 1):
        agg = aggregate_inr_db(report, carrier_hz, ranked[:k])
        if agg <= target_aggregate_inr_db:
            plan = SuppressionPlan(
                carrier_hz=carrier_hz,
                target_aggregate_inr_db=target_aggregate_inr_db,
                suppressed_ids=ranked[:k],
                initial_aggregate_inr_db=aggregate_inr_db(report, carrier_hz),
                aggregate_inr_db=agg,
                worst_case_aggregate_inr_db=aggregate_inr_db(report, carrier_hz, ranked[:k], case="worst"),
                initial_worst_case_aggregate_inr_db=aggregate_inr_db(report, carrier_hz, case="worst"),
            )
            logger.info("Suppression at %.3f GHz: %d gNB(s) -> aggregate INR %.2f dB",
                        carrier_hz / 1e9, k, agg)
            return plan
    raise Infeasible(f"aggregate INR target {target_aggregate_inr_db} dB unreachable at {carrier_hz:g} Hz")


def spectrum_average_inr_db(report: RfiReport, gnb_id: int) -> float:
    """Mean INR of one gNB averaged (in dB) over every carrier in the report."""
    return float(np.mean(report.mean_inr_db[report.row(gnb_id)]))


def population_mean_inr_db(report: RfiReport, carrier_hz: float) -> float:
    """Mean interference per gNB averaged in linear power over the whole deployment, as INR.

    gNBs without a path count as zero power, so the result stays finite while any gNB is heard.
    """
    c = report.carrier_index(carrier_hz)
    power = power_sum_dbm(report.mean_interference_dbm[:, c]) - 10.0 * math.log10(len(report.gnb_ids))
    return float(inr_db(power, report.noise_dbm[c]))


def silent_gnbs(report: RfiReport, carrier_hz: float) -> List[int]:
    """gNBs with no propagation path to the incumbent at this carrier."""
    c = report.carrier_index(carrier_hz)
    return [g for g, v in zip(report.gnb_ids, report.mean_inr_db[:, c]) if not np.isfinite(v)]
