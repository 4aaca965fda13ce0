import logging
from datetime import datetime, timezone
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402

from midband.core.output import atomic_path, write_csv, write_json  # noqa: E402
from midband.coverage.schemas import Deployment  # noqa: E402
from midband.rfi.schemas import Classification, Incumbent, RfiReport, SuppressionPlan  # noqa: E402
from midband.rfi.service import population_mean_inr_db, silent_gnbs, spectrum_average_inr_db  # noqa: E402

logger = logging.getLogger(__name__)

REPORT_COLUMNS = ["gnb_id", "carrier_hz", "worst_inr_db", "mean_inr_db", "mean_interference_dbm", "harmful_flag"]
INR_COLORMAP = "inferno"
INR_VMIN_DB = -40.0
INR_VMAX_DB = 10.0


def report_frame(report: RfiReport, threshold_db: float) -> pd.DataFrame:
    rows = []
    for r, gnb_id in enumerate(report.gnb_ids):
        harmful = bool(np.any(report.worst_inr_db[r] >= threshold_db))
        for c, carrier_hz in enumerate(report.carriers):
            rows.append(
                {
                    "gnb_id": gnb_id,
                    "carrier_hz": carrier_hz,
                    "worst_inr_db": report.worst_inr_db[r, c],
                    "mean_inr_db": report.mean_inr_db[r, c],
                    "mean_interference_dbm": report.mean_interference_dbm[r, c],
                    "harmful_flag": int(harmful),
                }
            )
    return pd.DataFrame(rows, columns=REPORT_COLUMNS)


def write_report_csv(report: RfiReport, out_dir: Path, threshold_db: float = -10.0) -> Path:
    """The first comment line carries a timestamp; everything after it is reproducible."""
    header = [
        f"generated {datetime.now(timezone.utc).isoformat(timespec='seconds')}",
        f"seed={report.seed} iterations={report.iterations} threshold_db={threshold_db:g}",
    ]
    frame = report_frame(report, threshold_db)
    frame["carrier_hz"] = frame["carrier_hz"].map(lambda v: f"{v:.0f}")
    return write_csv(Path(out_dir) / "rfi_report.csv", frame, header_lines=header)


def write_links_csv(report: RfiReport, out_dir: Path) -> Path:
    frame = pd.DataFrame(
        [{"gnb_id": d.gnb_id, "distance_m": d.distance_m, "los": int(d.los), "n_paths": d.n_paths} for d in report.links],
        columns=["gnb_id", "distance_m", "los", "n_paths"],
    )
    return write_csv(Path(out_dir) / "rfi_links.csv", frame, float_format="%.3f")


def write_classification(classification: Classification, out_dir: Path) -> Path:
    return write_json(Path(out_dir) / "rfi_classification.json", classification.model_dump())


def write_suppression_csv(plans: Sequence[SuppressionPlan], out_dir: Path) -> Path:
    frame = pd.DataFrame(
        [
            {
                "carrier_hz": f"{p.carrier_hz:.0f}",
                "k": len(p.suppressed_ids),
                "suppressed_ids": ";".join(str(g) for g in p.suppressed_ids),
                "initial_aggregate_inr_db": p.initial_aggregate_inr_db,
                "aggregate_inr_db": p.aggregate_inr_db,
                "initial_worst_case_aggregate_inr_db": p.initial_worst_case_aggregate_inr_db,
                "worst_case_aggregate_inr_db": p.worst_case_aggregate_inr_db,
                "target_aggregate_inr_db": p.target_aggregate_inr_db,
            }
            for p in plans
        ]
    )
    return write_csv(Path(out_dir) / "rfi_suppression.csv", frame)


def _marker_sizes(mean_dbm: np.ndarray) -> np.ndarray:
    finite = np.isfinite(mean_dbm)
    sizes = np.full(mean_dbm.shape, 6.0)
    if finite.any():
        lo = float(np.min(mean_dbm[finite]))
        hi = float(np.max(mean_dbm[finite]))
        span = hi - lo if hi > lo else 1.0
        sizes[finite] = 10.0 + 290.0 * (mean_dbm[finite] - lo) / span
    return sizes


def _scatter(
    report: RfiReport,
    deployment: Deployment,
    incumbent: Incumbent,
    inr: np.ndarray,
    power_dbm: np.ndarray,
    title: str,
    target: Path,
    harmful_ids: Sequence[int],
) -> Path:
    xy = np.array([deployment.site(g).position[:2] for g in report.gnb_ids])
    fig, ax = plt.subplots(figsize=(8, 7))
    try:
        sc = ax.scatter(
            xy[:, 0], xy[:, 1], s=_marker_sizes(power_dbm), c=np.clip(inr, INR_VMIN_DB, None),
            cmap=INR_COLORMAP, vmin=INR_VMIN_DB, vmax=INR_VMAX_DB, edgecolors="k", linewidths=0.4,
        )
        flagged = set(harmful_ids)
        harmful = [i for i, g in enumerate(report.gnb_ids) if g in flagged]
        if harmful:
            ax.scatter(xy[harmful, 0], xy[harmful, 1], s=320, facecolors="none", edgecolors="red", linewidths=1.2)
        ax.plot(incumbent.position[0], incumbent.position[1], marker="*", color="cyan", markersize=16, markeredgecolor="k")
        fig.colorbar(sc, ax=ax, label="mean INR (dB)", extend="min")
        ax.set_aspect("equal")
        ax.set_xlabel("x (m)")
        ax.set_ylabel("y (m)")
        ax.set_title(title)
        with atomic_path(target) as tmp:
            fig.savefig(tmp, format="png", dpi=120, bbox_inches="tight", metadata={"Software": None})
    finally:
        plt.close(fig)
    write_json(
        target.with_name(target.name + ".json"),
        {"colormap": INR_COLORMAP, "vmin": INR_VMIN_DB, "vmax": INR_VMAX_DB, "units": "dB", "quantity": "mean_inr"},
    )
    return target


def render_rfi_scatter(
    report: RfiReport,
    deployment: Deployment,
    incumbent: Incumbent,
    carrier_hz: float,
    out_dir: Path,
    harmful_ids: Sequence[int] = (),
) -> Path:
    """gNB markers sized by mean interference power and coloured by mean INR."""
    c = report.carrier_index(carrier_hz)
    return _scatter(
        report, deployment, incumbent,
        report.mean_inr_db[:, c], report.mean_interference_dbm[:, c],
        f"Mean RFI per gNB at {carrier_hz / 1e9:g} GHz ({report.iterations} iterations)",
        Path(out_dir) / f"rfi_{carrier_hz / 1e6:g}.png",
        harmful_ids,
    )


def render_spectrum_average_scatter(
    report: RfiReport,
    deployment: Deployment,
    incumbent: Incumbent,
    out_dir: Path,
    harmful_ids: Sequence[int] = (),
) -> Path:
    inr = np.array([spectrum_average_inr_db(report, g) for g in report.gnb_ids])
    return _scatter(
        report, deployment, incumbent,
        inr, inr,
        f"Mean RFI per gNB averaged over {len(report.carriers)} carriers",
        Path(out_dir) / "rfi_spectrum_average.png",
        harmful_ids,
    )


def format_report(report: RfiReport, classification: Classification, plans: Sequence[SuppressionPlan]) -> str:
    lines = [
        f"RFI at incumbent: {len(report.gnb_ids)} gNBs, {report.iterations} iterations, seed {report.seed}",
        f"harmful (worst INR >= {classification.threshold_db:g} dB at any carrier): "
        f"{len(classification.harmful_ids)} -> {classification.harmful_ids}",
    ]
    for c, carrier_hz in enumerate(report.carriers):
        heard = report.mean_inr_db[:, c][np.isfinite(report.mean_inr_db[:, c])]
        heard_mean = f"{np.mean(heard):7.2f} dB" if heard.size else "    n/a"
        lines.append(
            f"  {carrier_hz / 1e9:7.3f} GHz  max worst INR {np.max(report.worst_inr_db[:, c]):7.2f} dB  "
            f"population mean INR {population_mean_inr_db(report, carrier_hz):7.2f} dB (linear)  "
            f"mean over {heard.size} heard gNB(s) {heard_mean}  "
            f"no path: {len(silent_gnbs(report, carrier_hz))}"
        )
    for p in plans:
        lines.append(
            f"  suppress {len(p.suppressed_ids)} at {p.carrier_hz / 1e9:g} GHz {p.suppressed_ids}: aggregate "
            f"{p.initial_aggregate_inr_db:.2f} -> {p.aggregate_inr_db:.2f} dB "
            f"(worst case {p.initial_worst_case_aggregate_inr_db:.2f} -> {p.worst_case_aggregate_inr_db:.2f} dB)"
        )
    return "\n".join(lines)
