import logging
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402

from midband.core.output import atomic_path, write_csv, write_json  # noqa: E402
from midband.coverage.schemas import CoverageMap, CoverageSummaryRow  # noqa: E402
from midband.link.budget import shannon_rate_bps  # noqa: E402

logger = logging.getLogger(__name__)

# fixed ramp, echoed in the PNG sidecar
SNR_COLORMAP = "viridis"
SNR_VMIN_DB = -10.0
SNR_VMAX_DB = 40.0

COVERAGE_COLUMNS = ["cell_x_m", "cell_y_m", "snr_db", "best_gnb", "rate_bps"]


def coverage_file_stem(carrier_hz: float) -> str:
    return f"coverage_{carrier_hz / 1e6:g}"


def coverage_frame(cov: CoverageMap) -> pd.DataFrame:
    """Outdoor cells in row-major order (y outer, x inner)."""
    gx, gy = cov.cell_centers()
    keep = ~cov.excluded
    snr = cov.snr_db[keep]
    return pd.DataFrame(
        {
            "cell_x_m": gx[keep],
            "cell_y_m": gy[keep],
            "snr_db": snr,
            "best_gnb": cov.best_gnb[keep].astype(int),
            "rate_bps": shannon_rate_bps(cov.bandwidth_hz, snr),
        },
        columns=COVERAGE_COLUMNS,
    )


def write_coverage_csv(cov: CoverageMap, out_dir: Path) -> Path:
    return write_csv(Path(out_dir) / f"{coverage_file_stem(cov.carrier_hz)}.csv", coverage_frame(cov))


def render_coverage_png(cov: CoverageMap, out_dir: Path) -> Path:
    target = Path(out_dir) / f"{coverage_file_stem(cov.carrier_hz)}.png"
    data = np.where(cov.excluded, np.nan, np.clip(cov.snr_db, SNR_VMIN_DB - 1.0, None))
    extent = (
        cov.origin[0],
        cov.origin[0] + cov.n_x * cov.cell_m,
        cov.origin[1],
        cov.origin[1] + cov.n_y * cov.cell_m,
    )
    cmap = plt.get_cmap(SNR_COLORMAP).copy()
    cmap.set_bad("lightgray")
    cmap.set_under("black")
    fig, ax = plt.subplots(figsize=(8, 7))
    try:
        im = ax.imshow(
            data, origin="lower", extent=extent, cmap=cmap,
            vmin=SNR_VMIN_DB, vmax=SNR_VMAX_DB, interpolation="nearest",
        )
        fig.colorbar(im, ax=ax, label="SNR (dB)", extend="both")
        ax.set_xlabel("x (m)")
        ax.set_ylabel("y (m)")
        ax.set_title(f"Best-beam SNR at {cov.carrier_hz / 1e9:g} GHz, {cov.bandwidth_hz / 1e6:g} MHz")
        with atomic_path(target) as tmp:
            fig.savefig(tmp, format="png", dpi=120, bbox_inches="tight", metadata={"Software": None})
    finally:
        plt.close(fig)
    write_json(
        target.with_name(target.name + ".json"),
        {
            "colormap": SNR_COLORMAP,
            "vmin": SNR_VMIN_DB,
            "vmax": SNR_VMAX_DB,
            "units": "dB",
            "quantity": "snr",
            "carrier_hz": cov.carrier_hz,
            "excluded_color": "lightgray",
            "below_range_color": "black",
        },
    )
    return target


def write_summary(rows: Sequence[CoverageSummaryRow], out_dir: Path) -> Path:
    frame = pd.DataFrame([r.model_dump() for r in rows])
    return write_csv(Path(out_dir) / "coverage_summary.csv", frame)


def format_summary(rows: Sequence[CoverageSummaryRow], reference_hz: float) -> str:
    lines = [
        f"{'carrier GHz':>11} {'BW MHz':>7} {'N':>4} {'covered':>8} {'ratio':>6} "
        f"{'mean Mbps':>10} {'p5 Mbps':>9} {'p95 Mbps':>9} {'x ref':>6}"
    ]
    for r in rows:
        lines.append(
            f"{r.carrier_hz / 1e9:>11.3f} {r.bandwidth_hz / 1e6:>7.0f} {r.n_elements:>4d} {r.covered_cells:>8d} "
            f"{r.coverage_ratio:>6.3f} {r.mean_rate_bps / 1e6:>10.1f} {r.p5_rate_bps / 1e6:>9.1f} "
            f"{r.p95_rate_bps / 1e6:>9.1f} {r.mean_rate_ratio:>6.2f}"
        )
    lines.append(f"coverage ratio and rate ratio are relative to {reference_hz / 1e9:g} GHz")
    return "\n".join(lines)
