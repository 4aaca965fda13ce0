from midband.coverage.schemas import CoverageMap, Deployment, Gnb, Site, ThroughputStats
from midband.coverage.service import (
    compute_coverage_map,
    compute_coverage_maps,
    coverage_ratio,
    coverage_summary,
    throughput_stats,
    trace_links,
)
from midband.coverage.store import load_deployment
