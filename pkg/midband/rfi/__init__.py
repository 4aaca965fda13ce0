from midband.rfi.schemas import Classification, Incumbent, RfiReport, SuppressionPlan
from midband.rfi.service import (
    aggregate_inr_db,
    classify_gnbs,
    plan_suppression,
    rank_interferers,
    run_monte_carlo,
    spectrum_average_inr_db,
)
