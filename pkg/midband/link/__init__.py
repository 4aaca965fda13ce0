from midband.link.budget import (
    LinkParams,
    dbm_to_mw,
    default_bandwidth_hz,
    frequency_range,
    inr_db,
    mw_to_dbm,
    noise_power_dbm,
    power_sum_dbm,
    shannon_rate_bps,
    snr_db,
)
