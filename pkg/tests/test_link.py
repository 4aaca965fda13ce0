"""Noise power, SNR/INR and Shannon rate."""

import math

import numpy as np
import pytest

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


class TestNoisePower:
    def test_fr1_bandwidth(self):
        assert noise_power_dbm(LinkParams(bandwidth_hz=100e6, noise_figure_db=9.0)) == pytest.approx(-85.00, abs=0.01)

    def test_wide_bandwidth(self):
        assert noise_power_dbm(LinkParams(bandwidth_hz=400e6, noise_figure_db=9.0)) == pytest.approx(-78.98, abs=0.01)

    def test_thermal_density(self):
        assert noise_power_dbm(LinkParams(bandwidth_hz=1.0, noise_figure_db=0.0)) == pytest.approx(-174.0)

    def test_increasing_in_bandwidth_and_noise_figure(self):
        base = noise_power_dbm(LinkParams(bandwidth_hz=100e6))
        assert noise_power_dbm(LinkParams(bandwidth_hz=200e6)) > base
        assert noise_power_dbm(LinkParams(bandwidth_hz=100e6, noise_figure_db=10.0)) > base

    def test_invalid_params(self):
        with pytest.raises(ValueError):
            LinkParams(bandwidth_hz=0.0)
        with pytest.raises(ValueError):
            LinkParams(bandwidth_hz=1e6, noise_figure_db=-1.0)


class TestRatios:
    def test_signal_at_noise(self):
        assert snr_db(-85.0, -85.0) == 0.0

    def test_protection_threshold(self):
        assert inr_db(-88.98, -78.98) == pytest.approx(-10.0)

    def test_no_path(self):
        assert snr_db(-math.inf, -85.0) == -math.inf
        assert inr_db(-math.inf, -85.0) == -math.inf

    def test_inr_round_trip(self):
        for x in (-120.5, -60.0, 3.25):
            assert inr_db(x, -78.98) + -78.98 == pytest.approx(x, abs=1e-12)


class TestShannon:
    def test_zero_db(self):
        assert shannon_rate_bps(100e6, 0.0) == pytest.approx(1.0e8)

    def test_fifteen_db(self):
        assert shannon_rate_bps(400e6, 15.0) == pytest.approx(2.011e9, rel=1e-3)

    def test_no_signal(self):
        assert shannon_rate_bps(400e6, -math.inf) == 0.0

    def test_linear_in_bandwidth(self):
        snr = np.array([-3.0, 0.0, 12.5])
        np.testing.assert_allclose(shannon_rate_bps(400e6, snr), 4.0 * shannon_rate_bps(100e6, snr))

    def test_increasing_in_snr(self):
        rates = shannon_rate_bps(100e6, np.linspace(-20, 40, 61))
        assert np.all(np.diff(rates) > 0)

    def test_bad_bandwidth(self):
        with pytest.raises(ValueError):
            shannon_rate_bps(0.0, 10.0)


class TestFrequencyRanges:
    @pytest.mark.parametrize(
        "carrier_hz, fr, bandwidth",
        [(3.5e9, "FR1", 100e6), (7.125e9, "FR3", 400e6), (12.7e9, "FR3", 400e6), (24.25e9, "FR2", 400e6), (28e9, "FR2", 400e6)],
    )
    def test_ranges_and_default_bandwidth(self, carrier_hz, fr, bandwidth):
        assert frequency_range(carrier_hz) == fr
        assert default_bandwidth_hz(carrier_hz) == bandwidth


class TestPowerSum:
    def test_two_equal_levels(self):
        assert power_sum_dbm([-70.0, -70.0]) == pytest.approx(-66.99, abs=0.01)

    def test_empty_and_silent(self):
        assert power_sum_dbm([]) == -math.inf
        assert power_sum_dbm([-math.inf, -math.inf]) == -math.inf

    def test_ignores_silent_terms(self):
        assert power_sum_dbm([-math.inf, -50.0]) == pytest.approx(-50.0)

    def test_no_underflow_far_below_noise(self):
        assert power_sum_dbm([-400.0, -400.0]) == pytest.approx(-400.0 + 10 * math.log10(2))

    def test_along_axis(self):
        levels = np.array([[-70.0, -70.0, -math.inf], [-math.inf, -math.inf, -math.inf]])
        out = power_sum_dbm(levels, axis=1)
        assert out[0] == pytest.approx(-66.9897, abs=1e-4)
        assert out[1] == -math.inf

    def test_conversions(self):
        assert dbm_to_mw(0.0) == pytest.approx(1.0)
        assert dbm_to_mw(30.0) == pytest.approx(1000.0)
        assert mw_to_dbm(0.0) == -math.inf
        assert mw_to_dbm(100.0) == pytest.approx(20.0)
