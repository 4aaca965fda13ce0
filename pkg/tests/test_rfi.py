"""Monte Carlo interference, classification and suppression planning."""

import dataclasses
import itertools
import json
import math

import numpy as np
import pandas as pd
import pytest

from midband.core.errors import DomainError, UnknownCarrier
from midband.coverage.schemas import Deployment
from midband.link.budget import power_sum_dbm
from midband.raytrace.propagation import free_space_path_loss_db
from midband.raytrace.schemas import TraceConfig
from midband.rfi.render import (
    format_report,
    render_rfi_scatter,
    render_spectrum_average_scatter,
    write_classification,
    write_links_csv,
    write_report_csv,
    write_suppression_csv,
)
from midband.rfi.schemas import Incumbent, RfiReport
from midband.rfi.service import (
    aggregate_inr_db,
    classify_gnbs,
    draw_steering,
    plan_suppression,
    population_mean_inr_db,
    rank_interferers,
    run_monte_carlo,
    silent_gnbs,
    spectrum_average_inr_db,
)
from tests.conftest import site

CARRIER = 12.7e9
INCUMBENT = Incumbent(position=(100.0, 0.0, 20.0), victim_bandwidth_hz={3.5e9: 100e6, 12.7e9: 400e6})


def _report(mean_dbm, worst_dbm=None, noise_dbm=(-90.0,), carriers=(CARRIER,), ids=None) -> RfiReport:
    mean = np.asarray(mean_dbm, dtype=float).reshape(len(mean_dbm), -1)
    worst = mean + 3.0 if worst_dbm is None else np.asarray(worst_dbm, dtype=float).reshape(mean.shape)
    noise = np.asarray(noise_dbm, dtype=float)
    return RfiReport(
        gnb_ids=tuple(ids) if ids is not None else tuple(range(1, len(mean) + 1)),
        carriers=tuple(carriers),
        worst_inr_db=worst - noise[None, :],
        mean_inr_db=mean - noise[None, :],
        worst_interference_dbm=worst,
        mean_interference_dbm=mean,
        noise_dbm=tuple(noise_dbm),
        iterations=100,
        seed=0,
    )


class TestSteeringDraws:
    def test_shape_and_sector(self):
        steer = draw_steering(3, 50, range(1, 8), (-30.0, 0.0))
        assert steer.shape == (50, 7, 3)
        np.testing.assert_allclose(np.linalg.norm(steer, axis=2), 1.0, atol=1e-12)
        assert np.all(steer[..., 2] <= 1e-12)
        assert np.all(steer[..., 2] >= math.sin(math.radians(-30.0)) - 1e-12)

    def test_per_iteration_streams(self):
        """Iteration i draws the same beams however many iterations are run."""
        np.testing.assert_array_equal(draw_steering(5, 4, [1, 2, 3]), draw_steering(5, 9, [1, 2, 3])[:4])
        assert not np.array_equal(draw_steering(5, 4, [1, 2, 3]), draw_steering(6, 4, [1, 2, 3]))

    def test_streams_follow_the_gnb_id(self):
        full = draw_steering(5, 20, [1, 2, 3, 4])
        np.testing.assert_array_equal(draw_steering(5, 20, [4, 2]), full[:, [3, 1]])
        assert not np.array_equal(full[:, 0], full[:, 1])


class TestMonteCarlo:
    def test_single_element_is_beam_independent(self, free_space, single_site_deployment):
        report = run_monte_carlo(free_space, single_site_deployment, INCUMBENT, [3.5e9], n_iter=1)
        assert report.worst_inr_db[0, 0] == pytest.approx(report.mean_inr_db[0, 0], abs=1e-9)
        many = run_monte_carlo(free_space, single_site_deployment, INCUMBENT, [3.5e9], n_iter=20)
        assert many.worst_inr_db[0, 0] == pytest.approx(many.mean_inr_db[0, 0], abs=1e-9)
        d = math.dist((0.0, 0.0, 10.0), INCUMBENT.position)
        assert report.worst_interference_dbm[0, 0] == pytest.approx(30.0 - free_space_path_loss_db(d, 3.5e9), abs=1e-9)

    def test_same_seed_same_report(self, free_space):
        deployment = Deployment((site(1, (0.0, 0.0, 10.0)), site(2, (0.0, 50.0, 12.0), azimuth_deg=-45.0)))
        a = run_monte_carlo(free_space, deployment, INCUMBENT, [CARRIER], n_iter=50, seed=11)
        b = run_monte_carlo(free_space, deployment, INCUMBENT, [CARRIER], n_iter=50, seed=11)
        assert a.worst_inr_db.tobytes() == b.worst_inr_db.tobytes()
        assert a.mean_inr_db.tobytes() == b.mean_inr_db.tobytes()
        c = run_monte_carlo(free_space, deployment, INCUMBENT, [CARRIER], n_iter=50, seed=12)
        assert not np.array_equal(a.mean_inr_db, c.mean_inr_db)

    def test_array_worst_case_bounded_by_peak_gain(self, free_space, single_site_deployment):
        report = run_monte_carlo(free_space, single_site_deployment, INCUMBENT, [CARRIER], n_iter=200, seed=1)
        d = math.dist((0.0, 0.0, 10.0), INCUMBENT.position)
        friis = 30.0 - free_space_path_loss_db(d, CARRIER)
        worst = report.worst_interference_dbm[0, 0]
        mean = report.mean_interference_dbm[0, 0]
        assert mean < worst <= friis + 10 * math.log10(16) + 1e-9
        assert math.isfinite(report.mean_inr_db[0, 0])

    def test_carriers_share_the_beam_draws(self, free_space, single_site_deployment):
        both = run_monte_carlo(free_space, single_site_deployment, INCUMBENT, [3.5e9, CARRIER], n_iter=30, seed=2)
        alone = run_monte_carlo(free_space, single_site_deployment, INCUMBENT, [CARRIER], n_iter=30, seed=2)
        assert both.worst_inr_db[0, 1] == alone.worst_inr_db[0, 0]
        assert both.noise_dbm[0] == pytest.approx(-85.0, abs=0.01)

    def test_blocked_gnb_contributes_nothing(self, wall_scene, single_site_deployment):
        incumbent = Incumbent(position=(100.0, 0.0, 5.0), victim_bandwidth_hz={CARRIER: 400e6})
        trace = TraceConfig(max_reflection_order=0, enable_diffraction=False)
        report = run_monte_carlo(wall_scene, single_site_deployment, incumbent, [CARRIER], n_iter=10, trace=trace)
        assert report.worst_inr_db[0, 0] == -math.inf
        assert report.links[0].n_paths == 0
        assert not report.links[0].los

    def test_link_diagnostics(self, free_space, single_site_deployment):
        report = run_monte_carlo(free_space, single_site_deployment, INCUMBENT, [CARRIER], n_iter=2)
        link = report.links[0]
        assert (link.gnb_id, link.los, link.n_paths) == (1, True, 1)
        assert link.distance_m == pytest.approx(math.hypot(100.0, 10.0))

    def test_preconditions(self, free_space, single_site_deployment):
        with pytest.raises(DomainError):
            run_monte_carlo(free_space, Deployment(()), INCUMBENT, [CARRIER])
        with pytest.raises(DomainError):
            run_monte_carlo(free_space, single_site_deployment, INCUMBENT, [CARRIER], n_iter=0)
        with pytest.raises(DomainError):
            run_monte_carlo(free_space, single_site_deployment, INCUMBENT, [])
        with pytest.raises(UnknownCarrier):
            run_monte_carlo(free_space, single_site_deployment, INCUMBENT, [28e9], n_iter=1)


class TestClassification:
    def test_all_quiet(self):
        report = _report([-113.0] * 4, worst_dbm=[-110.0] * 4)
        result = classify_gnbs(report, -10.0)
        assert result.harmful_ids == []
        assert result.safe_ids == [1, 2, 3, 4]

    def test_one_loud(self):
        report = _report([-113.0, -100.0, -113.0], worst_dbm=[-110.0, -95.0, -110.0])
        assert classify_gnbs(report, -10.0).harmful_ids == [2]

    def test_threshold_is_inclusive(self):
        report = _report([-105.0], worst_dbm=[-100.0])
        assert classify_gnbs(report, -10.0).harmful_ids == [1]

    def test_any_carrier_is_enough(self):
        report = _report(
            [[-120.0, -120.0], [-120.0, -99.0]],
            worst_dbm=[[-115.0, -115.0], [-115.0, -95.0]],
            noise_dbm=(-90.0, -90.0),
            carriers=(7.125e9, CARRIER),
        )
        assert classify_gnbs(report, -10.0).harmful_ids == [2]

    def test_raising_threshold_shrinks_harmful_set(self):
        rng = np.random.default_rng(4)
        report = _report(rng.uniform(-130, -80, size=20))
        previous = None
        for threshold in np.linspace(-40, 10, 11):
            harmful = set(classify_gnbs(report, threshold).harmful_ids)
            if previous is not None:
                assert harmful <= previous
            previous = harmful

    def test_default_threshold_comes_from_the_incumbent(self, free_space, single_site_deployment):
        strict = dataclasses.replace(INCUMBENT, protection_threshold_db=1000.0)
        report = run_monte_carlo(free_space, single_site_deployment, strict, [CARRIER], n_iter=2)
        assert report.protection_threshold_db == 1000.0
        assert classify_gnbs(report).threshold_db == 1000.0
        assert classify_gnbs(report).harmful_ids == []
        assert classify_gnbs(report, -1000.0).harmful_ids == [1]

    def test_empty_report(self):
        empty = RfiReport((), (CARRIER,), np.empty((0, 1)), np.empty((0, 1)), np.empty((0, 1)), np.empty((0, 1)), (-90.0,), 1, 0)
        with pytest.raises(DomainError):
            classify_gnbs(empty)


class TestRanking:
    def test_descending_with_id_ties(self):
        report = _report([-100.0, -90.0, -100.0, -95.0], ids=[7, 3, 2, 9])
        assert rank_interferers(report, CARRIER) == [3, 9, 2, 7]

    def test_unknown_carrier(self):
        with pytest.raises(UnknownCarrier):
            rank_interferers(_report([-100.0]), 28e9)


class TestAggregate:
    def test_power_sum(self):
        report = _report([-100.0, -100.0])
        assert aggregate_inr_db(report, CARRIER) == pytest.approx(-10.0 + 10 * math.log10(2))
        assert aggregate_inr_db(report, CARRIER, case="worst") == pytest.approx(-7.0 + 10 * math.log10(2))

    def test_suppression_removes_terms(self):
        report = _report([-100.0, -95.0])
        assert aggregate_inr_db(report, CARRIER, suppressed=[2]) == pytest.approx(-10.0)
        assert aggregate_inr_db(report, CARRIER, suppressed=[1, 2]) == -math.inf

    def test_spectrum_average(self):
        report = _report(
            [[-100.0, -110.0]], noise_dbm=(-90.0, -90.0), carriers=(7.125e9, CARRIER)
        )
        assert spectrum_average_inr_db(report, 1) == pytest.approx(-15.0)


class TestSuppression:
    def test_nothing_to_do(self):
        plan = plan_suppression(_report([-120.0, -125.0]), CARRIER, -10.0)
        assert plan.suppressed_ids == []
        assert plan.aggregate_inr_db == plan.initial_aggregate_inr_db

    def test_three_equal_interferers(self):
        plan = plan_suppression(_report([-97.2, -97.2, -97.2]), CARRIER, -10.0)
        assert plan.suppressed_ids == [1, 2, 3]
        assert plan.initial_aggregate_inr_db == pytest.approx(-7.2 + 10 * math.log10(3))
        assert plan.aggregate_inr_db == -math.inf

    def test_reports_worst_case_alongside(self):
        plan = plan_suppression(_report([-95.0, -105.0], worst_dbm=[-90.0, -99.0]), CARRIER, -10.0)
        assert plan.suppressed_ids == [1]
        assert plan.worst_case_aggregate_inr_db == pytest.approx(-9.0)
        assert plan.initial_worst_case_aggregate_inr_db > plan.worst_case_aggregate_inr_db

    @pytest.mark.parametrize("seed", range(5))
    def test_smallest_set_matches_exhaustive_search(self, seed):
        rng = np.random.default_rng(seed)
        mean = rng.uniform(-112.0, -92.0, size=10)
        report = _report(mean)
        target = -8.0
        plan = plan_suppression(report, CARRIER, target)

        best = None
        for k in range(11):
            for subset in itertools.combinations(range(10), k):
                rest = [mean[i] for i in range(10) if i not in subset]
                if power_sum_dbm(rest) - (-90.0) <= target:
                    best = k
                    break
            if best is not None:
                break
        assert len(plan.suppressed_ids) == best
        assert plan.aggregate_inr_db <= target
        assert plan.suppressed_ids == rank_interferers(report, CARRIER)[:best]


class TestRendering:
    @pytest.fixture
    def report(self):
        return _report(
            [[-100.0, -110.0], [-95.0, -120.0], [-130.0, -125.0]],
            noise_dbm=(-85.0, -90.0),
            carriers=(3.5e9, CARRIER),
        )

    @pytest.fixture
    def deployment(self):
        return Deployment(tuple(site(g, (10.0 * g, 5.0, 10.0)) for g in (1, 2, 3)))

    def test_report_csv(self, tmp_path, report):
        path = write_report_csv(report, tmp_path, -10.0)
        lines = path.read_text(encoding="utf-8").splitlines()
        assert lines[0].startswith("# generated ")
        assert lines[2].split(",") == [
            "gnb_id", "carrier_hz", "worst_inr_db", "mean_inr_db", "mean_interference_dbm", "harmful_flag"
        ]
        frame = pd.read_csv(path, comment="#")
        assert len(frame) == 6
        assert frame["carrier_hz"].tolist() == [3500000000, 12700000000] * 3
        assert frame.loc[frame["gnb_id"] == 2, "harmful_flag"].tolist() == [1, 1]

    def test_report_csv_reproducible_after_timestamp(self, tmp_path, report):
        first = write_report_csv(report, tmp_path / "a").read_text(encoding="utf-8").splitlines()
        second = write_report_csv(report, tmp_path / "b").read_text(encoding="utf-8").splitlines()
        assert first[1:] == second[1:]

    def test_classification_and_suppression(self, tmp_path, report):
        classification = classify_gnbs(report, -10.0)
        data = json.loads(write_classification(classification, tmp_path).read_text(encoding="utf-8"))
        assert data == {"threshold_db": -10.0, "safe_ids": [1, 3], "harmful_ids": [2]}
        plans = [plan_suppression(report, c, -10.0) for c in report.carriers]
        frame = pd.read_csv(write_suppression_csv(plans, tmp_path))
        assert frame["k"].tolist() == [len(p.suppressed_ids) for p in plans]

    def test_links_csv(self, tmp_path, free_space, single_site_deployment):
        report = run_monte_carlo(free_space, single_site_deployment, INCUMBENT, [CARRIER], n_iter=2)
        frame = pd.read_csv(write_links_csv(report, tmp_path))
        assert frame.to_dict("records") == [{"gnb_id": 1, "distance_m": 100.499, "los": 1, "n_paths": 1}]

    def test_scatter_plots(self, tmp_path, report, deployment):
        per_carrier = render_rfi_scatter(report, deployment, INCUMBENT, CARRIER, tmp_path, [2])
        average = render_spectrum_average_scatter(report, deployment, INCUMBENT, tmp_path, [2])
        assert per_carrier.name == "rfi_12700.png"
        assert average.name == "rfi_spectrum_average.png"
        for path in (per_carrier, average):
            assert path.read_bytes()[:4] == b"\x89PNG"
            assert json.loads(path.with_name(path.name + ".json").read_text(encoding="utf-8"))["colormap"] == "inferno"


class TestPopulationMean:
    def test_equal_interferers(self):
        assert population_mean_inr_db(_report([-100.0] * 4), CARRIER) == pytest.approx(-10.0)

    def test_silent_gnbs_count_as_zero_power(self):
        report = _report([-100.0, -math.inf, -math.inf, -math.inf])
        assert population_mean_inr_db(report, CARRIER) == pytest.approx(-10.0 - 10.0 * math.log10(4.0))
        assert silent_gnbs(report, CARRIER) == [2, 3, 4]

    def test_linear_not_db_average(self):
        report = _report([-90.0, -110.0])
        expected = 10.0 * math.log10((1.0 + 0.01) / 2.0)
        assert population_mean_inr_db(report, CARRIER) == pytest.approx(expected)
        assert population_mean_inr_db(report, CARRIER) > float(np.mean(report.mean_inr_db))

    def test_everyone_silent(self):
        report = _report([-math.inf] * 3)
        assert population_mean_inr_db(report, CARRIER) == -math.inf
        assert silent_gnbs(report, CARRIER) == [1, 2, 3]

    def test_summary_text_reports_heard_and_silent(self):
        report = _report(
            [[-100.0, -math.inf], [-math.inf, -math.inf], [-110.0, -math.inf]],
            noise_dbm=(-90.0, -90.0),
            carriers=(3.5e9, CARRIER),
        )
        text = format_report(report, classify_gnbs(report), [])
        first, second = [line for line in text.splitlines() if " GHz " in line]
        assert "mean over 2 heard gNB(s)  -15.00 dB" in first
        assert "no path: 1" in first
        assert "n/a" in second and "no path: 3" in second
        assert "nan" not in text
