import json

import pytest

from midband.core.config import CarrierConfig, RunConfig, Settings, load_config
from midband.core.errors import ConfigError
from tests.conftest import REPO_ROOT

NO_ENV = Settings(OUTPUT_DIR=None)


def _write(tmp_path, payload, name="run.json"):
    path = tmp_path / name
    path.write_text(payload if isinstance(payload, str) else json.dumps(payload), encoding="utf-8")
    return path


MINIMAL = {"scene_path": "scene.json", "carriers": [{"carrier_hz": 3.5e9}]}


class TestLoadConfig:
    def test_defaults(self, tmp_path):
        cfg = load_config(_write(tmp_path, MINIMAL), env=NO_ENV)
        assert cfg.aperture_side_m == 0.040
        assert cfg.tx_power_dbm == 33.0
        assert cfg.downtilt_deg == 12.0
        assert cfg.rx_height_m == 1.5
        assert cfg.reference_carrier_hz == 3.5e9
        assert cfg.propagation.max_reflection_order == 2
        assert cfg.rfi is None

    def test_relative_paths_follow_the_file(self, tmp_path):
        sub = tmp_path / "configs"
        sub.mkdir()
        cfg = load_config(_write(sub, {**MINIMAL, "scene_path": "../data/s.json", "output_dir": "out"}), env=NO_ENV)
        assert cfg.scene_path == sub / "../data/s.json"
        assert cfg.output_dir == sub / "out"

    def test_absolute_paths_untouched(self, tmp_path):
        target = tmp_path / "abs" / "scene.json"
        cfg = load_config(_write(tmp_path, {**MINIMAL, "scene_path": str(target)}), env=NO_ENV)
        assert cfg.scene_path == target

    def test_precedence(self, tmp_path):
        path = _write(tmp_path, {**MINIMAL, "output_dir": "from_file"})
        assert load_config(path, env=NO_ENV).output_dir == tmp_path / "from_file"
        env = Settings(OUTPUT_DIR="/tmp/from_env")
        assert str(load_config(path, env=env).output_dir) == "/tmp/from_env"
        cfg = load_config(path, {"output_dir": "/tmp/from_flag"}, env=env)
        assert str(cfg.output_dir) == "/tmp/from_flag"

    def test_nested_overrides_merge(self, tmp_path):
        path = _write(tmp_path, {**MINIMAL, "rfi": {"incumbent_position": [1, 2, 3], "n_iter": 50}})
        cfg = load_config(path, {"rfi": {"seed": 9}, "workers": None}, env=NO_ENV)
        assert (cfg.rfi.n_iter, cfg.rfi.seed, cfg.workers) == (50, 9, 1)

    @pytest.mark.parametrize(
        "payload",
        [
            "{not json",
            "[1, 2]",
            json.dumps({"carriers": [{"carrier_hz": 3.5e9}]}),
            json.dumps({**MINIMAL, "carriers": []}),
            json.dumps({**MINIMAL, "unexpected": 1}),
            json.dumps({**MINIMAL, "grid": {"size": [0, 100]}}),
            json.dumps({**MINIMAL, "rfi": {"incumbent_position": [0, 0, 10], "elevation_min_deg": 10, "elevation_max_deg": -10}}),
        ],
    )
    def test_invalid(self, tmp_path, payload):
        with pytest.raises(ConfigError):
            load_config(_write(tmp_path, payload), env=NO_ENV)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "nope.json", env=NO_ENV)

    def test_check_paths(self, tmp_path):
        path = _write(tmp_path, MINIMAL)
        load_config(path, env=NO_ENV)
        with pytest.raises(ConfigError) as exc:
            load_config(path, check_paths=True, env=NO_ENV)
        assert exc.value.exit_code == 2

    def test_incumbent_tracing_overrides(self, tmp_path):
        path = _write(
            tmp_path,
            {**MINIMAL, "propagation": {"max_candidate_distance_m": 150}, "rfi": {"incumbent_position": [1, 2, 3]}},
        )
        cfg = load_config(path, env=NO_ENV)
        rfi = cfg.rfi_propagation()
        assert (rfi.max_candidate_distance_m, rfi.double_diffraction) == (400.0, True)
        assert (cfg.propagation.max_candidate_distance_m, cfg.propagation.double_diffraction) == (150.0, False)
        assert rfi.max_reflection_order == cfg.propagation.max_reflection_order

        plain = load_config(_write(tmp_path, MINIMAL, "plain.json"), env=NO_ENV)
        assert plain.rfi_propagation() == plain.propagation

    def test_bundled_configs_resolve(self):
        for name in ("default.json", "quick.json"):
            cfg = load_config(REPO_ROOT / "configs" / name, check_paths=True, env=NO_ENV)
            assert cfg.rfi is not None
            assert cfg.carriers[0].carrier_hz == 3.5e9


class TestCarriers:
    def test_bandwidth_defaults_by_range(self):
        assert CarrierConfig(carrier_hz=3.5e9).resolved_bandwidth_hz() == 100e6
        assert CarrierConfig(carrier_hz=12.7e9).resolved_bandwidth_hz() == 400e6
        assert CarrierConfig(carrier_hz=12.7e9, bandwidth_hz=200e6).resolved_bandwidth_hz() == 200e6

    def test_lookup(self):
        cfg = RunConfig(scene_path="s.json", carriers=[{"carrier_hz": 7.125e9}])
        assert cfg.carrier(7.125e9).carrier_hz == 7.125e9
        with pytest.raises(ConfigError):
            cfg.carrier(28e9)
