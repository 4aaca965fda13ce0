import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from midband.core.errors import ConfigError
from midband.raytrace.schemas import TraceConfig

logger = logging.getLogger(__name__)


class Settings(BaseSettings):
    """Process-level settings read from the environment / ``.env``."""

    model_config = SettingsConfigDict(
        env_prefix="MIDBAND_",
        env_file=".env",
        case_sensitive=True,
        extra="ignore",
    )

    APP_NAME: str = "midband"
    APP_VERSION: str = "0.1.0"
    LOG_LEVEL: str = "INFO"
    OUTPUT_DIR: Optional[str] = None


settings = Settings()


# =========================
# RUN CONFIG
# =========================

class CarrierConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    carrier_hz: float = Field(gt=0)
    bandwidth_hz: Optional[float] = Field(default=None, gt=0)

    def resolved_bandwidth_hz(self) -> float:
        from midband.link.budget import default_bandwidth_hz

        return self.bandwidth_hz if self.bandwidth_hz is not None else default_bandwidth_hz(self.carrier_hz)


class GridConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    origin: Tuple[float, float] = (0.0, 0.0)
    size: Tuple[float, float] = (1500.0, 1500.0)
    cell_m: float = Field(default=10.0, gt=0)

    @model_validator(mode="after")
    def _positive_size(self) -> "GridConfig":
        if self.size[0] <= 0 or self.size[1] <= 0:
            raise ValueError("grid size must be positive")
        return self


class RfiConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    incumbent_position: Tuple[float, float, float]
    n_iter: int = Field(default=500, ge=1)
    seed: int = 0
    threshold_db: float = -10.0
    target_aggregate_inr_db: float = -10.0
    elevation_min_deg: float = -30.0
    elevation_max_deg: float = 0.0
    # tracing for the incumbent links only; coverage keeps ``propagation``
    max_candidate_distance_m: Optional[float] = Field(default=400.0, gt=0)
    double_diffraction: bool = True

    @model_validator(mode="after")
    def _elevation_range(self) -> "RfiConfig":
        if not -90.0 <= self.elevation_min_deg <= self.elevation_max_deg <= 90.0:
            raise ValueError("elevation range must satisfy -90 <= min <= max <= 90")
        return self


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    scene_path: Path
    deployment_path: Optional[Path] = None
    allocations_path: Optional[Path] = None
    carriers: List[CarrierConfig] = Field(min_length=1)
    reference_carrier_hz: float = 3.5e9
    aperture_side_m: float = Field(default=0.040, gt=0)
    tx_power_dbm: float = 33.0
    downtilt_deg: float = 12.0
    rx_height_m: float = Field(default=1.5, gt=0)
    noise_figure_db: float = Field(default=9.0, ge=0)
    element_pattern: Literal["isotropic", "3gpp"] = "isotropic"
    n_steering: int = Field(default=16, ge=1)
    coverage_threshold_db: float = 0.0
    max_link_distance_m: Optional[float] = Field(default=None, gt=0)
    grid: GridConfig = GridConfig()
    propagation: TraceConfig = TraceConfig()
    rfi: Optional[RfiConfig] = None
    workers: int = Field(default=1, ge=1)
    output_dir: Path = Path("out")
    log_level: str = "INFO"

    def rfi_propagation(self) -> TraceConfig:
        if self.rfi is None:
            return self.propagation
        return self.propagation.model_copy(
            update={
                "max_candidate_distance_m": self.rfi.max_candidate_distance_m,
                "double_diffraction": self.rfi.double_diffraction,
            }
        )

    def carrier(self, carrier_hz: float) -> CarrierConfig:
        for c in self.carriers:
            if c.carrier_hz == carrier_hz:
                return c
        raise ConfigError(f"carrier {carrier_hz:g} Hz not configured")


def _deep_merge(base: Dict[str, Any], extra: Dict[str, Any]) -> Dict[str, Any]:
    merged = dict(base)
    for key, value in extra.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _deep_merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def load_config(
    path: Optional[Path] = None,
    overrides: Optional[Dict[str, Any]] = None,
    check_paths: bool = False,
    env: Optional[Settings] = None,
) -> RunConfig:
    """Read the JSON run config, then apply environment and flag overrides.

    Relative paths inside the file resolve against the file's directory.
    ``env`` defaults to a fresh read of the ``MIDBAND_`` environment.
    """
    data: Dict[str, Any] = {}
    if path is not None:
        path = Path(path)
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}")
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read config {path}: {e}")
        if not isinstance(data, dict):
            raise ConfigError(f"config {path} must hold a JSON object")
        base = path.parent
        for key in ("scene_path", "deployment_path", "allocations_path", "output_dir"):
            if data.get(key) is not None and not Path(data[key]).is_absolute():
                data[key] = str(base / data[key])

    env = env or Settings()
    if env.OUTPUT_DIR:
        data["output_dir"] = env.OUTPUT_DIR
    data = _deep_merge(data, {k: v for k, v in (overrides or {}).items() if v is not None})

    try:
        cfg = RunConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"invalid run config: {e}")

    if check_paths:
        for p in (cfg.scene_path, cfg.deployment_path, cfg.allocations_path):
            if p is not None and not Path(p).exists():
                raise ConfigError(f"referenced file does not exist: {p}")

    logger.debug("Run config loaded from %s", path)
    return cfg
