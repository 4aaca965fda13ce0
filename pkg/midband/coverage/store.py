import json
import logging
import math
from pathlib import Path
from typing import Optional

import pydantic

from midband.core.errors import ParseError, ValidationError
from midband.coverage.schemas import Deployment, DeploymentFile, Site
from midband.scene.store import Scene

logger = logging.getLogger(__name__)


def deployment_from_document(
    doc: DeploymentFile,
    aperture_side_m: float,
    tx_power_dbm: float,
    downtilt_deg: float,
    scene: Optional[Scene] = None,
) -> Deployment:
    seen = set()
    sites = []
    for gnb in doc.gnbs:
        if gnb.id in seen:
            raise ValidationError(f"duplicate gNB id {gnb.id}")
        seen.add(gnb.id)
        if scene is not None and not scene.contains(gnb.position):
            raise ValidationError(f"gNB {gnb.id} at {gnb.position} is outside the scene bounds")
        power = gnb.tx_power_dbm if gnb.tx_power_dbm is not None else tx_power_dbm
        if not math.isfinite(power):
            raise ValidationError(f"gNB {gnb.id}: tx power must be finite")
        sites.append(
            Site(
                id=gnb.id,
                position=tuple(float(c) for c in gnb.position),
                azimuth_deg=gnb.azimuth_deg,
                aperture_side_m=gnb.aperture_side_m if gnb.aperture_side_m is not None else aperture_side_m,
                tx_power_dbm=power,
                downtilt_deg=gnb.downtilt_deg if gnb.downtilt_deg is not None else downtilt_deg,
            )
        )
    return Deployment(tuple(sites))


def load_deployment(
    path: Path,
    aperture_side_m: float = 0.040,
    tx_power_dbm: float = 33.0,
    downtilt_deg: float = 12.0,
    scene: Optional[Scene] = None,
) -> Deployment:
    path = Path(path)
    try:
        doc = DeploymentFile.model_validate(json.loads(path.read_text(encoding="utf-8")))
    except FileNotFoundError:
        raise ParseError(f"deployment file not found: {path}")
    except (OSError, json.JSONDecodeError, pydantic.ValidationError) as e:
        raise ParseError(f"cannot parse deployment {path}: {e}")
    deployment = deployment_from_document(doc, aperture_side_m, tx_power_dbm, downtilt_deg, scene)
    logger.info("Deployment %s loaded: %d gNBs", path.name, len(deployment))
    return deployment
