from dataclasses import dataclass
from enum import Enum
from typing import List, Optional

from pydantic import BaseModel, ConfigDict, field_validator

MIN_HZ = 1_000_000_000
MAX_HZ = 100_000_000_000

KNOWN_SERVICES = ("MS", "FS", "FSS", "RLS", "SR", "EESS", "MetSat", "RA", "IS")
OTHER_PREFIX = "other:"


class Region(str, Enum):
    ITU_R2 = "ITU-R2"
    FCC = "FCC"
    NTIA = "NTIA"


class Status(str, Enum):
    PRIMARY = "primary"
    SECONDARY = "secondary"


class Proposer(str, Enum):
    FCC = "FCC"
    ATIS = "ATIS"
    GPP = "3GPP"
    WRC23 = "WRC23"
    PAPER = "paper"


def check_service(value: str) -> str:
    if value in KNOWN_SERVICES:
        return value
    if value.startswith(OTHER_PREFIX) and len(value) > len(OTHER_PREFIX):
        return value
    raise ValueError(f"unknown service {value!r}; use one of {KNOWN_SERVICES} or 'other:<name>'")


# -------- File format --------
class RecordIn(BaseModel):
    model_config = ConfigDict(extra="forbid")

    service: str
    low_mhz: float
    high_mhz: float
    region: Region
    status: Status = Status.PRIMARY
    notes: str = ""

    @field_validator("service")
    @classmethod
    def _known_service(cls, v: str) -> str:
        return check_service(v)


class CandidateIn(BaseModel):
    model_config = ConfigDict(extra="forbid")

    low_mhz: float
    high_mhz: float
    proposer: Proposer
    rationale: str = ""


class AllocationFile(BaseModel):
    model_config = ConfigDict(extra="forbid")

    description: Optional[str] = None
    records: List[RecordIn] = []
    candidates: List[CandidateIn] = []


# -------- In-memory --------
@dataclass(frozen=True, order=True)
class AllocationRecord:
    """Half-open band [low_hz, high_hz) in integer Hz."""

    low_hz: int
    high_hz: int
    service: str
    region: Region
    status: Status
    notes: str = ""


@dataclass(frozen=True, order=True)
class CandidateBand:
    low_hz: int
    high_hz: int
    proposer: Proposer
    rationale: str = ""


def mhz_to_hz(mhz: float) -> int:
    return int(round(mhz * 1_000_000))
