"""Interval-indexed spectrum allocation registry."""

import json
import logging
from bisect import bisect_left
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

import pydantic

from midband.core.errors import ParseError, ValidationError
from midband.spectrum.schemas import (
    MAX_HZ,
    MIN_HZ,
    AllocationFile,
    AllocationRecord,
    CandidateBand,
    Proposer,
    Region,
    Status,
    mhz_to_hz,
)

logger = logging.getLogger(__name__)

Interval = Tuple[int, int]


# -------- Interval arithmetic --------
def union(intervals: Iterable[Interval]) -> List[Interval]:
    """Merge half-open intervals; touching intervals become one."""
    merged: List[Interval] = []
    for lo, hi in sorted(intervals):
        if merged and lo <= merged[-1][1]:
            if hi > merged[-1][1]:
                merged[-1] = (merged[-1][0], hi)
        else:
            merged.append((lo, hi))
    return merged


def measure(intervals: Iterable[Interval]) -> int:
    return sum(hi - lo for lo, hi in union(intervals))


def intersect(a: Sequence[Interval], b: Sequence[Interval]) -> List[Interval]:
    a, b = union(a), union(b)
    out: List[Interval] = []
    i = j = 0
    while i < len(a) and j < len(b):
        lo = max(a[i][0], b[j][0])
        hi = min(a[i][1], b[j][1])
        if lo < hi:
            out.append((lo, hi))
        if a[i][1] < b[j][1]:
            i += 1
        else:
            j += 1
    return out


def _check_band(low: int, high: int, what: str) -> None:
    if low >= high:
        raise ValidationError(f"{what}: low {low} Hz must be below high {high} Hz")
    if low < MIN_HZ or high > MAX_HZ:
        raise ValidationError(f"{what}: band outside the 1-100 GHz range")


class AllocationRegistry:
    """Immutable after construction; records sorted by lower band edge."""

    def __init__(self, records: Iterable[AllocationRecord] = (), candidates: Iterable[CandidateBand] = ()):
        self.records: Tuple[AllocationRecord, ...] = tuple(sorted(records))
        self.candidates: Tuple[CandidateBand, ...] = tuple(sorted(candidates))
        self._starts = [r.low_hz for r in self.records]
        seen = set()
        for idx, r in enumerate(self.records):
            _check_band(r.low_hz, r.high_hz, f"record {idx} ({r.service})")
            if r in seen:
                raise ValidationError(f"duplicate record {r.service} {r.low_hz}-{r.high_hz} Hz {r.region.value}")
            seen.add(r)
        for idx, c in enumerate(self.candidates):
            _check_band(c.low_hz, c.high_hz, f"candidate {idx}")

    def __len__(self) -> int:
        return len(self.records)

    # -------- Selection --------
    def select(
        self,
        service: Optional[str] = None,
        region: Optional[Region] = None,
        status: Optional[Status] = None,
    ) -> List[AllocationRecord]:
        return [
            r for r in self.records
            if (service is None or r.service == service)
            and (region is None or r.region == region)
            and (status is None or r.status == status)
        ]

    def overlapping(self, low_hz: int, high_hz: int) -> List[AllocationRecord]:
        """Records whose band intersects [low_hz, high_hz)."""
        if low_hz >= high_hz:
            raise ValidationError(f"query band inverted: {low_hz} >= {high_hz}")
        stop = bisect_left(self._starts, high_hz)
        return [r for r in self.records[:stop] if r.high_hz > low_hz]

    # -------- Queries --------
    def total_allocated_hz(self, service: str, region: Region, status: Optional[Status] = Status.PRIMARY) -> int:
        return measure((r.low_hz, r.high_hz) for r in self.select(service, region, status))

    def band_count(self, service: str, region: Region, status: Optional[Status] = Status.PRIMARY) -> int:
        return len(self.select(service, region, status))

    def services_at(self, low_hz: int, high_hz: int) -> Set[Tuple[str, Region, Status]]:
        return {(r.service, r.region, r.status) for r in self.overlapping(low_hz, high_hz)}

    def candidate_intersection(self, proposers: Iterable[Proposer]) -> List[Interval]:
        proposers = list(dict.fromkeys(Proposer(p) for p in proposers))
        if not proposers:
            raise ValidationError("at least one proposer is required")
        result = union((c.low_hz, c.high_hz) for c in self.candidates if c.proposer == proposers[0])
        for p in proposers[1:]:
            result = intersect(result, [(c.low_hz, c.high_hz) for c in self.candidates if c.proposer == p])
        return result

    def overlap_fraction(
        self, service_a: str, service_b: str, region: Region, status: Optional[Status] = Status.PRIMARY
    ) -> float:
        """Share of ``service_b``'s allocated measure that ``service_a`` also holds."""
        a = [(r.low_hz, r.high_hz) for r in self.select(service_a, region, status)]
        b = [(r.low_hz, r.high_hz) for r in self.select(service_b, region, status)]
        total_b = measure(b)
        if total_b == 0:
            return 0.0
        return measure(intersect(a, b)) / total_b

    def rank_services(self, region: Region, status: Optional[Status] = Status.PRIMARY) -> List[Tuple[str, int]]:
        services = sorted({r.service for r in self.select(region=region, status=status)})
        totals = [(s, self.total_allocated_hz(s, region, status)) for s in services]
        return sorted(totals, key=lambda t: (-t[1], t[0]))


# =========================
# Loading
# =========================

def registry_from_document(doc: AllocationFile) -> AllocationRegistry:
    records = []
    for rec in doc.records:
        low, high = mhz_to_hz(rec.low_mhz), mhz_to_hz(rec.high_mhz)
        records.append(AllocationRecord(low, high, rec.service, rec.region, rec.status, rec.notes))
    candidates = []
    for cand in doc.candidates:
        low, high = mhz_to_hz(cand.low_mhz), mhz_to_hz(cand.high_mhz)
        candidates.append(CandidateBand(low, high, cand.proposer, cand.rationale))
    return AllocationRegistry(records, candidates)


def load_allocations(path: Path) -> AllocationRegistry:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ParseError(f"allocation file not found: {path}")
    except OSError as e:
        raise ParseError(f"cannot read allocation file {path}: {e}")
    if not text.strip():
        return AllocationRegistry()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"cannot parse allocation file {path}: {e}")
    try:
        doc = AllocationFile.model_validate(raw)
    except pydantic.ValidationError as e:
        raise ValidationError(f"allocation file {path} violates the schema: {e}")
    registry = registry_from_document(doc)
    logger.info("Allocations %s loaded: %d records, %d candidate bands", path.name, len(registry), len(registry.candidates))
    return registry


def dump_allocations(registry: AllocationRegistry, description: Optional[str] = None) -> Dict:
    """Serialize back to the on-disk document shape (MHz values)."""
    return {
        "description": description,
        "records": [
            {
                "service": r.service,
                "low_mhz": r.low_hz / 1e6,
                "high_mhz": r.high_hz / 1e6,
                "region": r.region.value,
                "status": r.status.value,
                "notes": r.notes,
            }
            for r in registry.records
        ],
        "candidates": [
            {
                "low_mhz": c.low_hz / 1e6,
                "high_mhz": c.high_hz / 1e6,
                "proposer": c.proposer.value,
                "rationale": c.rationale,
            }
            for c in registry.candidates
        ],
    }
