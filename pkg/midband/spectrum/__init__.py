from midband.spectrum.schemas import AllocationRecord, CandidateBand, Proposer, Region, Status
from midband.spectrum.store import AllocationRegistry, dump_allocations, load_allocations
