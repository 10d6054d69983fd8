"""Exception taxonomy for the mapping pipeline.

Every failure mode the CLI can hit maps to one class here, and every class
maps to a distinct exit code (see cli.EXIT_CODES). Pipeline stages annotate
raised exceptions with a ``stage`` attribute before they propagate.
"""
from __future__ import annotations


class MapperError(Exception):
    """Base class for all pipeline errors."""

    stage: str | None = None


# -- knowledge ---------------------------------------------------------------

class NonPowerOfTwoBanks(MapperError):
    """Geometry whose folded bank count is not a power of two."""


class ParseError(MapperError):
    """System-information or mapping text that does not match a known dialect."""


class IncompleteInfo(MapperError):
    """Required configuration fields missing after all sources were merged."""


# -- backend -----------------------------------------------------------------

class OutOfMemory(MapperError):
    """Allocation request beyond the backend's capacity."""


class AddressOutsideAllocation(MapperError):
    """Measurement against an address whose page was never allocated."""


# -- timing ------------------------------------------------------------------

class BimodalityNotFound(MapperError):
    """Calibration samples do not split into two separated latency clusters."""


# -- coarse ------------------------------------------------------------------

class InsufficientAddressPairs(MapperError):
    """No allocated pair differs in exactly the bit under test."""

    def __init__(self, bit: int, message: str | None = None):
        self.bit = bit
        super().__init__(message or f"no allocated address pair flips bit {bit}")


# -- bankfns -----------------------------------------------------------------

class NoContiguousRange(MapperError):
    """Allocation has no gap-free run covering the candidate-bit range."""


class PartitionStalled(MapperError):
    """Partitioning could not reach the coverage and pile-count targets."""


class TooManyCandidateBits(MapperError):
    """Candidate set too large for exhaustive XOR-mask enumeration."""


class NoValidBasis(MapperError):
    """No independent function subset numbers the piles bijectively."""


class UnderdeterminedPiles(MapperError):
    """Fewer piles than banks; the function system is underdetermined."""


# -- fine --------------------------------------------------------------------

class RowCountUnreachable(MapperError):
    """Shared-row resolution exhausted its probes below the expected count."""


class ColumnCountUnreachable(MapperError):
    """Shared-column resolution ran out of bits below the expected count."""


class InconsistentCounts(MapperError):
    """Assembled mapping disagrees with the expected bit counts."""


# -- hammer ------------------------------------------------------------------

class NoTriplesAvailable(MapperError):
    """Allocation span holds no bank with three adjacent rows."""


class BackendUnsupported(MapperError):
    """Operation requires a capability this backend does not provide."""
