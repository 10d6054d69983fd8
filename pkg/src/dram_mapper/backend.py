"""Memory backends: where timed access pairs come from.

The simulated backend owns a ground-truth mapping and synthesizes access
latencies from it: a pair of addresses landing in the same bank but
different rows draws from a slow distribution (row buffer conflict), any
other pair draws from a fast one. Optional classification flips model
measurement noise beyond plain jitter.

Page availability mimics what an OS hands a userspace process: one
contiguous run of page frames at the bottom of physical memory plus a run
at each high power of two, so every address bit can be exercised without
owning all of memory.
"""
from __future__ import annotations

import random
import statistics
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Iterator

from .errors import AddressOutsideAllocation, BackendUnsupported, OutOfMemory
from .mapping import DramAddress, GroundTruthMapping, map_physical

DEFAULT_PAGE_SIZE = 4096


@dataclass(frozen=True)
class LatencyModel:
    """Cycle distributions for the two access-pair classes."""

    conflict_cycles: float = 400.0
    fast_cycles: float = 200.0
    stddev: float = 10.0
    # probability that one timed pair reports the wrong class
    flip_probability: float = 0.0

    def __post_init__(self):
        if self.conflict_cycles <= self.fast_cycles:
            raise ValueError("conflict latency must exceed fast latency")
        if self.stddev < 0 or not 0.0 <= self.flip_probability <= 1.0:
            raise ValueError("bad latency model parameters")


@dataclass(frozen=True)
class PageLayout:
    """Which page frames the process owns inside simulated physical memory."""

    page_size: int = DEFAULT_PAGE_SIZE
    run_pages: int = 4096
    ladder_pages: int = 4096
    ladder_start_bit: int = 24

    @property
    def run_bytes(self) -> int:
        return self.run_pages * self.page_size


@dataclass
class BackendStats:
    measurements: int = 0
    simulated_cycles: float = 0.0

    def snapshot(self) -> "BackendStats":
        return BackendStats(self.measurements, self.simulated_cycles)

    def since(self, earlier: "BackendStats") -> "BackendStats":
        return BackendStats(
            self.measurements - earlier.measurements,
            self.simulated_cycles - earlier.simulated_cycles,
        )


class MemoryBackend(ABC):
    """Timed access pairs over a partially owned physical address space."""

    page_size: int
    size_bytes: int
    default_rounds: int
    stats: BackendStats

    @abstractmethod
    def is_available(self, addr: int) -> bool:
        """Whether the page holding ``addr`` is owned."""

    @abstractmethod
    def iter_pages(self) -> Iterator[int]:
        """Owned page base addresses, ascending."""

    @abstractmethod
    def access_pair(self, a: int, b: int) -> float:
        """One timed access of the pair, in cycles."""

    def measure(self, a: int, b: int, rounds: int | None = None) -> float:
        """Median latency over ``rounds`` timed accesses of the pair."""
        n = self.default_rounds if rounds is None else rounds
        return statistics.median(self.access_pair(a, b) for _ in range(n))

    def check_available(self, addr: int) -> None:
        if not self.is_available(addr):
            raise AddressOutsideAllocation(f"address {addr:#x} is not in an owned page")


class SimulatedBackend(MemoryBackend):
    """Backend driven by an installed ground-truth mapping."""

    def __init__(
        self,
        ground_truth: GroundTruthMapping,
        size_bytes: int,
        latency: LatencyModel | None = None,
        layout: PageLayout | None = None,
        rng: random.Random | None = None,
    ):
        self.ground_truth = ground_truth
        self.size_bytes = size_bytes
        self.latency = latency or LatencyModel()
        self.layout = layout or PageLayout()
        self.rng = rng or random.Random(0)
        self.page_size = self.layout.page_size
        self.default_rounds = 10
        self.stats = BackendStats()
        self._coords: dict[int, DramAddress] = {}
        if self.layout.run_bytes > size_bytes:
            raise OutOfMemory(
                f"layout wants {self.layout.run_bytes} contiguous bytes, "
                f"memory holds {size_bytes}"
            )
        if not ground_truth.is_bijective(size_bytes.bit_length() - 1):
            raise ValueError("ground truth does not cover the address space")

    # -- page ownership ------------------------------------------------

    def is_available(self, addr: int) -> bool:
        if not 0 <= addr < self.size_bytes:
            return False
        if addr < self.layout.run_bytes:
            return True
        bit = addr.bit_length() - 1
        if bit < self.layout.ladder_start_bit:
            return False
        return addr - (1 << bit) < self.layout.ladder_pages * self.page_size

    def iter_pages(self) -> Iterator[int]:
        for page in range(0, self.layout.run_bytes, self.page_size):
            yield page
        for bit in range(self.layout.ladder_start_bit, self.size_bytes.bit_length() - 1):
            base = 1 << bit
            span = min(self.layout.ladder_pages * self.page_size, base, self.size_bytes - base)
            start = base if base >= self.layout.run_bytes else self.layout.run_bytes
            for page in range(start, base + span, self.page_size):
                yield page

    # -- timing ---------------------------------------------------------

    def coords(self, addr: int) -> DramAddress:
        got = self._coords.get(addr)
        if got is None:
            got = map_physical(self.ground_truth, addr)
            self._coords[addr] = got
        return got

    def conflicts(self, a: int, b: int) -> bool:
        """Ground truth: same bank, different row. Not for the solver's use."""
        ca, cb = self.coords(a), self.coords(b)
        return ca.bank_index == cb.bank_index and ca.row != cb.row

    def access_pair(self, a: int, b: int) -> float:
        self.check_available(a)
        self.check_available(b)
        slow = self.conflicts(a, b)
        if self.latency.flip_probability and self.rng.random() < self.latency.flip_probability:
            slow = not slow
        mean = self.latency.conflict_cycles if slow else self.latency.fast_cycles
        cycles = max(1.0, self.rng.gauss(mean, self.latency.stddev))
        self.stats.measurements += 1
        self.stats.simulated_cycles += cycles
        return cycles


class HardwareBackend(MemoryBackend):
    """Placeholder for timing real DRAM; needs privileges this build lacks.

    Real measurements require pinned physical pages (hugepages or
    /proc/self/pagemap translation), cache-bypassing loads, and a cycle
    counter, none of which are exercised here. Constructing one raises so
    callers fail with a clear message instead of garbage timings.
    """

    def __init__(self, *args, **kwargs):
        raise BackendUnsupported(
            "hardware timing needs pagemap access and cache control; "
            "run against the simulated backend instead"
        )

    def is_available(self, addr: int) -> bool:  # pragma: no cover
        raise BackendUnsupported("hardware backend is not operational")

    def iter_pages(self) -> Iterator[int]:  # pragma: no cover
        raise BackendUnsupported("hardware backend is not operational")

    def access_pair(self, a: int, b: int) -> float:  # pragma: no cover
        raise BackendUnsupported("hardware backend is not operational")
