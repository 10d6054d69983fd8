"""Double-sided hammering pairs derived from a recovered mapping.

A triple aims at one victim row: two aggressor addresses in the rows
directly above and below it, all three in the same bank. Rows are compared
in row-number space as the mapping extracts them, so the triples stay
valid for any controller the mapping describes.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable

from .errors import NoTriplesAvailable
from .mapping import AddressMapping, map_physical

CACHE_LINE = 64


@dataclass(frozen=True)
class HammerTriple:
    bank: int
    victim_row: int
    low: int
    victim: int
    high: int

    def as_line(self) -> str:
        return "\t".join(
            (
                str(self.bank),
                str(self.victim_row),
                f"{self.low:#x}",
                f"{self.victim:#x}",
                f"{self.high:#x}",
            )
        )


def class_index(
    mapping: AddressMapping, addresses: Iterable[int]
) -> dict[tuple[int, int], int]:
    """Lowest address per (bank, row) among the given addresses."""
    index: dict[tuple[int, int], int] = {}
    for addr in addresses:
        c = map_physical(mapping, addr)
        key = (c.bank_index, c.row)
        if key not in index or addr < index[key]:
            index[key] = addr
    return index


def generate_triples(
    mapping: AddressMapping,
    region_base: int = 0,
    region_bytes: int = 1 << 20,
    step: int = CACHE_LINE,
    available: Callable[[int], bool] | None = None,
) -> list[HammerTriple]:
    """All double-sided triples the region supports, sorted by bank then row."""
    addrs = range(region_base, region_base + region_bytes, step)
    if available is not None:
        addrs = (a for a in addrs if available(a))
    index = class_index(mapping, addrs)
    triples = []
    for (bank, row), victim in sorted(index.items()):
        low = index.get((bank, row - 1))
        high = index.get((bank, row + 1))
        if low is None or high is None:
            continue
        triples.append(
            HammerTriple(bank=bank, victim_row=row, low=low, victim=victim, high=high)
        )
    if not triples:
        raise NoTriplesAvailable(
            f"region {region_base:#x}+{region_bytes:#x} holds no three "
            "adjacent rows in any bank"
        )
    return triples


def render_triples(triples: list[HammerTriple]) -> str:
    lines = ["# bank\tvictim_row\tphys_low\tphys_victim\tphys_high"]
    lines.extend(t.as_line() for t in triples)
    return "\n".join(lines) + "\n"
