"""Coarse role detection: classify each address bit by flipping it.

Flipping a single bit of an address and timing the pair against the
original separates three cases. A conflict means the bit moved the row and
nothing else, so it is a pure row bit. A fast result means the bit either
left the bank alone (column bit) or changed it (bank candidate); flipping
the bit together with a known pure row bit tells those apart, because the
forced row change turns every non-bank bit into a conflict.

Bits that feed both a bank function and the row or column index land in the
candidate set and get resolved by the later pipeline stages.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field

from .backend import MemoryBackend
from .errors import InsufficientAddressPairs
from .timing import Calibration, is_sbdr

DEFAULT_VOTES = 5
_BASE_TRIES = 10000


@dataclass(frozen=True)
class CoarseResult:
    row_bits: tuple[int, ...]
    column_bits: tuple[int, ...]
    candidate_bits: tuple[int, ...]
    reference_row_bit: int
    classifications: dict[int, str] = field(compare=False)

    def as_dict(self) -> dict:
        return {
            "row_bits": list(self.row_bits),
            "column_bits": list(self.column_bits),
            "candidate_bits": list(self.candidate_bits),
            "reference_row_bit": self.reference_row_bit,
        }


def leading_run(backend: MemoryBackend) -> tuple[int, int]:
    """Longest contiguous run of owned pages from the start, as (base, bytes)."""
    base = end = None
    for page in backend.iter_pages():
        if base is None:
            base = end = page
        elif page == end + backend.page_size:
            end = page
        else:
            break
    if base is None:
        raise InsufficientAddressPairs(-1, "backend owns no pages")
    return base, end + backend.page_size - base


def _pick_bases(
    backend: MemoryBackend,
    run: tuple[int, int],
    flip_mask: int,
    count: int,
    rng: random.Random,
    bit: int,
) -> list[int]:
    """Distinct base addresses whose flipped partners are also owned."""
    base, length = run
    lines = length // 64
    picked: set[int] = set()
    for _ in range(_BASE_TRIES):
        x = base + 64 * rng.randrange(lines)
        if x in picked:
            continue
        if backend.is_available(x) and backend.is_available(x ^ flip_mask):
            picked.add(x)
            if len(picked) == count:
                return sorted(picked)
    raise InsufficientAddressPairs(
        bit, f"cannot build {count} owned pairs for flip mask {flip_mask:#x}"
    )


def flip_conflicts(
    backend: MemoryBackend,
    calib: Calibration,
    run: tuple[int, int],
    flip_mask: int,
    votes: int,
    rng: random.Random,
    bit: int,
) -> bool:
    bases = _pick_bases(backend, run, flip_mask, votes, rng, bit)
    hits = sum(is_sbdr(backend, x, x ^ flip_mask, calib) for x in bases)
    return 2 * hits > votes


def coarse_scan(
    backend: MemoryBackend,
    calib: Calibration,
    address_bits: int,
    votes: int = DEFAULT_VOTES,
    rng: random.Random | None = None,
) -> CoarseResult:
    """Classify bits 0..address_bits-1 as row, column, or bank candidate."""
    rng = rng or random.Random(0)
    run = leading_run(backend)
    rows: list[int] = []
    undecided: list[int] = []
    for bit in range(address_bits):
        if flip_conflicts(backend, calib, run, 1 << bit, votes, rng, bit):
            rows.append(bit)
        else:
            undecided.append(bit)
    if not rows:
        raise InsufficientAddressPairs(
            -1, "no pure row bit detected; two-bit probes have no anchor"
        )
    ref = min(rows)
    cols: list[int] = []
    candidates: list[int] = []
    for bit in undecided:
        mask = (1 << bit) | (1 << ref)
        if flip_conflicts(backend, calib, run, mask, votes, rng, bit):
            cols.append(bit)
        else:
            candidates.append(bit)
    classifications = {b: "row" for b in rows}
    classifications.update({b: "column" for b in cols})
    classifications.update({b: "candidate" for b in candidates})
    return CoarseResult(
        row_bits=tuple(rows),
        column_bits=tuple(cols),
        candidate_bits=tuple(candidates),
        reference_row_bit=ref,
        classifications=classifications,
    )
