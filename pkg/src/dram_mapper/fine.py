"""Fine resolution of bits shared between bank functions and row or column.

Coarse scanning leaves every bank-function bit in one undifferentiated
candidate set. With the functions solved, flips that provably preserve the
bank index become available: any mask with even overlap with every
function. Timing such a flip answers one question cleanly, namely whether
the flipped bits include a row bit.

Each two-bit function in the solved span gets probed through the smallest
bank-preserving flip containing both of its bits. A conflict pins the
higher bit as a row bit folded into the function; a fast result clears
both bits. Column bits produce no timing signal at all (same bank, same
row, either way), so the shared column bits are taken as the lowest
remaining candidates until the expected column count is met, skipping the
lowest bit of the longest function when there is exactly one such
function, since that bit selects a channel or rank below the columns it
interleaves.
"""
from __future__ import annotations

import random
from dataclasses import dataclass

from .backend import MemoryBackend
from .bits import bits_of, mask_of, parity
from .coarse import CoarseResult, flip_conflicts, leading_run
from .errors import ColumnCountUnreachable, InconsistentCounts, RowCountUnreachable
from .mapping import AddressMapping, BankFunction, gf2_rank
from .timing import Calibration


@dataclass(frozen=True)
class RowProbe:
    function_bits: tuple[int, int]
    flip_bits: tuple[int, ...]
    conflict: bool

    def as_dict(self) -> dict:
        return {
            "function_bits": list(self.function_bits),
            "flip_bits": list(self.flip_bits),
            "conflict": self.conflict,
        }


@dataclass(frozen=True)
class FineResult:
    shared_row_bits: tuple[int, ...]
    shared_column_bits: tuple[int, ...]
    row_probes: tuple[RowProbe, ...]
    excluded_column_bit: int | None

    def as_dict(self) -> dict:
        return {
            "shared_row_bits": list(self.shared_row_bits),
            "shared_column_bits": list(self.shared_column_bits),
            "row_probes": [p.as_dict() for p in self.row_probes],
            "excluded_column_bit": self.excluded_column_bit,
        }


def span_masks(functions: tuple[BankFunction, ...]) -> list[int]:
    """Every nonzero XOR combination of the functions."""
    masks = [0]
    for f in functions:
        masks += [m ^ f.mask for m in masks]
    return sorted(set(masks) - {0})


def bank_preserving_masks(
    functions: tuple[BankFunction, ...], candidate_bits: tuple[int, ...]
) -> list[int]:
    """Nonzero flips over the candidate bits that leave every function even."""
    cand = mask_of(candidate_bits)
    out = []
    sub = cand
    while sub:
        if all(parity(sub & f.mask) == 0 for f in functions):
            out.append(sub)
        sub = (sub - 1) & cand
    return out


def _probe_flip(pair_mask: int, preserving: list[int]) -> int | None:
    """Smallest bank-preserving flip containing both bits of the pair."""
    best = None
    for t in preserving:
        if t & pair_mask != pair_mask:
            continue
        if best is None or (t.bit_count(), t) < (best.bit_count(), best):
            best = t
    return best


def resolve_shared_rows(
    backend: MemoryBackend,
    calib: Calibration,
    functions: tuple[BankFunction, ...],
    candidate_bits: tuple[int, ...],
    votes: int = 5,
    rng: random.Random | None = None,
) -> tuple[tuple[int, ...], tuple[RowProbe, ...]]:
    """Find row bits folded into two-bit functions by timing preserved flips."""
    rng = rng or random.Random(0)
    run = leading_run(backend)
    preserving = bank_preserving_masks(functions, candidate_bits)
    shared: list[int] = []
    probes: list[RowProbe] = []
    for mask in span_masks(functions):
        if mask.bit_count() != 2:
            continue
        pair = bits_of(mask)
        flip = _probe_flip(mask, preserving)
        if flip is None:
            continue
        hit = flip_conflicts(backend, calib, run, flip, votes, rng, pair[1])
        probes.append(RowProbe(function_bits=pair, flip_bits=bits_of(flip), conflict=hit))
        if hit:
            shared.append(pair[1])
    return tuple(sorted(set(shared))), tuple(probes)


def unique_longest_low_bit(functions: tuple[BankFunction, ...]) -> int | None:
    """Lowest bit of the longest function, when exactly one function is longest."""
    if not functions:
        return None
    longest = max(len(f.bits) for f in functions)
    widest = [f for f in functions if len(f.bits) == longest]
    if len(widest) != 1:
        return None
    return widest[0].bits[0]


def resolve_shared_columns(
    coarse: CoarseResult,
    functions: tuple[BankFunction, ...],
    shared_rows: tuple[int, ...],
    expected_columns: int,
) -> tuple[tuple[int, ...], int | None]:
    """Take the lowest leftover candidates until the column count closes."""
    excluded = unique_longest_low_bit(functions)
    leftovers = [
        b
        for b in coarse.candidate_bits
        if b not in shared_rows and b != excluded
    ]
    needed = expected_columns - len(coarse.column_bits)
    if needed < 0:
        raise ColumnCountUnreachable(
            f"coarse scan already found {len(coarse.column_bits)} column bits, "
            f"expected {expected_columns}"
        )
    if needed > len(leftovers):
        raise ColumnCountUnreachable(
            f"need {needed} shared column bits but only "
            f"{len(leftovers)} candidates remain"
        )
    return tuple(sorted(leftovers)[:needed]), excluded


def fine_resolve(
    backend: MemoryBackend,
    calib: Calibration,
    coarse: CoarseResult,
    functions: tuple[BankFunction, ...],
    expected_rows: int,
    expected_columns: int,
    votes: int = 5,
    rng: random.Random | None = None,
) -> tuple[FineResult, AddressMapping]:
    """Close out the mapping: shared rows by probing, shared columns by count."""
    shared_rows, probes = resolve_shared_rows(
        backend, calib, functions, coarse.candidate_bits, votes, rng
    )
    rows = tuple(sorted(set(coarse.row_bits) | set(shared_rows)))
    if len(rows) != expected_rows:
        raise RowCountUnreachable(
            f"found {len(rows)} row bits ({len(coarse.row_bits)} pure, "
            f"{len(shared_rows)} shared), expected {expected_rows}"
        )
    shared_cols, excluded = resolve_shared_columns(
        coarse, functions, shared_rows, expected_columns
    )
    cols = tuple(sorted(set(coarse.column_bits) | set(shared_cols)))
    if len(cols) != expected_columns:
        raise ColumnCountUnreachable(
            f"found {len(cols)} column bits, expected {expected_columns}"
        )
    address_bits = backend.size_bytes.bit_length() - 1
    # a bank x row x column decomposition is only a bijection when the
    # coordinate widths sum to the address width
    if len(functions) + len(rows) + len(cols) != address_bits:
        raise InconsistentCounts(
            f"{len(functions)} bank bits + {len(rows)} rows + {len(cols)} "
            f"columns cannot decompose a {address_bits}-bit address space"
        )
    provenance = {b: "coarse" for b in coarse.row_bits}
    provenance.update({b: "coarse" for b in coarse.column_bits})
    provenance.update({b: "fine-shared" for b in shared_rows})
    provenance.update({b: "fine-shared" for b in shared_cols})
    mapping = AddressMapping(
        bank_functions=tuple(functions),
        row_bits=rows,
        column_bits=cols,
        provenance=provenance,
    )
    vectors = [f.mask for f in functions]
    vectors += [1 << b for b in rows] + [1 << b for b in cols]
    if set(mapping.covered_bits()) != set(range(address_bits)) or (
        gf2_rank(vectors) != address_bits
    ):
        raise InconsistentCounts(
            "solved functions, rows, and columns do not invert the "
            f"{address_bits}-bit address space"
        )
    fine = FineResult(
        shared_row_bits=tuple(sorted(shared_rows)),
        shared_column_bits=tuple(sorted(shared_cols)),
        row_probes=probes,
        excluded_column_bit=excluded,
    )
    return fine, mapping
