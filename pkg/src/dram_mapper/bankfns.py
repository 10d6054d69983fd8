"""Address selection, conflict piles, and XOR function solving.

Selection turns the coarse candidate bits into a pool of addresses that
differ only in those bits, backed by owned pages. Partition groups the pool
into piles of mutually conflicting addresses, one pile per bank. Solving
then keeps every XOR mask over the candidate bits that is constant on each
pile; those masks form the span of the true bank functions, and a greedy
pass picks the minimum-weight basis.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, replace

from .backend import MemoryBackend
from .bits import bits_of, deposit_bits, mask_of, parity
from .errors import (
    NoContiguousRange,
    NoValidBasis,
    PartitionStalled,
    TooManyCandidateBits,
    UnderdeterminedPiles,
)
from .mapping import BankFunction, gf2_rank, rref_basis
from .timing import Calibration, is_sbdr, vote_sbdr

DEFAULT_DELTA = 0.2
DEFAULT_PER_THRESHOLD = 0.85
DEFAULT_CONFIRM_VOTES = 5
DEFAULT_MAX_FUNCTION_BITS = 16


# -- selection ---------------------------------------------------------------


@dataclass(frozen=True)
class Selection:
    """Pool layout: base | (any combination of candidate bits)."""

    base: int
    candidate_bits: tuple[int, ...]
    range_mask: int
    miss_mask: int

    @property
    def pool_size(self) -> int:
        return 1 << len(self.candidate_bits)

    def addresses(self) -> list[int]:
        return [
            self.base | deposit_bits(k, self.candidate_bits) for k in range(self.pool_size)
        ]

    def as_dict(self) -> dict:
        return {
            "base": self.base,
            "candidate_bits": list(self.candidate_bits),
            "range_mask": self.range_mask,
            "miss_mask": self.miss_mask,
            "pool_size": self.pool_size,
        }


def _page_offsets(bits_mask: int, page_size: int) -> list[int]:
    """Every page-aligned offset the pool touches relative to its base."""
    high = bits_mask & ~(page_size - 1)
    offsets = []
    sub = high
    while True:
        offsets.append(sub)
        if sub == 0:
            break
        sub = (sub - 1) & high
    return offsets


def select_addresses(
    backend: MemoryBackend,
    candidate_bits: tuple[int, ...],
    max_function_bits: int = DEFAULT_MAX_FUNCTION_BITS,
) -> Selection:
    """Find an owned region whose pages cover every candidate-bit combination."""
    bits = tuple(sorted(candidate_bits))
    if not bits:
        raise NoContiguousRange("no candidate bits to build a pool from")
    if len(bits) > max_function_bits:
        raise TooManyCandidateBits(
            f"{len(bits)} candidate bits would need a pool of {1 << len(bits)} "
            f"addresses (limit {max_function_bits} bits)"
        )
    lo, hi = bits[0], bits[-1]
    range_mask = ((1 << (hi + 1)) - 1) & ~((1 << lo) - 1)
    miss_mask = range_mask & ~mask_of(bits)
    offsets = _page_offsets(mask_of(bits), backend.page_size)
    for page in backend.iter_pages():
        if page & range_mask:
            continue
        if all(backend.is_available(page + off) for off in offsets):
            return Selection(
                base=page, candidate_bits=bits, range_mask=range_mask, miss_mask=miss_mask
            )
    raise NoContiguousRange(
        f"no owned region spans candidate bits {bits[0]}..{bits[-1]}"
    )


# -- partition ---------------------------------------------------------------


@dataclass(frozen=True)
class Pile:
    """Mutually conflicting addresses: one bank's slice of the pool."""

    representative: int
    members: tuple[int, ...]  # includes the representative
    bank_index: int | None = None

    @property
    def size(self) -> int:
        return len(self.members)


@dataclass(frozen=True)
class PartitionResult:
    piles: tuple[Pile, ...]
    coverage: float
    expected_size: float
    unassigned_count: int
    rejected_count: int

    def as_dict(self) -> dict:
        return {
            "pile_count": len(self.piles),
            "coverage": round(self.coverage, 4),
            "expected_size": self.expected_size,
            "pile_sizes": [p.size for p in self.piles],
            "representatives": [p.representative for p in self.piles],
            "bank_indexes": [p.bank_index for p in self.piles],
            "unassigned_count": self.unassigned_count,
            "rejected_count": self.rejected_count,
        }


def partition_piles(
    backend: MemoryBackend,
    calib: Calibration,
    selection: Selection,
    bank_count: int,
    delta: float = DEFAULT_DELTA,
    per_threshold: float = DEFAULT_PER_THRESHOLD,
    confirm_votes: int = DEFAULT_CONFIRM_VOTES,
) -> PartitionResult:
    """Split the pool into one pile per bank.

    Each pass takes the lowest unassigned address as representative and
    collects every unassigned address that conflicts with it: a single-shot
    screen followed by sequential voting to confirm. A pile whose size
    (representative included) falls outside (1 +- delta) of pool/banks is
    rejected and its representative retired; piles of already-covered banks
    surface that way. The pass loop ends when one accepted pile per bank
    exists, and the run only counts as partitioned when the accepted piles
    cover at least per_threshold of the pool.
    """
    pool = selection.addresses()
    expected = len(pool) / bank_count
    lo_bound = (1 - delta) * expected
    hi_bound = (1 + delta) * expected
    unassigned = set(pool)
    retired: set[int] = set()
    piles: list[Pile] = []
    # (representative, one confirmed member) per accepted pile; their rows
    # differ, so any same-bank address conflicts with at least one of them
    probes: list[tuple[int, int | None]] = []
    rejected = 0
    consecutive_rejected = 0
    max_consecutive = max(16, bank_count)

    def confirmed(a: int, b: int) -> bool:
        if not is_sbdr(backend, a, b, calib, rounds=1):
            return False
        return vote_sbdr(backend, a, b, calib, votes=confirm_votes, rounds=1)

    def retire(rep: int) -> None:
        nonlocal rejected, consecutive_rejected
        retired.add(rep)
        rejected += 1
        consecutive_rejected += 1
        if consecutive_rejected > max_consecutive:
            raise PartitionStalled(
                f"{consecutive_rejected} representatives in a row produced no "
                f"pile inside [{lo_bound:.1f}, {hi_bound:.1f}] addresses"
            )

    while len(piles) < bank_count:
        rep = next((a for a in pool if a in unassigned and a not in retired), None)
        if rep is None:
            raise PartitionStalled(
                f"representatives exhausted with {len(piles)} of {bank_count} piles"
            )
        if any(
            confirmed(rep, pr) or (pm is not None and confirmed(rep, pm))
            for pr, pm in probes
        ):
            # conflicts into an accepted pile: its bank is already covered
            retire(rep)
            continue
        members = [rep]
        for addr in pool:
            if addr == rep or addr not in unassigned:
                continue
            if confirmed(rep, addr):
                members.append(addr)
        if lo_bound <= len(members) <= hi_bound:
            piles.append(Pile(representative=rep, members=tuple(members)))
            unassigned.difference_update(members)
            probes.append((rep, members[1] if len(members) > 1 else None))
            consecutive_rejected = 0
        else:
            retire(rep)
    coverage = (len(pool) - len(unassigned)) / len(pool)
    if coverage < per_threshold:
        raise PartitionStalled(
            f"piles cover {coverage:.3f} of the pool, need {per_threshold}"
        )
    return PartitionResult(
        piles=tuple(piles),
        coverage=coverage,
        expected_size=expected,
        unassigned_count=len(unassigned),
        rejected_count=rejected,
    )


# -- solving -----------------------------------------------------------------


@dataclass(frozen=True)
class SolveResult:
    functions: tuple[BankFunction, ...]
    survivor_masks: tuple[int, ...]

    def as_dict(self) -> dict:
        return {
            "functions": [list(f.bits) for f in self.functions],
            "survivor_count": len(self.survivor_masks),
        }


def constant_masks(piles: tuple[Pile, ...], candidate_bits: tuple[int, ...]) -> list[int]:
    """Nonzero masks over the candidate bits with constant parity on every pile."""
    diffs = []
    for pile in piles:
        rep = pile.representative
        diffs.extend(addr ^ rep for addr in pile.members if addr != rep)
    dbasis = rref_basis(diffs)
    cand_mask = mask_of(candidate_bits)
    out = []
    sub = cand_mask
    while sub:
        if all(parity(sub & d) == 0 for d in dbasis):
            out.append(sub)
        sub = (sub - 1) & cand_mask
    return sorted(out)


def solve_functions(
    piles: tuple[Pile, ...],
    candidate_bits: tuple[int, ...],
    bank_bits: int,
) -> SolveResult:
    """Pick the minimum-weight independent basis of the constant-mask span."""
    survivors = constant_masks(piles, candidate_bits)
    rank = gf2_rank(survivors)
    if rank < bank_bits:
        raise NoValidBasis(
            f"constant masks span rank {rank}, expected {bank_bits}; "
            "piles contradict every full-rank solution"
        )
    if rank > bank_bits:
        raise UnderdeterminedPiles(
            f"constant masks span rank {rank} > {bank_bits}; "
            "piles leave the functions underdetermined"
        )
    chosen: list[int] = []
    pivots: dict[int, int] = {}
    for m in sorted(survivors, key=lambda m: (m.bit_count(), bits_of(m))):
        v = m
        while v:
            p = v.bit_length() - 1
            if p not in pivots:
                break
            v ^= pivots[p]
        if v:
            pivots[v.bit_length() - 1] = v
            chosen.append(m)
            if len(chosen) == bank_bits:
                break
    functions = tuple(BankFunction(bits_of(m)) for m in chosen)
    return SolveResult(functions=functions, survivor_masks=tuple(survivors))


def number_piles(
    piles: tuple[Pile, ...], functions: tuple[BankFunction, ...]
) -> tuple[Pile, ...]:
    """Assign each pile the bank index its representative evaluates to."""
    seen: dict[int, int] = {}
    out = []
    for pile in piles:
        idx = 0
        for i, f in enumerate(functions):
            idx |= f.evaluate(pile.representative) << i
        if idx in seen:
            raise NoValidBasis(
                f"representatives {seen[idx]:#x} and {pile.representative:#x} "
                f"both evaluate to bank index {idx}"
            )
        seen[idx] = pile.representative
        out.append(replace(pile, bank_index=idx))
    if len(out) == 1 << len(functions) and sorted(seen) != list(range(len(out))):
        raise NoValidBasis("pile numbering is not a bijection onto 0..banks-1")
    return tuple(out)
