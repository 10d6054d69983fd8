"""Pool selection, pile partitioning, and XOR function solving.

The hypothesis test at the bottom drives the solver with synthetic piles
built directly from randomly drawn function sets, so the whole algebraic
path (difference masks, orthogonality filter, basis choice) is checked
against ground truth with no timing in the loop.
"""
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dram_mapper import fixtures
from dram_mapper.backend import LatencyModel, PageLayout, SimulatedBackend
from dram_mapper.bankfns import (
    Pile,
    constant_masks,
    number_piles,
    partition_piles,
    select_addresses,
    solve_functions,
)
from dram_mapper.bits import deposit_bits, mask_of, parity
from dram_mapper.errors import (
    NoContiguousRange,
    NoValidBasis,
    PartitionStalled,
    TooManyCandidateBits,
    UnderdeterminedPiles,
)
from dram_mapper.mapping import gf2_rank, rref_basis
from dram_mapper.pipeline import simulated_backend
from dram_mapper.timing import calibrate


def backend_for(name, seed=4096, **kwargs):
    knowledge, truth = fixtures.load_fixture(name)
    if kwargs:
        kwargs.setdefault("rng", random.Random(f"{seed}/backend"))
        return SimulatedBackend(
            ground_truth=truth, size_bytes=knowledge.total_bytes, **kwargs
        ), knowledge
    return simulated_backend(knowledge, truth, seed=seed), knowledge


def test_selection_packs_candidate_combinations():
    backend, _ = backend_for("ddr3-4g-c1d1r1b8")
    sel = select_addresses(backend, (13, 14, 15, 16, 17, 18))
    assert sel.base == 0
    assert sel.range_mask == 0x7E000
    assert sel.miss_mask == 0
    assert sel.pool_size == 64
    addrs = sel.addresses()
    assert len(set(addrs)) == 64
    assert all(a & ~0x7E000 == 0 for a in addrs)


def test_selection_handles_gaps_in_the_candidate_range():
    backend, _ = backend_for("ddr3-8g-c2d1r1b8")
    sel = select_addresses(backend, (6, 14, 15, 16, 17, 18, 19))
    assert sel.base == 0
    assert sel.range_mask == 0xFFFC0
    assert sel.miss_mask == 0x3F80  # bits 7..13 sit inside the range unused
    assert sel.pool_size == 128
    assert sorted(sel.addresses()) == sorted(
        deposit_bits(k, (6, 14, 15, 16, 17, 18, 19)) for k in range(128)
    )


def test_selection_refuses_oversized_pools():
    backend, _ = backend_for("ddr3-4g-c1d1r1b8")
    with pytest.raises(TooManyCandidateBits):
        select_addresses(backend, tuple(range(12, 29)))


def test_selection_needs_an_owned_span():
    backend, _ = backend_for(
        "ddr3-4g-c1d1r1b8",
        layout=PageLayout(run_pages=16, ladder_pages=16, ladder_start_bit=24),
    )
    with pytest.raises(NoContiguousRange):
        select_addresses(backend, (23,))


@pytest.fixture(scope="module")
def partitioned_small():
    backend, knowledge = backend_for("ddr3-4g-c1d1r1b8")
    calib = calibrate(backend, rng=random.Random("4096/pipeline"))
    sel = select_addresses(backend, (13, 14, 15, 16, 17, 18))
    part = partition_piles(backend, calib, sel, knowledge.bank_count)
    return backend, knowledge, sel, part


def test_partition_splits_the_pool_into_equal_piles(partitioned_small):
    _, knowledge, sel, part = partitioned_small
    assert len(part.piles) == 8
    assert all(p.size == 8 for p in part.piles)
    assert part.coverage == 1.0
    assert part.unassigned_count == 0
    member_union = set()
    for pile in part.piles:
        assert pile.representative == pile.members[0]
        member_union.update(pile.members)
    assert member_union == set(sel.addresses())


def test_partition_piles_agree_with_the_ground_truth_banks(partitioned_small):
    backend, _, _, part = partitioned_small
    for pile in part.piles:
        banks = {backend.coords(m).bank_index for m in pile.members}
        assert len(banks) == 1, "a pile must hold a single bank"
        rows = [backend.coords(m).row for m in pile.members]
        assert len(set(rows)) == len(rows), "pile members must sit in distinct rows"


def test_partition_stalls_under_heavy_noise():
    backend, knowledge = backend_for(
        "ddr3-8g-c2d1r1b8", latency=LatencyModel(flip_probability=0.5)
    )
    calib = calibrate(backend, rng=random.Random(1))
    sel = select_addresses(backend, (6, 14, 15, 16, 17, 18, 19))
    with pytest.raises(PartitionStalled):
        partition_piles(backend, calib, sel, knowledge.bank_count)


def test_solve_recovers_the_small_fixture_verbatim(partitioned_small):
    _, knowledge, sel, part = partitioned_small
    solve = solve_functions(part.piles, sel.candidate_bits, knowledge.bank_bits)
    assert [list(f.bits) for f in solve.functions] == [[13, 16], [14, 17], [15, 18]]
    assert len(solve.survivor_masks) == 7  # the full nonzero span


def test_numbering_is_a_bijection(partitioned_small):
    _, knowledge, sel, part = partitioned_small
    solve = solve_functions(part.piles, sel.candidate_bits, knowledge.bank_bits)
    numbered = number_piles(part.piles, solve.functions)
    assert sorted(p.bank_index for p in numbered) == list(range(8))


def test_numbering_rejects_colliding_representatives(partitioned_small):
    _, knowledge, sel, part = partitioned_small
    solve = solve_functions(part.piles, sel.candidate_bits, knowledge.bank_bits)
    twin = Pile(
        representative=part.piles[0].representative ^ mask_of((13, 16)),
        members=(part.piles[0].representative ^ mask_of((13, 16)),),
    )
    with pytest.raises(NoValidBasis):
        number_piles(part.piles + (twin,), solve.functions)


def test_one_giant_pile_leaves_no_solution(partitioned_small):
    _, knowledge, sel, part = partitioned_small
    merged = Pile(representative=0, members=tuple(sorted(sel.addresses())))
    with pytest.raises(NoValidBasis):
        solve_functions((merged,), sel.candidate_bits, knowledge.bank_bits)


def test_sparse_piles_leave_the_solution_open(partitioned_small):
    # two members give one difference vector: far too few constraints
    _, knowledge, sel, part = partitioned_small
    stub = Pile(
        representative=part.piles[0].representative,
        members=part.piles[0].members[:2],
    )
    with pytest.raises(UnderdeterminedPiles):
        solve_functions((stub,), sel.candidate_bits, knowledge.bank_bits)


# -- synthetic solver property ----------------------------------------------


def synthetic_piles(functions, bits):
    """Group every candidate-bit combination by its true bank index."""
    groups: dict[int, list[int]] = {}
    for k in range(1 << len(bits)):
        addr = deposit_bits(k, bits)
        idx = 0
        for i, mask in enumerate(functions):
            idx |= parity(addr & mask) << i
        groups.setdefault(idx, []).append(addr)
    return tuple(
        Pile(representative=min(g), members=tuple(sorted(g)))
        for _, g in sorted(groups.items())
    )


def xor_span(vectors):
    out = {0}
    for v in vectors:
        out |= {x ^ v for x in out}
    return out


@settings(max_examples=200, deadline=None)
@given(st.data())
def test_solver_matches_brute_force_on_random_functions(data):
    nbits = data.draw(st.integers(min_value=2, max_value=8), label="nbits")
    bits = tuple(
        sorted(
            data.draw(
                st.sets(
                    st.integers(min_value=0, max_value=24),
                    min_size=nbits,
                    max_size=nbits,
                ),
                label="bits",
            )
        )
    )
    rank = data.draw(st.integers(min_value=1, max_value=min(4, nbits)), label="rank")
    rnd = random.Random(data.draw(st.integers(min_value=0, max_value=999), label="seed"))
    masks = []
    while gf2_rank(masks) < rank:
        m = deposit_bits(rnd.randrange(1, 1 << nbits), bits)
        if gf2_rank(masks + [m]) > gf2_rank(masks):
            masks.append(m)
    piles = synthetic_piles(masks, bits)
    assert len(piles) == 1 << rank

    survivors = constant_masks(piles, bits)
    truth_span = {m for m in xor_span(masks) if m}
    assert set(survivors) == truth_span

    solve = solve_functions(piles, bits, rank)
    assert gf2_rank([f.mask for f in solve.functions]) == rank
    assert rref_basis([f.mask for f in solve.functions]) == rref_basis(masks)
    numbered = number_piles(piles, solve.functions)
    assert sorted(p.bank_index for p in numbered) == list(range(1 << rank))
