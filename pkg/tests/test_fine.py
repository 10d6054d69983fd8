"""Fine resolution of row and column bits hidden inside bank functions."""
import random

import pytest

from dram_mapper import fixtures
from dram_mapper.bankfns import select_addresses
from dram_mapper.coarse import coarse_scan
from dram_mapper.errors import (
    ColumnCountUnreachable,
    InconsistentCounts,
    RowCountUnreachable,
)
from dram_mapper.fine import (
    bank_preserving_masks,
    fine_resolve,
    resolve_shared_rows,
    span_masks,
    unique_longest_low_bit,
)
from dram_mapper.bits import bits_of, mask_of, parity
from dram_mapper.mapping import BankFunction
from dram_mapper.pipeline import simulated_backend
from dram_mapper.timing import calibrate

# (fixture, rows added by the fine step, columns added, excluded column bit)
FINE_EXPECTED = [
    ("ddr3-8g-c2d1r1b8", (17, 18, 19), (), None),
    ("ddr3-8g-c2d1r2b8", (18, 19, 20, 21), (8, 9, 12, 13), 7),
    ("ddr3-4g-c1d1r2b8", (17, 18, 19, 20), (), None),
    ("ddr3-4g-c1d1r1b8", (16, 17, 18), (), None),
    ("ddr3-16g-c2d1r2b8", (18, 19, 20, 21), (8, 9, 12, 13), 7),
    ("ddr4-16g-c2d1r2b16", (19, 20, 21, 22), (7, 9, 12, 13), 8),
    ("ddr4-4g-c1d1r1b8", (16, 17), (6,), None),
    ("ddr4-8g-c1d1r1b16", (17, 18, 19), (6,), None),
    ("ddr4-16g-c2d1r2b16-alt", (19, 20, 21, 22), (7, 9, 12, 13), 8),
]


@pytest.mark.parametrize("name,rows,cols,excluded", FINE_EXPECTED)
def test_fine_additions_per_fixture(name, rows, cols, excluded, clean_runs):
    fine = clean_runs[name][0].fine
    assert fine.shared_row_bits == rows
    assert fine.shared_column_bits == cols
    assert fine.excluded_column_bit == excluded


def test_span_masks_cover_all_function_combinations():
    fns = (BankFunction((13, 16)), BankFunction((14, 17)))
    assert sorted(span_masks(fns)) == sorted(
        [mask_of((13, 16)), mask_of((14, 17)), mask_of((13, 14, 16, 17))]
    )


def test_preserving_masks_keep_every_function_even():
    fns = tuple(
        BankFunction(b) for b in [(15, 19), (16, 20), (8, 9, 12, 13, 15, 18)]
    )
    cands = (8, 9, 12, 13, 14, 15, 16, 17, 18, 19, 20, 21)
    masks = bank_preserving_masks(fns, cands)
    for m in masks:
        for f in fns:
            assert parity(m & f.mask) == 0
    assert mask_of((15, 19)) not in masks  # flips the six-bit function
    assert mask_of((8, 15, 19)) in masks


def test_row_probes_use_bank_preserving_flips(clean_runs):
    # bit 19 of (15, 19) is entangled with the wide function, so its probe
    # must widen to {8, 15, 19}; (7, 14) holds no row bit at all
    result = clean_runs["ddr4-16g-c2d1r2b16"][0]
    probes = {p.function_bits: p for p in result.fine.row_probes}
    assert probes[(15, 19)].flip_bits == (8, 15, 19)
    assert probes[(15, 19)].conflict
    assert probes[(7, 14)].flip_bits == (7, 14)
    assert not probes[(7, 14)].conflict
    assert probes[(16, 20)].flip_bits == (16, 20)


def test_every_conflicting_probe_yields_a_row_bit(clean_runs):
    for name, (result, _, truth, _) in clean_runs.items():
        for probe in result.fine.row_probes:
            hit = probe.function_bits[1] in truth.row_bits
            assert probe.conflict == hit, (name, probe.function_bits)


def test_unique_longest_low_bit_cases():
    wide = BankFunction((7, 8, 9, 12, 13, 14, 15))
    assert unique_longest_low_bit((BankFunction((14, 18)), wide)) == 7
    # a tie between equally long functions names no exclusion
    assert unique_longest_low_bit((BankFunction((14, 17)), BankFunction((15, 18)))) is None
    assert unique_longest_low_bit(()) is None


def resolved_small(expected_rows=16, expected_columns=13):
    knowledge, truth = fixtures.load_fixture("ddr3-4g-c1d1r1b8")
    backend = simulated_backend(knowledge, truth, seed=4096)
    rng = random.Random("4096/pipeline")
    calib = calibrate(backend, rng=rng)
    coarse = coarse_scan(backend, calib, knowledge.address_bits, rng=rng)
    functions = truth.bank_functions
    return fine_resolve(
        backend, calib, coarse, functions, expected_rows, expected_columns, rng=rng
    )


def test_fine_resolve_completes_the_small_mapping():
    fine, mapping = resolved_small()
    truth = fixtures.load_ground_truth("ddr3-4g-c1d1r1b8")
    assert mapping.row_bits == truth.row_bits
    assert mapping.column_bits == truth.column_bits
    assert fine.shared_row_bits == (16, 17, 18)
    assert set(mapping.provenance) == set(range(32)) - set(mapping.function_bits) | {
        16,
        17,
        18,
    }


def test_wrong_expected_row_count_is_an_error():
    with pytest.raises(RowCountUnreachable):
        resolved_small(expected_rows=17)


def test_unreachable_column_count_is_an_error():
    # three candidates stay after row resolution; seventeen needs four
    with pytest.raises(ColumnCountUnreachable):
        resolved_small(expected_columns=17)


def test_wrong_column_count_breaks_invertibility():
    # an extra column bit lands on a function member and the space no
    # longer inverts, even though the count itself was satisfiable
    with pytest.raises(InconsistentCounts):
        resolved_small(expected_columns=14)
