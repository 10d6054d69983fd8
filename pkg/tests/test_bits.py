"""Bit helpers checked against brute-force definitions."""
from itertools import combinations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from dram_mapper.bits import (
    bits_of,
    deposit_bits,
    extract_bits,
    format_bit_list,
    is_power_of_two,
    log2_exact,
    mask_of,
    parity,
    parse_bit_list,
)

u64 = st.integers(min_value=0, max_value=2**64 - 1)
bit_sets = st.sets(st.integers(min_value=0, max_value=40), max_size=12)


@given(u64)
def test_parity_matches_popcount(value):
    assert parity(value) == bin(value).count("1") % 2


@given(u64, u64)
def test_parity_is_linear(a, b):
    assert parity(a ^ b) == parity(a) ^ parity(b)


@given(bit_sets)
def test_mask_bits_round_trip(bits):
    ordered = tuple(sorted(bits))
    assert bits_of(mask_of(ordered)) == ordered


@given(bit_sets, u64)
def test_deposit_extract_round_trip(bits, value):
    ordered = tuple(sorted(bits))
    packed = value % (1 << len(ordered)) if ordered else 0
    spread = deposit_bits(packed, ordered)
    assert spread & ~mask_of(ordered) == 0
    assert extract_bits(spread, ordered) == packed


@given(bit_sets)
def test_deposit_enumerates_exactly_the_submasks(bits):
    ordered = tuple(sorted(bits)[:6])
    spread = {deposit_bits(k, ordered) for k in range(1 << len(ordered))}
    submasks = {
        mask_of(chosen)
        for r in range(len(ordered) + 1)
        for chosen in combinations(ordered, r)
    }
    assert spread == submasks


@given(bit_sets)
def test_format_parse_round_trip(bits):
    ordered = tuple(sorted(bits))
    assert parse_bit_list(format_bit_list(ordered)) == ordered


def test_format_collapses_runs():
    assert format_bit_list((0, 1, 2, 3, 4, 5, 7, 8, 9, 10, 11, 12, 13)) == "0..5, 7..13"
    assert format_bit_list((6,)) == "6"
    assert format_bit_list(()) == ""


def test_parse_accepts_singletons_and_ranges():
    assert parse_bit_list("0..2, 5, 9..10") == (0, 1, 2, 5, 9, 10)
    assert parse_bit_list("") == ()


def test_parse_rejects_garbage():
    with pytest.raises(ValueError):
        parse_bit_list("3..x")


def test_power_of_two_checks():
    assert is_power_of_two(1)
    assert is_power_of_two(64)
    assert not is_power_of_two(0)
    assert not is_power_of_two(48)
    assert log2_exact(4096) == 12
    with pytest.raises(ValueError):
        log2_exact(3)
