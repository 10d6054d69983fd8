"""Bit-level helpers shared across the pipeline."""
from __future__ import annotations

from collections.abc import Iterable


def parity(value: int) -> int:
    return value.bit_count() & 1


def mask_of(bits: Iterable[int]) -> int:
    m = 0
    for b in bits:
        m |= 1 << b
    return m


def bits_of(mask: int) -> tuple[int, ...]:
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return tuple(out)


def is_power_of_two(n: int) -> bool:
    return n > 0 and n & (n - 1) == 0


def log2_exact(n: int) -> int:
    if not is_power_of_two(n):
        raise ValueError(f"{n} is not a power of two")
    return n.bit_length() - 1


def extract_bits(value: int, positions: Iterable[int]) -> int:
    """Pack the named bits of value, ascending position = ascending significance."""
    out = 0
    for i, pos in enumerate(sorted(positions)):
        out |= ((value >> pos) & 1) << i
    return out


def deposit_bits(value: int, positions: Iterable[int]) -> int:
    """Inverse of extract_bits: spread the low bits of value onto positions."""
    out = 0
    for i, pos in enumerate(sorted(positions)):
        out |= ((value >> i) & 1) << pos
    return out


def format_bit_list(bits: Iterable[int]) -> str:
    """Render a bit set as comma-separated runs, e.g. ``0..5, 7..13``."""
    seq = sorted(set(bits))
    if not seq:
        return ""
    runs = []
    start = prev = seq[0]
    for b in seq[1:]:
        if b == prev + 1:
            prev = b
            continue
        runs.append((start, prev))
        start = prev = b
    runs.append((start, prev))
    parts = []
    for lo, hi in runs:
        if lo == hi:
            parts.append(str(lo))
        elif hi == lo + 1:
            parts.append(f"{lo}, {hi}")
        else:
            parts.append(f"{lo}..{hi}")
    return ", ".join(parts)


def parse_bit_list(text: str) -> tuple[int, ...]:
    """Parse ``17..32`` / ``[0..5, 7..13]`` / ``6`` into a sorted bit tuple."""
    body = text.strip()
    if body.startswith("[") and body.endswith("]"):
        body = body[1:-1]
    bits: set[int] = set()
    for part in body.split(","):
        part = part.strip()
        if not part:
            continue
        if ".." in part:
            lo_s, hi_s = part.split("..", 1)
            lo, hi = int(lo_s), int(hi_s)
            if hi < lo:
                raise ValueError(f"descending bit range {part!r}")
            bits.update(range(lo, hi + 1))
        else:
            bits.add(int(part))
    return tuple(sorted(bits))
