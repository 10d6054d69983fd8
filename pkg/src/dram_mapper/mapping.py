"""Address mapping types, the mapping file format, and GF(2) canonicalization.

A mapping describes how a physical address decomposes into DRAM coordinates:
each bank-index bit is the XOR of the address bits named by one bank
function, and row/column values are the address bits at the named positions
packed so that ascending bit position means ascending significance.

Two function sets describe the same physical banking whenever they span the
same GF(2) space (they induce identical address piles and differ only in how
bank indices are labeled), so equivalence checks reduce both sides to the
unique reduced basis of their span.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field

from .bits import bits_of, extract_bits, format_bit_list, mask_of, parse_bit_list
from .errors import ParseError


@dataclass(frozen=True, order=True)
class BankFunction:
    """One XOR function: the set of address bits folded into one bank bit."""

    bits: tuple[int, ...]

    def __post_init__(self):
        if not self.bits:
            raise ValueError("bank function needs at least one bit")
        ordered = tuple(sorted(set(self.bits)))
        if ordered != self.bits:
            object.__setattr__(self, "bits", ordered)
        if self.bits[0] < 0:
            raise ValueError("negative bit position")

    @property
    def mask(self) -> int:
        return mask_of(self.bits)

    def evaluate(self, addr: int) -> int:
        return (addr & self.mask).bit_count() & 1

    def __str__(self) -> str:
        return "(" + ", ".join(str(b) for b in self.bits) + ")"


@dataclass(frozen=True)
class DramAddress:
    bank_index: int
    row: int
    column: int


def rref_basis(masks: list[int]) -> tuple[int, ...]:
    """Unique reduced GF(2) basis (pivot on highest set bit) of the span."""
    rows: list[int] = []
    for m in masks:
        v = m
        for r in rows:
            if v >> (r.bit_length() - 1) & 1:
                v ^= r
        if v:
            rows.append(v)
            rows.sort(key=int.bit_length, reverse=True)
    # back-eliminate pivots from the rows above them
    for i, r in enumerate(rows):
        p = r.bit_length() - 1
        for j in range(i):
            if rows[j] >> p & 1:
                rows[j] ^= r
    return tuple(sorted(rows, reverse=True))


def gf2_rank(masks: list[int]) -> int:
    return len(rref_basis(masks))


@dataclass(frozen=True)
class AddressMapping:
    """Bank functions plus row and column bit positions.

    ``provenance`` optionally tags each row/column bit with how it was found
    ("coarse" or "fine-shared"); it is carried in run reports but excluded
    from the mapping file format and from equality.
    """

    bank_functions: tuple[BankFunction, ...]
    row_bits: tuple[int, ...]
    column_bits: tuple[int, ...]
    provenance: dict[int, str] | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "bank_functions", tuple(self.bank_functions))
        object.__setattr__(self, "row_bits", tuple(sorted(set(self.row_bits))))
        object.__setattr__(self, "column_bits", tuple(sorted(set(self.column_bits))))
        if set(self.row_bits) & set(self.column_bits):
            raise ValueError("row and column bit sets overlap")

    @property
    def function_masks(self) -> tuple[int, ...]:
        return tuple(f.mask for f in self.bank_functions)

    @property
    def function_bits(self) -> tuple[int, ...]:
        out: set[int] = set()
        for f in self.bank_functions:
            out.update(f.bits)
        return tuple(sorted(out))

    def map(self, addr: int) -> DramAddress:
        return map_physical(self, addr)

    def covered_bits(self) -> tuple[int, ...]:
        return tuple(sorted(set(self.function_bits) | set(self.row_bits) | set(self.column_bits)))

    def is_bijective(self, address_bits: int) -> bool:
        """True when the mapping is invertible over ``address_bits`` bits."""
        vectors = [f.mask for f in self.bank_functions]
        vectors += [1 << b for b in self.row_bits]
        vectors += [1 << b for b in self.column_bits]
        covered = set(self.covered_bits())
        if covered != set(range(address_bits)):
            return False
        return gf2_rank(vectors) == address_bits

    def canonical(self) -> "AddressMapping":
        """Sorted-function copy with provenance dropped."""
        funcs = tuple(sorted(self.bank_functions, key=lambda f: (len(f.bits), f.bits)))
        return AddressMapping(funcs, self.row_bits, self.column_bits)

    def span_basis(self) -> tuple[BankFunction, ...]:
        basis = rref_basis([f.mask for f in self.bank_functions])
        return tuple(BankFunction(bits_of(m)) for m in basis)


# The ground truth installed into a simulated controller uses the same shape.
GroundTruthMapping = AddressMapping


def map_physical(mapping: AddressMapping, addr: int) -> DramAddress:
    """Decompose a physical address under the mapping."""
    if addr < 0:
        raise ValueError("negative physical address")
    bank = 0
    for i, mask in enumerate(mapping.function_masks):
        bank |= ((addr & mask).bit_count() & 1) << i
    return DramAddress(
        bank_index=bank,
        row=extract_bits(addr, mapping.row_bits),
        column=extract_bits(addr, mapping.column_bits),
    )


def functions_equivalent(a: AddressMapping, b: AddressMapping) -> bool:
    return rref_basis([f.mask for f in a.bank_functions]) == rref_basis(
        [f.mask for f in b.bank_functions]
    )


# -- mapping file format -----------------------------------------------------
#
#   functions = [[6], [14, 17], [15, 18], [16, 19]]
#   row_bits = 17..32
#   column_bits = [0..5, 7..13]
#
# '#' starts a comment; keys may appear in any order.

_FUNCS_RE = re.compile(r"\[([0-9,\s]*)\]")


def _parse_functions(value: str) -> tuple[BankFunction, ...]:
    body = value.strip()
    if not (body.startswith("[") and body.endswith("]")):
        raise ParseError(f"functions must be a bracketed list, got {value!r}")
    inner = body[1:-1].strip()
    if not inner:
        return ()
    groups = _FUNCS_RE.findall(inner)
    leftover = _FUNCS_RE.sub("", inner).replace(",", "").strip()
    if leftover:
        raise ParseError(f"unparsed function text {leftover!r}")
    out = []
    for g in groups:
        nums = [int(x) for x in g.replace(",", " ").split()]
        if not nums:
            raise ParseError("empty function group")
        out.append(BankFunction(tuple(nums)))
    return tuple(out)


def parse_mapping(text: str) -> AddressMapping:
    fields: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"line {lineno}: expected key = value, got {raw!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        if key in fields:
            raise ParseError(f"line {lineno}: duplicate key {key!r}")
        fields[key] = value.strip()
    missing = {"functions", "row_bits", "column_bits"} - fields.keys()
    if missing:
        raise ParseError(f"mapping text lacks keys: {', '.join(sorted(missing))}")
    try:
        rows = parse_bit_list(fields["row_bits"])
        cols = parse_bit_list(fields["column_bits"])
    except ValueError as e:
        raise ParseError(str(e)) from e
    return AddressMapping(_parse_functions(fields["functions"]), rows, cols)


def render_mapping(mapping: AddressMapping, header: str | None = None) -> str:
    funcs = sorted(mapping.bank_functions, key=lambda f: (len(f.bits), f.bits))
    func_text = "[" + ", ".join("[" + ", ".join(map(str, f.bits)) + "]" for f in funcs) + "]"
    lines = []
    if header:
        lines.extend(f"# {h}" for h in header.splitlines())
    lines.append(f"functions = {func_text}")
    lines.append(f"row_bits = [{format_bit_list(mapping.row_bits)}]")
    lines.append(f"column_bits = [{format_bit_list(mapping.column_bits)}]")
    return "\n".join(lines) + "\n"


def load_mapping(path) -> AddressMapping:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_mapping(fh.read())
