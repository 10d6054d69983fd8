"""System knowledge gathering: how much memory, how many banks, which chip.

The reverse-engineering pipeline needs a handful of facts before it can
interpret timing measurements: chip type, total installed memory, and the
channel/DIMM/rank/bank organization. On real hardware these come from
``dmidecode`` and ``decode-dimms`` output; here both can be parsed from
captured text, and a config file can supply or override any field.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, replace

from .bits import is_power_of_two, log2_exact
from .errors import IncompleteInfo, NonPowerOfTwoBanks, ParseError

MIB = 1 << 20

# (chip type, per-bank bytes) -> (row bits, column bits) for common parts.
# Column count includes the 3 low bits covered by the 64-bit bus width.
EXPECTED_BIT_COUNTS: dict[tuple[str, int], tuple[int, int]] = {
    ("DDR3", 1 << 28): (15, 13),
    ("DDR3", 1 << 29): (16, 13),
    ("DDR4", 1 << 28): (15, 13),
    ("DDR4", 1 << 29): (16, 13),
}

_CONFIG_KEYS = {
    "chip_type",
    "total_mib",
    "channels",
    "dimms",
    "ranks",
    "banks",
    "expected_row_bits",
    "expected_column_bits",
}


@dataclass(frozen=True)
class SystemKnowledge:
    """Facts about the memory system under test.

    ``banks`` counts banks per rank; ``bank_count`` multiplies in channels,
    DIMMs, and ranks because every level of that hierarchy gets folded into
    the single bank index the timing channel distinguishes.
    """

    chip_type: str
    total_bytes: int
    channels: int
    dimms: int
    ranks: int
    banks: int
    expected_row_bits: int | None = None
    expected_column_bits: int | None = None

    def __post_init__(self):
        if self.chip_type not in ("DDR3", "DDR4"):
            raise ParseError(f"unsupported chip type {self.chip_type!r}")
        for name in ("total_bytes", "channels", "dimms", "ranks", "banks"):
            if getattr(self, name) <= 0:
                raise ParseError(f"{name} must be positive")
        if not is_power_of_two(self.bank_count):
            raise NonPowerOfTwoBanks(
                f"bank count {self.bank_count} "
                f"({self.channels} channels x {self.dimms} DIMMs x "
                f"{self.ranks} ranks x {self.banks} banks) is not a power of two"
            )
        if not is_power_of_two(self.total_bytes):
            raise ParseError(f"total memory {self.total_bytes} is not a power of two")

    @property
    def bank_count(self) -> int:
        return self.channels * self.dimms * self.ranks * self.banks

    @property
    def bank_bits(self) -> int:
        return log2_exact(self.bank_count)

    @property
    def address_bits(self) -> int:
        return log2_exact(self.total_bytes)

    @property
    def per_bank_bytes(self) -> int:
        return self.total_bytes // self.bank_count

    def expected_counts(self) -> tuple[int, int]:
        """(row bits, column bits) this system should end with."""
        rows, cols = self.expected_row_bits, self.expected_column_bits
        if rows is None or cols is None:
            table = EXPECTED_BIT_COUNTS.get((self.chip_type, self.per_bank_bytes))
            if table is None:
                raise IncompleteInfo(
                    f"no expected bit counts for {self.chip_type} with "
                    f"{self.per_bank_bytes} bytes per bank; set "
                    "expected_row_bits and expected_column_bits in the config"
                )
            rows = rows if rows is not None else table[0]
            cols = cols if cols is not None else table[1]
        return rows, cols


def parse_config(text: str) -> dict[str, int | str]:
    """Parse ``key = value`` lines; '#' comments, unknown keys rejected."""
    out: dict[str, int | str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"line {lineno}: expected key = value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _CONFIG_KEYS:
            raise ParseError(f"line {lineno}: unknown config key {key!r}")
        if key in out:
            raise ParseError(f"line {lineno}: duplicate config key {key!r}")
        if key == "chip_type":
            out[key] = value.upper()
        else:
            try:
                out[key] = int(value, 0)
            except ValueError as e:
                raise ParseError(f"line {lineno}: {key} needs an integer, got {value!r}") from e
    return out


def knowledge_from_config(text: str) -> SystemKnowledge:
    fields = parse_config(text)
    return _build(fields, source="config")


def parse_dmidecode(text: str) -> dict[str, int | str]:
    """Pull chip type, sizes, rank, and channel count from dmidecode output."""
    fields: dict[str, int | str] = {}
    devices: list[dict[str, str]] = []
    current: dict[str, str] | None = None
    for raw in text.splitlines():
        if raw.strip() == "Memory Device":
            current = {}
            devices.append(current)
            continue
        if current is not None:
            if raw and not raw[0].isspace():
                current = None
                continue
            m = re.match(r"\s*([^:]+):\s*(.*)$", raw)
            if m:
                current[m.group(1).strip()] = m.group(2).strip()
    populated = [d for d in devices if "No Module Installed" not in d.get("Size", "")]
    if populated:
        total = 0
        for d in populated:
            m = re.match(r"(\d+)\s*(MB|GB)", d.get("Size", ""))
            if not m:
                total = 0
                break
            scale = MIB if m.group(2) == "MB" else 1 << 30
            total += int(m.group(1)) * scale
        if total:
            fields["total_bytes"] = total
        types = {d.get("Type") for d in populated if d.get("Type") in ("DDR3", "DDR4")}
        if len(types) == 1:
            fields["chip_type"] = types.pop()
        ranks = {d.get("Rank") for d in populated if d.get("Rank", "").isdigit()}
        if len(ranks) == 1:
            fields["ranks"] = int(ranks.pop())
        channels = {
            m.group(1)
            for d in populated
            if (m := re.search(r"Channel\s*([A-Z0-9])", d.get("Locator", "")))
        }
        if channels:
            fields["channels"] = len(channels)
            # dimms counts modules per channel, matching the config key
            fields["dimms"] = max(1, len(populated) // len(channels))
    return fields


def parse_decode_dimms(text: str) -> dict[str, int | str]:
    """Pull chip type, bank count, and ranks from decode-dimms output."""
    fields: dict[str, int | str] = {}
    m = re.search(r"Fundamental Memory type\s+(DDR[34])", text)
    if m:
        fields["chip_type"] = m.group(1)
    m = re.search(r"Banks x Rows x Columns x Bits\s+(\d+)\s*x\s*(\d+)\s*x\s*(\d+)", text)
    if m:
        fields["banks"] = int(m.group(1))
    m = re.search(r"(?:Number of )?Ranks\s+(\d+)", text)
    if m:
        fields["ranks"] = int(m.group(1))
    return fields


def _build(fields: dict[str, int | str], source: str) -> SystemKnowledge:
    if "total_bytes" not in fields and "total_mib" in fields:
        fields = dict(fields)
        fields["total_bytes"] = int(fields.pop("total_mib")) * MIB
    required = ("chip_type", "total_bytes", "channels", "dimms", "ranks", "banks")
    missing = [k for k in required if k not in fields]
    if missing:
        raise IncompleteInfo(f"{source} lacks: {', '.join(missing)}")
    return SystemKnowledge(
        chip_type=str(fields["chip_type"]),
        total_bytes=int(fields["total_bytes"]),
        channels=int(fields["channels"]),
        dimms=int(fields["dimms"]),
        ranks=int(fields["ranks"]),
        banks=int(fields["banks"]),
        expected_row_bits=(
            int(fields["expected_row_bits"]) if "expected_row_bits" in fields else None
        ),
        expected_column_bits=(
            int(fields["expected_column_bits"]) if "expected_column_bits" in fields else None
        ),
    )


def gather_knowledge(
    dmidecode_text: str | None = None,
    decode_dimms_text: str | None = None,
    config_text: str | None = None,
) -> SystemKnowledge:
    """Merge tool captures and config; config wins on every overlap."""
    fields: dict[str, int | str] = {}
    if dmidecode_text is not None:
        fields.update(parse_dmidecode(dmidecode_text))
    if decode_dimms_text is not None:
        fields.update(parse_decode_dimms(decode_dimms_text))
    if config_text is not None:
        fields.update(parse_config(config_text))
    return _build(fields, source="gathered sources")


def with_overrides(base: SystemKnowledge, config_text: str) -> SystemKnowledge:
    fields = parse_config(config_text)
    if "total_mib" in fields:
        fields["total_bytes"] = int(fields.pop("total_mib")) * MIB
    known = {k: v for k, v in fields.items() if k != "total_bytes"}
    kn = replace(base, **known)
    if "total_bytes" in fields:
        kn = replace(kn, total_bytes=int(fields["total_bytes"]))
    return kn
