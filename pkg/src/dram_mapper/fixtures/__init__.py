"""Built-in simulated systems with known ground-truth mappings.

Each fixture pairs a system config (chip type and organization) with the
mapping its memory controller actually uses, so the pipeline can run
end to end against a controller whose answer is known.
"""
from __future__ import annotations

from importlib import resources

from ..knowledge import SystemKnowledge, knowledge_from_config
from ..mapping import GroundTruthMapping, parse_mapping

FIXTURE_NAMES: tuple[str, ...] = (
    "ddr3-8g-c2d1r1b8",
    "ddr3-8g-c2d1r2b8",
    "ddr3-4g-c1d1r2b8",
    "ddr3-4g-c1d1r1b8",
    "ddr3-16g-c2d1r2b8",
    "ddr4-16g-c2d1r2b16",
    "ddr4-4g-c1d1r1b8",
    "ddr4-8g-c1d1r1b16",
    "ddr4-16g-c2d1r2b16-alt",
)


def _read(filename: str) -> str:
    return resources.files(__package__).joinpath(filename).read_text(encoding="utf-8")


def check_name(name: str) -> str:
    if name not in FIXTURE_NAMES:
        known = ", ".join(FIXTURE_NAMES)
        raise ValueError(f"unknown fixture {name!r}; known fixtures: {known}")
    return name


def fixture_description(name: str) -> str:
    first = _read(check_name(name) + ".map").splitlines()[0]
    return first.lstrip("# ").strip()


def load_knowledge(name: str) -> SystemKnowledge:
    return knowledge_from_config(_read(check_name(name) + ".cfg"))


def load_ground_truth(name: str) -> GroundTruthMapping:
    return parse_mapping(_read(check_name(name) + ".map"))


def load_fixture(name: str) -> tuple[SystemKnowledge, GroundTruthMapping]:
    return load_knowledge(name), load_ground_truth(name)


def load_capture(filename: str) -> str:
    """Raw captured tool output shipped with the package, e.g. dmidecode text."""
    return _read(filename)
