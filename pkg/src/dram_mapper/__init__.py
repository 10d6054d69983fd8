"""Reverse engineering of DRAM address mappings from access timing.

The library recovers the three pieces a memory controller uses to place a
physical address: XOR functions over address bits that select the bank,
the bits forming the row index, and the bits forming the column index. It
drives any MemoryBackend; the bundled simulated backend answers timing
queries from an installed ground-truth mapping so the whole pipeline can
be exercised and checked.
"""
from .backend import (
    HardwareBackend,
    LatencyModel,
    MemoryBackend,
    PageLayout,
    SimulatedBackend,
)
from .errors import MapperError
from .hammer import HammerTriple, generate_triples
from .knowledge import SystemKnowledge, gather_knowledge, knowledge_from_config
from .mapping import (
    AddressMapping,
    BankFunction,
    DramAddress,
    GroundTruthMapping,
    functions_equivalent,
    load_mapping,
    map_physical,
    parse_mapping,
    render_mapping,
)
from .pipeline import (
    DEFAULT_SEED,
    PipelineConfig,
    PipelineResult,
    run_pipeline,
    simulated_backend,
)
from .report import build_report, write_outputs
from .timing import Calibration, calibrate, is_sbdr, vote_sbdr

__version__ = "0.1.0"

__all__ = [
    "AddressMapping",
    "BankFunction",
    "Calibration",
    "DEFAULT_SEED",
    "DramAddress",
    "GroundTruthMapping",
    "HammerTriple",
    "HardwareBackend",
    "LatencyModel",
    "MapperError",
    "MemoryBackend",
    "PageLayout",
    "PipelineConfig",
    "PipelineResult",
    "SimulatedBackend",
    "SystemKnowledge",
    "build_report",
    "calibrate",
    "functions_equivalent",
    "gather_knowledge",
    "generate_triples",
    "is_sbdr",
    "knowledge_from_config",
    "load_mapping",
    "map_physical",
    "parse_mapping",
    "render_mapping",
    "run_pipeline",
    "simulated_backend",
    "vote_sbdr",
    "write_outputs",
]
