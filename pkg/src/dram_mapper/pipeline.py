"""End-to-end orchestration of the reverse-engineering pipeline.

Stage order: calibrate the timing channel, coarse-classify every address
bit, build the candidate pool, partition it into per-bank piles, solve the
XOR functions, number the piles, then resolve the bits the coarse scan
could not separate. Measurement counts and simulated cycles are recorded
per stage from the backend's own counters, so two runs with the same seed
produce identical numbers.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field

from .backend import LatencyModel, MemoryBackend, PageLayout, SimulatedBackend
from .bankfns import (
    DEFAULT_CONFIRM_VOTES,
    DEFAULT_DELTA,
    DEFAULT_MAX_FUNCTION_BITS,
    DEFAULT_PER_THRESHOLD,
    PartitionResult,
    Selection,
    SolveResult,
    number_piles,
    partition_piles,
    select_addresses,
    solve_functions,
)
from .coarse import DEFAULT_VOTES, CoarseResult, coarse_scan
from .fine import FineResult, fine_resolve
from .knowledge import SystemKnowledge
from .mapping import AddressMapping, GroundTruthMapping
from .timing import DEFAULT_CALIBRATION_SAMPLES, Calibration, calibrate

DEFAULT_SEED = 4096


@dataclass(frozen=True)
class PipelineConfig:
    seed: int = DEFAULT_SEED
    votes: int = DEFAULT_VOTES
    confirm_votes: int = DEFAULT_CONFIRM_VOTES
    delta: float = DEFAULT_DELTA
    per_threshold: float = DEFAULT_PER_THRESHOLD
    calibration_samples: int = DEFAULT_CALIBRATION_SAMPLES
    max_function_bits: int = DEFAULT_MAX_FUNCTION_BITS
    rounds: int | None = None

    def as_dict(self) -> dict:
        return {
            "seed": self.seed,
            "votes": self.votes,
            "confirm_votes": self.confirm_votes,
            "delta": self.delta,
            "per_threshold": self.per_threshold,
            "calibration_samples": self.calibration_samples,
            "max_function_bits": self.max_function_bits,
            "rounds": self.rounds,
        }


@dataclass(frozen=True)
class StageStats:
    stage: str
    measurements: int
    simulated_cycles: float

    def as_dict(self) -> dict:
        return {
            "stage": self.stage,
            "measurements": self.measurements,
            "simulated_cycles": round(self.simulated_cycles, 1),
        }


@dataclass
class PipelineResult:
    mapping: AddressMapping
    knowledge: SystemKnowledge
    config: PipelineConfig
    calibration: Calibration
    coarse: CoarseResult
    selection: Selection | None
    partition: PartitionResult | None
    solve: SolveResult | None
    fine: FineResult
    stage_stats: list[StageStats] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def total_measurements(self) -> int:
        return sum(s.measurements for s in self.stage_stats)

    @property
    def total_simulated_cycles(self) -> float:
        return sum(s.simulated_cycles for s in self.stage_stats)


def simulated_backend(
    knowledge: SystemKnowledge,
    ground_truth: GroundTruthMapping,
    seed: int = DEFAULT_SEED,
    latency: LatencyModel | None = None,
    layout: PageLayout | None = None,
) -> SimulatedBackend:
    """Backend with its own RNG stream derived from the seed."""
    return SimulatedBackend(
        ground_truth=ground_truth,
        size_bytes=knowledge.total_bytes,
        latency=latency,
        layout=layout,
        rng=random.Random(f"{seed}/backend"),
    )


def run_pipeline(
    backend: MemoryBackend,
    knowledge: SystemKnowledge,
    config: PipelineConfig | None = None,
) -> PipelineResult:
    config = config or PipelineConfig()
    if config.rounds is not None:
        backend.default_rounds = config.rounds
    expected_rows, expected_cols = knowledge.expected_counts()
    rng = random.Random(f"{config.seed}/pipeline")
    stats: list[StageStats] = []
    warnings: list[str] = []

    def record(stage: str, before) -> None:
        diff = backend.stats.since(before)
        stats.append(StageStats(stage, diff.measurements, diff.simulated_cycles))

    before = backend.stats.snapshot()
    calib = calibrate(backend, config.calibration_samples, rng)
    record("calibration", before)

    before = backend.stats.snapshot()
    coarse = coarse_scan(backend, calib, knowledge.address_bits, config.votes, rng)
    record("coarse", before)

    selection = partition = solve = None
    functions: tuple = ()
    if knowledge.bank_bits > 0 or coarse.candidate_bits:
        selection = select_addresses(
            backend, coarse.candidate_bits, config.max_function_bits
        )
        before = backend.stats.snapshot()
        partition = partition_piles(
            backend,
            calib,
            selection,
            knowledge.bank_count,
            delta=config.delta,
            per_threshold=config.per_threshold,
            confirm_votes=config.confirm_votes,
        )
        record("partition", before)
        solve = solve_functions(
            partition.piles, selection.candidate_bits, knowledge.bank_bits
        )
        partition = PartitionResult(
            piles=number_piles(partition.piles, solve.functions),
            coverage=partition.coverage,
            expected_size=partition.expected_size,
            unassigned_count=partition.unassigned_count,
            rejected_count=partition.rejected_count,
        )
        functions = solve.functions
        if partition.rejected_count:
            warnings.append(
                f"partition retired {partition.rejected_count} representatives "
                "of already-covered banks"
            )

    before = backend.stats.snapshot()
    fine, mapping = fine_resolve(
        backend,
        calib,
        coarse,
        functions,
        expected_rows,
        expected_cols,
        config.votes,
        rng,
    )
    record("fine", before)

    if fine.excluded_column_bit is not None:
        warnings.append(
            f"bit {fine.excluded_column_bit} treated as channel or rank "
            "select below the column range"
        )
    return PipelineResult(
        mapping=mapping,
        knowledge=knowledge,
        config=config,
        calibration=calib,
        coarse=coarse,
        selection=selection,
        partition=partition,
        solve=solve,
        fine=fine,
        stage_stats=stats,
        warnings=warnings,
    )
