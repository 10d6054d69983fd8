"""Command line interface.

Subcommands:
  reverse   run the full pipeline and print the recovered mapping
  report    run the pipeline and write report, mapping, table, and figures
  simulate  inspect fixtures, decode addresses, or time single pairs
  verify    compare a recovered mapping file against a fixture's truth
  pairs     emit double-sided hammering triples from a mapping
"""
from __future__ import annotations

import argparse
import os
import sys
import time
from pathlib import Path

from . import fixtures
from .backend import HardwareBackend, LatencyModel, PageLayout
from .errors import (
    AddressOutsideAllocation,
    BackendUnsupported,
    BimodalityNotFound,
    ColumnCountUnreachable,
    IncompleteInfo,
    InconsistentCounts,
    InsufficientAddressPairs,
    MapperError,
    NoContiguousRange,
    NonPowerOfTwoBanks,
    NoTriplesAvailable,
    NoValidBasis,
    OutOfMemory,
    ParseError,
    PartitionStalled,
    RowCountUnreachable,
    TooManyCandidateBits,
    UnderdeterminedPiles,
)
from .hammer import generate_triples, render_triples
from .knowledge import knowledge_from_config
from .mapping import functions_equivalent, load_mapping, map_physical, render_mapping
from .pipeline import DEFAULT_SEED, PipelineConfig, run_pipeline, simulated_backend
from .report import render_stage_table, write_outputs

EXIT_CODES: dict[type, int] = {
    ParseError: 10,
    IncompleteInfo: 11,
    NonPowerOfTwoBanks: 12,
    OutOfMemory: 13,
    AddressOutsideAllocation: 14,
    BimodalityNotFound: 15,
    InsufficientAddressPairs: 16,
    NoContiguousRange: 17,
    PartitionStalled: 18,
    TooManyCandidateBits: 19,
    NoValidBasis: 20,
    UnderdeterminedPiles: 21,
    RowCountUnreachable: 22,
    ColumnCountUnreachable: 23,
    InconsistentCounts: 24,
    NoTriplesAvailable: 25,
    BackendUnsupported: 26,
}


def _default_seed() -> int:
    env = os.environ.get("DRAM_MAPPER_SEED")
    if env is not None:
        try:
            return int(env, 0)
        except ValueError:
            pass
    return DEFAULT_SEED


def _addr(text: str) -> int:
    return int(text, 0)


def _add_system_args(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "--fixture", choices=fixtures.FIXTURE_NAMES, help="built-in simulated system"
    )
    p.add_argument("--config", type=Path, help="system config file")
    p.add_argument(
        "--ground-truth", type=Path, help="mapping file the simulator should use"
    )


def _add_backend_args(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "--backend", choices=("sim", "hardware"), default="sim", help="measurement source"
    )
    p.add_argument("--seed", type=_addr, default=None, help="run seed")
    p.add_argument(
        "--flip-prob", type=float, default=0.0, help="per-access misclassification rate"
    )
    p.add_argument(
        "--noise-stddev", type=float, default=10.0, help="latency jitter in cycles"
    )
    p.add_argument(
        "--pages", type=int, default=4096, help="pages in the contiguous owned run"
    )


def _add_pipeline_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--votes", type=int, default=5, help="bases per coarse or fine probe")
    p.add_argument(
        "--confirm-votes", type=int, default=5, help="sequential votes confirming a member"
    )
    p.add_argument("--delta", type=float, default=0.2, help="pile size tolerance")
    p.add_argument(
        "--per-threshold", type=float, default=0.85, help="required pool coverage"
    )
    p.add_argument("--calibration-samples", type=int, default=4000)
    p.add_argument("--max-function-bits", type=int, default=16)
    p.add_argument("--rounds", type=int, default=None, help="accesses per measurement")


def _load_system(args) -> tuple:
    if args.fixture:
        knowledge, truth = fixtures.load_fixture(args.fixture)
        if args.config:
            from .knowledge import with_overrides

            knowledge = with_overrides(knowledge, args.config.read_text())
        return knowledge, truth
    if not args.config or not args.ground_truth:
        raise IncompleteInfo(
            "need --fixture, or both --config and --ground-truth"
        )
    knowledge = knowledge_from_config(args.config.read_text())
    truth = load_mapping(args.ground_truth)
    return knowledge, truth


def _build_backend(args):
    knowledge, truth = _load_system(args)
    seed = args.seed if args.seed is not None else _default_seed()
    if args.backend == "hardware":
        return knowledge, HardwareBackend(), seed, {}
    latency = LatencyModel(
        stddev=args.noise_stddev, flip_probability=args.flip_prob
    )
    layout = PageLayout(run_pages=args.pages)
    backend = simulated_backend(knowledge, truth, seed, latency, layout)
    info = {
        "kind": "simulated",
        "fixture": args.fixture,
        "size_bytes": knowledge.total_bytes,
        "latency": {
            "conflict_cycles": latency.conflict_cycles,
            "fast_cycles": latency.fast_cycles,
            "stddev": latency.stddev,
            "flip_probability": latency.flip_probability,
        },
        "layout": {
            "page_size": layout.page_size,
            "run_pages": layout.run_pages,
            "ladder_pages": layout.ladder_pages,
            "ladder_start_bit": layout.ladder_start_bit,
        },
    }
    return knowledge, backend, seed, info


def _pipeline_config(args, seed: int) -> PipelineConfig:
    return PipelineConfig(
        seed=seed,
        votes=args.votes,
        confirm_votes=args.confirm_votes,
        delta=args.delta,
        per_threshold=args.per_threshold,
        calibration_samples=args.calibration_samples,
        max_function_bits=args.max_function_bits,
        rounds=args.rounds,
    )


def _run(args):
    knowledge, backend, seed, info = _build_backend(args)
    t0 = time.perf_counter()
    result = run_pipeline(backend, knowledge, _pipeline_config(args, seed))
    elapsed = time.perf_counter() - t0
    print(f"pipeline finished in {elapsed:.1f}s wall clock", file=sys.stderr)
    print(render_stage_table(result), end="", file=sys.stderr)
    for w in result.warnings:
        print(f"note: {w}", file=sys.stderr)
    return result, info


def cmd_reverse(args) -> int:
    result, info = _run(args)
    print(render_mapping(result.mapping, header="recovered address mapping"), end="")
    if args.report:
        paths = write_outputs(result, args.report, info, figures=not args.no_figures)
        for name in sorted(paths):
            print(f"wrote {paths[name]}", file=sys.stderr)
    return 0


def cmd_report(args) -> int:
    result, info = _run(args)
    paths = write_outputs(result, args.out, info, figures=not args.no_figures)
    for name in sorted(paths):
        print(f"wrote {paths[name]}", file=sys.stderr)
    return 0


def cmd_simulate(args) -> int:
    if args.list_fixtures:
        for name in fixtures.FIXTURE_NAMES:
            print(f"{name}\t{fixtures.fixture_description(name)}")
        return 0
    if not args.fixture and not (args.config and args.ground_truth):
        raise IncompleteInfo("need --fixture (or --config plus --ground-truth)")
    knowledge, truth = _load_system(args)
    if args.decode:
        for addr in args.decode:
            c = map_physical(truth, addr)
            print(f"{addr:#x}\tbank {c.bank_index}\trow {c.row}\tcolumn {c.column}")
        return 0
    if args.measure:
        _, backend, _, _ = _build_backend(args)
        a, b = args.measure
        lat = backend.measure(a, b, args.rounds)
        print(f"{lat:.1f}")
        return 0
    print(
        f"{knowledge.chip_type}, {knowledge.total_bytes} bytes, "
        f"{knowledge.bank_count} banks ({knowledge.channels} channels x "
        f"{knowledge.dimms} DIMMs x {knowledge.ranks} ranks x {knowledge.banks} banks)"
    )
    print(render_mapping(truth), end="")
    return 0


def cmd_verify(args) -> int:
    recovered = load_mapping(args.mapping)
    truth = fixtures.load_ground_truth(args.fixture)
    ok = True
    if tuple(sorted(f.bits for f in recovered.bank_functions)) == tuple(
        sorted(f.bits for f in truth.bank_functions)
    ):
        print("functions: exact match")
    elif functions_equivalent(recovered, truth):
        print("functions: equivalent basis (same span)")
    else:
        print("functions: MISMATCH")
        ok = False
    for label, got, want in (
        ("row bits", recovered.row_bits, truth.row_bits),
        ("column bits", recovered.column_bits, truth.column_bits),
    ):
        if got == want:
            print(f"{label}: match")
        else:
            print(f"{label}: MISMATCH (got {list(got)}, want {list(want)})")
            ok = False
    return 0 if ok else 1


def cmd_pairs(args) -> int:
    if args.mapping:
        mapping = load_mapping(args.mapping)
    elif args.fixture:
        mapping = fixtures.load_ground_truth(args.fixture)
    else:
        raise IncompleteInfo("need --mapping or --fixture")
    triples = generate_triples(
        mapping, region_base=args.base, region_bytes=args.bytes, step=args.step
    )
    text = render_triples(triples)
    if args.out:
        Path(args.out).write_text(text)
        print(f"wrote {len(triples)} triples to {args.out}", file=sys.stderr)
    else:
        print(text, end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dram-mapper",
        description="Reverse engineer DRAM address mappings from access timing.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("reverse", help="recover the mapping and print it")
    _add_system_args(p)
    _add_backend_args(p)
    _add_pipeline_args(p)
    p.add_argument("--report", type=Path, help="also write artifacts to this directory")
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_reverse)

    p = sub.add_parser("report", help="recover the mapping and write artifacts")
    _add_system_args(p)
    _add_backend_args(p)
    _add_pipeline_args(p)
    p.add_argument("--out", type=Path, required=True, help="output directory")
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("simulate", help="inspect fixtures and the simulator")
    _add_system_args(p)
    _add_backend_args(p)
    p.add_argument("--list-fixtures", action="store_true")
    p.add_argument("--decode", type=_addr, nargs="+", help="physical addresses to decode")
    p.add_argument(
        "--measure", type=_addr, nargs=2, metavar=("A", "B"), help="time one pair"
    )
    p.add_argument("--rounds", type=int, default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="check a recovered mapping against a fixture")
    p.add_argument("--fixture", choices=fixtures.FIXTURE_NAMES, required=True)
    p.add_argument("--mapping", type=Path, required=True)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("pairs", help="emit double-sided hammering triples")
    p.add_argument("--fixture", choices=fixtures.FIXTURE_NAMES)
    p.add_argument("--mapping", type=Path)
    p.add_argument("--base", type=_addr, default=0)
    p.add_argument("--bytes", type=_addr, default=1 << 20)
    p.add_argument("--step", type=_addr, default=64)
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_pairs)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except MapperError as e:
        print(f"error: {e}", file=sys.stderr)
        for cls in type(e).__mro__:
            if cls in EXIT_CODES:
                return EXIT_CODES[cls]
        return 1
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
