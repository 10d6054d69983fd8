"""Run reports: canonical JSON, delimited stage table, mapping file, figures.

Reports contain only seed-determined quantities (measurement counts and
summed simulated cycles, never wall-clock time), so two runs with the same
seed write byte-identical files.
"""
from __future__ import annotations

import json
from pathlib import Path

from .mapping import render_mapping
from .pipeline import PipelineResult

SCHEMA = "dram-mapper-report/1"


def build_report(result: PipelineResult, backend_info: dict | None = None) -> dict:
    kn = result.knowledge
    mapping = result.mapping
    report = {
        "schema": SCHEMA,
        "seed": result.config.seed,
        "backend": backend_info or {},
        "system": {
            "chip_type": kn.chip_type,
            "total_bytes": kn.total_bytes,
            "channels": kn.channels,
            "dimms": kn.dimms,
            "ranks": kn.ranks,
            "banks": kn.banks,
            "bank_count": kn.bank_count,
            "address_bits": kn.address_bits,
            "expected_row_bits": kn.expected_counts()[0],
            "expected_column_bits": kn.expected_counts()[1],
        },
        "parameters": result.config.as_dict(),
        "calibration": result.calibration.as_dict(),
        "coarse": result.coarse.as_dict(),
        "selection": result.selection.as_dict() if result.selection else None,
        "partition": result.partition.as_dict() if result.partition else None,
        "solve": result.solve.as_dict() if result.solve else None,
        "fine": result.fine.as_dict(),
        "mapping": {
            "functions": [list(f.bits) for f in mapping.bank_functions],
            "row_bits": list(mapping.row_bits),
            "column_bits": list(mapping.column_bits),
            "provenance": {str(b): tag for b, tag in (mapping.provenance or {}).items()},
        },
        "stage_stats": [s.as_dict() for s in result.stage_stats],
        "totals": {
            "measurements": result.total_measurements,
            "simulated_cycles": round(result.total_simulated_cycles, 1),
        },
        "warnings": list(result.warnings),
    }
    return report


def render_json(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


def render_stage_table(result: PipelineResult) -> str:
    lines = ["stage\tmeasurements\tsimulated_cycles"]
    for s in result.stage_stats:
        lines.append(f"{s.stage}\t{s.measurements}\t{s.simulated_cycles:.1f}")
    lines.append(
        f"total\t{result.total_measurements}\t{result.total_simulated_cycles:.1f}"
    )
    return "\n".join(lines) + "\n"


def render_figures(result: PipelineResult, out_dir: Path) -> list[Path]:
    """Latency histogram, pile sizes, and per-stage measurement counts."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    written = []

    fig, ax = plt.subplots(figsize=(7, 4))
    calib = result.calibration
    if calib.samples:
        ax.hist(calib.samples, bins=60, color="#4878a8", edgecolor="none")
    ax.axvline(calib.cutoff, color="#c44e52", linestyle="--", label="cutoff")
    ax.set_xlabel("access pair latency (cycles)")
    ax.set_ylabel("samples")
    ax.set_title("calibration latencies")
    ax.legend()
    fig.tight_layout()
    path = out_dir / "latency_histogram.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    written.append(path)

    if result.partition is not None:
        fig, ax = plt.subplots(figsize=(7, 4))
        sizes = [p.size for p in result.partition.piles]
        ax.bar(range(len(sizes)), sizes, color="#4878a8")
        expected = result.partition.expected_size
        ax.axhline(expected, color="#c44e52", linestyle="--", label="pool / banks")
        ax.set_xlabel("pile")
        ax.set_ylabel("addresses")
        ax.set_title("pile sizes (representative included)")
        ax.legend()
        fig.tight_layout()
        path = out_dir / "pile_sizes.png"
        fig.savefig(path, dpi=150)
        plt.close(fig)
        written.append(path)

    fig, ax = plt.subplots(figsize=(7, 4))
    stages = [s.stage for s in result.stage_stats]
    counts = [s.measurements for s in result.stage_stats]
    ax.bar(stages, counts, color="#4878a8")
    ax.set_ylabel("timed accesses")
    ax.set_title("measurements per stage")
    if max(counts, default=0) > 0:
        ax.set_yscale("log")
    fig.tight_layout()
    path = out_dir / "stage_counts.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    written.append(path)
    return written


def write_outputs(
    result: PipelineResult,
    out_dir: str | Path,
    backend_info: dict | None = None,
    figures: bool = True,
) -> dict[str, Path]:
    """Write report.json, mapping.map, stages.tsv, and figures into out_dir."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths: dict[str, Path] = {}

    report_path = out / "report.json"
    report_path.write_text(render_json(build_report(result, backend_info)))
    paths["report"] = report_path

    map_path = out / "mapping.map"
    map_path.write_text(render_mapping(result.mapping, header="recovered address mapping"))
    paths["mapping"] = map_path

    table_path = out / "stages.tsv"
    table_path.write_text(render_stage_table(result))
    paths["stages"] = table_path

    if figures:
        for fig_path in render_figures(result, out):
            paths[fig_path.stem] = fig_path
    return paths
