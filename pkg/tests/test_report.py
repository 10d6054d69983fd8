"""Run reports: JSON shape, determinism, stage table, figures on disk."""
import json

from dram_mapper import fixtures
from dram_mapper.mapping import parse_mapping
from dram_mapper.pipeline import PipelineConfig, run_pipeline, simulated_backend
from dram_mapper.report import (
    build_report,
    render_json,
    render_stage_table,
    write_outputs,
)


def run_small(seed=4096):
    knowledge, truth = fixtures.load_fixture("ddr3-4g-c1d1r1b8")
    backend = simulated_backend(knowledge, truth, seed=seed)
    return run_pipeline(backend, knowledge, PipelineConfig(seed=seed))


def test_report_structure():
    result = run_small()
    report = build_report(result, backend_info={"kind": "simulated"})
    assert report["schema"] == "dram-mapper-report/1"
    assert report["seed"] == 4096
    assert report["backend"] == {"kind": "simulated"}
    assert report["system"]["bank_count"] == 8
    assert report["system"]["expected_row_bits"] == 16
    assert report["mapping"]["functions"] == [[13, 16], [14, 17], [15, 18]]
    assert report["mapping"]["row_bits"] == list(range(16, 32))
    assert report["totals"]["measurements"] == sum(
        s["measurements"] for s in report["stage_stats"]
    )
    stages = [s["stage"] for s in report["stage_stats"]]
    assert stages == ["calibration", "coarse", "partition", "fine"]


def test_provenance_tags_every_row_and_column_bit():
    result = run_small()
    report = build_report(result)
    tags = report["mapping"]["provenance"]
    named = set(report["mapping"]["row_bits"]) | set(report["mapping"]["column_bits"])
    assert {int(k) for k in tags} == named
    assert tags["16"] == "fine-shared"
    assert tags["20"] == "coarse"
    assert set(tags.values()) == {"coarse", "fine-shared"}


def test_rendered_json_is_canonical():
    text = render_json(build_report(run_small()))
    assert text.endswith("\n")
    parsed = json.loads(text)
    assert text == json.dumps(parsed, indent=2, sort_keys=True) + "\n"


def test_same_seed_renders_identical_bytes():
    a = render_json(build_report(run_small(seed=123)))
    b = render_json(build_report(run_small(seed=123)))
    assert a == b


def test_different_seeds_change_counts_but_not_the_mapping():
    a = build_report(run_small(seed=123))
    b = build_report(run_small(seed=124))
    assert a["mapping"] == b["mapping"]
    assert a["totals"] != b["totals"]


def test_stage_table_totals():
    result = run_small()
    lines = render_stage_table(result).strip().splitlines()
    assert lines[0] == "stage\tmeasurements\tsimulated_cycles"
    total = lines[-1].split("\t")
    assert total[0] == "total"
    assert int(total[1]) == result.total_measurements


def test_written_artifacts(tmp_path):
    result = run_small()
    paths = write_outputs(result, tmp_path, backend_info={"kind": "simulated"})
    names = {p.name for p in tmp_path.iterdir()}
    assert names == {
        "report.json",
        "mapping.map",
        "stages.tsv",
        "latency_histogram.png",
        "pile_sizes.png",
        "stage_counts.png",
    }
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["schema"] == "dram-mapper-report/1"
    mapping = parse_mapping((tmp_path / "mapping.map").read_text())
    assert mapping == result.mapping
    for name in names:
        if name.endswith(".png"):
            blob = (tmp_path / name).read_bytes()
            assert blob[:8] == b"\x89PNG\r\n\x1a\n"
            assert len(blob) > 4096
    assert set(paths) >= {"report", "mapping", "stages"}


def test_figures_can_be_skipped(tmp_path):
    write_outputs(run_small(), tmp_path, figures=False)
    names = {p.name for p in tmp_path.iterdir()}
    assert names == {"report.json", "mapping.map", "stages.tsv"}
