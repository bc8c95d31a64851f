from __future__ import annotations

import csv
import io
import json

import pytest

from fuseatlas.errors import AxisError, InvalidInput
from fuseatlas.harmonize import build_catalog
from fuseatlas.index import (
    AUDIT_COLUMNS,
    distribution,
    export_audit,
    export_manifest,
    load_manifest,
    manifest_bytes,
    yearly_totals,
)
from fuseatlas.query import FilterRecipe, SelectionSet, evaluate_recipe
from tests.conftest import GENERATED_AT


def _select_all(manifest):
    return evaluate_recipe(FilterRecipe(), manifest)


def test_manifest_round_trip(case_manifest, tmp_path):
    path = tmp_path / "manifest.json"
    data = export_manifest(case_manifest, str(path))
    assert path.read_bytes() == data
    reloaded = load_manifest(str(path))
    assert reloaded == case_manifest


def test_manifest_round_trip_appendix(appendix_manifest):
    reloaded = load_manifest(manifest_bytes(appendix_manifest))
    assert reloaded == appendix_manifest


def test_manifest_version_mismatch_rejected(case_manifest):
    doc = json.loads(manifest_bytes(case_manifest))
    doc["version"] = "99"
    with pytest.raises(InvalidInput) as exc:
        load_manifest(json.dumps(doc).encode("utf-8"))
    assert "expected '1'" in str(exc.value) and "'99'" in str(exc.value)


def test_manifest_bytes_deterministic(case_lines):
    m1, _ = build_catalog(case_lines, generated_at=GENERATED_AT)
    m2, _ = build_catalog(case_lines, generated_at=GENERATED_AT)
    assert manifest_bytes(m1) == manifest_bytes(m2)


def test_facet_index_lists_exactly_matching_datasets(case_manifest):
    doc = json.loads(manifest_bytes(case_manifest))
    fundus = doc["facet_index"]["modality"]["FUNDUS"]
    expected = sorted(r.dataset_name for r in case_manifest.datasets
                      if "FUNDUS" in r.modalities)
    assert fundus == expected


def test_facet_index_completeness(appendix_manifest):
    doc = json.loads(manifest_bytes(appendix_manifest))
    index = doc["facet_index"]
    for rec in appendix_manifest.datasets:
        for mod in rec.modalities:
            assert rec.dataset_name in index["modality"][mod]
        for dim in rec.dimensions:
            assert rec.dataset_name in index["dimension"][dim]
        for task in rec.tasks:
            assert rec.dataset_name in index["task"][task]
        if rec.release_year is not None:
            assert rec.dataset_name in index["year"][str(rec.release_year)]


def test_audit_csv_header_only_for_empty_selection(case_manifest):
    data = export_audit(SelectionSet(names=()), case_manifest, "csv")
    assert data.decode("utf-8") == ",".join(AUDIT_COLUMNS) + "\n"


def test_audit_csv_quoting():
    lines = [json.dumps({
        "dataset_name": 'Weird, "quoted" name',
        "modality_primary": "CT", "task_type": ["Cls"], "label_presence": "labeled",
        "license": "CC BY, custom rider", "organization": ["Lab A", "Lab B"],
    })]
    manifest, report = build_catalog(lines, generated_at=GENERATED_AT)
    assert report.ok
    data = export_audit(_select_all(manifest), manifest, "csv").decode("utf-8")
    row = data.splitlines()[1]
    assert row.startswith('"Weird, ""quoted"" name"')
    assert '"CC BY, custom rider"' in row
    parsed = list(csv.reader(io.StringIO(data)))
    assert parsed[1][0] == 'Weird, "quoted" name'
    assert parsed[1][8] == "CC BY, custom rider"


def test_audit_csv_quotes_bare_carriage_return():
    lines = [json.dumps({
        "dataset_name": "CR\rname",
        "modality_primary": "CT", "task_type": ["Cls"], "label_presence": "labeled",
    })]
    manifest, _ = build_catalog(lines, generated_at=GENERATED_AT)
    data = export_audit(_select_all(manifest), manifest, "csv").decode("utf-8")
    assert data.splitlines()[1].startswith('"CR\rname"'.splitlines()[0])
    parsed = list(csv.reader(io.StringIO(data)))
    assert parsed[1][0] == "CR\rname"


def test_audit_csv_matches_json_rows(case_manifest):
    selection = _select_all(case_manifest)
    as_csv = export_audit(selection, case_manifest, "csv").decode("utf-8")
    as_json = json.loads(export_audit(selection, case_manifest, "json").decode("utf-8"))
    reader = csv.DictReader(io.StringIO(as_csv))
    csv_rows = [dict(r) for r in reader]
    assert csv_rows == [{k: str(v) for k, v in row.items()} for row in as_json]
    assert len(csv_rows) == len(selection.names)


def test_audit_rows_sorted_and_lf_only(case_manifest):
    data = export_audit(_select_all(case_manifest), case_manifest, "csv")
    assert b"\r" not in data
    names = [row.split(",")[0] for row in data.decode().splitlines()[1:]]
    assert names == sorted(names)


def test_audit_organ_is_leaf_of_first_path(appendix_manifest):
    rec = appendix_manifest.by_name("LoDoPaB-CT")
    selection = SelectionSet(names=("LoDoPaB-CT",))
    rows = json.loads(export_audit(selection, appendix_manifest, "json").decode())
    assert rows[0]["organ"] == "Lung"
    assert rows[0]["dimension"] == "2D"
    assert rows[0]["modality"] == "CT"
    assert rows[0]["images"] == "28"
    assert rec.anatomy_paths[0].leaf == "Lung"


def test_distribution_single_dataset():
    lines = [json.dumps({"dataset_name": "Solo", "modality_primary": "CT",
                         "task_type": ["Cls"], "label_presence": "labeled",
                         "valid_image_n": 100, "data_volume": 100})]
    manifest, _ = build_catalog(lines, generated_at=GENERATED_AT)
    hist = distribution(_select_all(manifest), manifest, "modality")
    assert [(b.value, b.dataset_count, b.image_sum) for b in hist.bins] == [("CT", 1, 100)]


def test_distribution_table7_image_sums(case_manifest, case_recipe_text):
    from fuseatlas.query import parse_recipe
    selection = evaluate_recipe(parse_recipe(case_recipe_text), case_manifest)
    hist = distribution(selection, case_manifest, "modality")
    sums = {b.value: b.image_sum for b in hist.bins}
    assert sums == {"CT": 1_173_965, "MRI": 681_025, "FUNDUS": 280_311}


def test_distribution_counts_match_brute_force(appendix_manifest):
    selection = _select_all(appendix_manifest)
    hist = distribution(selection, appendix_manifest, "task")
    for b in hist.bins:
        tally = sum(1 for r in appendix_manifest.datasets if b.value in r.tasks)
        assert b.dataset_count == tally


def test_distribution_conservation(appendix_manifest):
    selection = _select_all(appendix_manifest)
    total = sum(r.valid_total or 0 for r in appendix_manifest.datasets)
    for axis in ("dimension", "modality", "task", "anatomy_root", "label_presence"):
        hist = distribution(selection, appendix_manifest, axis)
        assert sum(b.image_sum for b in hist.bins) == total


def test_distribution_unknown_axis(case_manifest):
    with pytest.raises(AxisError):
        distribution(_select_all(case_manifest), case_manifest, "flavor")


def test_yearly_totals_arithmetic():
    rows = [
        {"dataset_name": "A", "release_date": "2018", "valid_image_n": 100},
        {"dataset_name": "B", "release_date": "2018", "valid_image_n": 50},
        {"dataset_name": "C", "release_date": "NA", "valid_image_n": 10},
    ]
    for r in rows:
        r.update({"modality_primary": "CT", "task_type": ["Cls"],
                  "label_presence": "labeled", "data_volume": r["valid_image_n"]})
    manifest, _ = build_catalog([json.dumps(r) for r in rows], generated_at=GENERATED_AT)
    years, unknown = yearly_totals(_select_all(manifest), manifest)
    assert [(b.year, b.image_sum, b.dataset_count) for b in years] == [(2018, 150, 2)]
    assert (unknown.image_sum, unknown.dataset_count) == (10, 1)


def test_yearly_totals_empty_selection(case_manifest):
    years, unknown = yearly_totals(SelectionSet(names=()), case_manifest)
    assert years == ()
    assert unknown.image_sum == 0 and unknown.dataset_count == 0


def test_yearly_totals_conservation(appendix_manifest):
    selection = _select_all(appendix_manifest)
    years, unknown = yearly_totals(selection, appendix_manifest)
    total = sum(r.valid_total or 0 for r in appendix_manifest.datasets)
    assert sum(b.image_sum for b in years) + unknown.image_sum == total
    assert sum(b.dataset_count for b in years) + unknown.dataset_count == len(selection.names)
    assert [b.year for b in years] == sorted(b.year for b in years)
