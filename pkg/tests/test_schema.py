from __future__ import annotations

import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fuseatlas.schema import (
    CountSpec,
    canonical_serialize,
    parse_annotation_line,
    parse_dataset_meta,
    parse_dataset_meta_line,
    validate_catalog,
)
from tests.conftest import FIXTURES, fixture_lines

VALID_LINE = json.dumps({
    "dataset_name": "CT-RATE",
    "release_date": "2024-01",
    "homepage_url": "https://example.org/ct-rate",
    "organization": "Istanbul University, Example Lab",
    "challenge_series": "NA",
    "license": "CC BY-NC-SA 4.0",
    "dataset_description": "chest CT volumes with reports",
    "modality_primary": "CT",
    "modality_secondary": "NA",
    "anatomical_structure": "Lung",
    "disease": "NA",
    "data_volume": {"total": 50188},
    "valid_image_n": {"total": 50188},
    "label_presence": "labeled",
    "task_type": ["Cls"],
    "num_classes_per_task": {"Cls": 18},
    "dimension": "3D",
})


def test_parse_count_spec_total_only():
    record, diags = parse_dataset_meta_line(VALID_LINE, 1)
    assert record is not None and not diags
    assert record.valid_image_n == CountSpec(total=50188)
    assert record.data_volume.total == 50188


def test_parse_bare_integer_count():
    line = VALID_LINE.replace('{"total": 50188}', "50188")
    record, _ = parse_dataset_meta_line(line, 1)
    assert record.valid_image_n == CountSpec(total=50188)


def test_missing_dataset_name_is_error():
    obj = json.loads(VALID_LINE)
    del obj["dataset_name"]
    record, diags = parse_dataset_meta_line(json.dumps(obj), 3)
    assert record is None
    assert any(d.field == "dataset_name" and d.severity == "error" and d.line_no == 3
               for d in diags)


def test_bad_label_presence_is_error():
    obj = json.loads(VALID_LINE)
    obj["label_presence"] = "maybe"
    record, diags = parse_dataset_meta_line(json.dumps(obj), 1)
    assert record is None
    assert any(d.field == "label_presence" for d in diags)


def test_unknown_top_level_key_warns():
    obj = json.loads(VALID_LINE)
    obj["wavelength_nm"] = 880
    record, diags = parse_dataset_meta_line(json.dumps(obj), 1)
    assert record is not None
    assert any(d.severity == "warning" and d.field == "wavelength_nm" for d in diags)


NEGATIVE_CASES = [
    ("dataset_name", ""),
    ("release_date", "sometime"),
    ("release_date", "2020-13"),
    ("homepage_url", 7),
    ("organization", 12),
    ("challenge_series", ["NA"]),
    ("license", {"name": "MIT"}),
    ("dataset_description", 1.5),
    ("modality_primary", []),
    ("modality_secondary", 0),
    ("anatomical_structure", {"organ": "Lung"}),
    ("disease", 4),
    ("data_volume", -5),
    ("data_volume", {"total": "many"}),
    ("valid_image_n", -1),
    ("valid_image_n", 1.5),
    ("label_presence", "maybe"),
    ("task_type", []),
    ("task_type", 9),
    ("num_classes_per_task", [1, 2]),
    ("num_classes_per_task", {"Cls": -3}),
    ("dimension", 3),
    ("storage_size_gb", -1),
    ("storage_size_gb", "large"),
    ("notes", 5),
]


@pytest.mark.parametrize("field,value", NEGATIVE_CASES)
def test_each_field_has_negative_validation(field, value):
    obj = json.loads(VALID_LINE)
    obj[field] = value
    record, diags = parse_dataset_meta_line(json.dumps(obj), 1)
    assert record is None
    assert any(d.field == field and d.severity == "error" for d in diags), diags


def test_all_16_core_fields_covered_by_negative_cases():
    from fuseatlas.schema import META_FIELDS
    covered = {f for f, _ in NEGATIVE_CASES}
    assert set(META_FIELDS) <= covered


def test_malformed_json_names_position():
    record, diags = parse_dataset_meta_line('{"dataset_name": "x", ', 9)
    assert record is None
    assert diags[0].field == "json" and diags[0].line_no == 9


def test_round_trip_on_fixture_corpus(appendix_lines):
    for line_no, line in enumerate(appendix_lines, start=1):
        record, diags = parse_dataset_meta_line(line, line_no)
        assert record is not None, diags
        wire = canonical_serialize(record)
        again, diags2 = parse_dataset_meta_line(wire, line_no)
        assert again == record
        assert not [d for d in diags2 if d.severity == "error"]


def test_canonical_serialize_sorts_set_fields():
    obj = json.loads(VALID_LINE)
    obj["modality_primary"] = ["MR", "CT"]
    record, _ = parse_dataset_meta_line(json.dumps(obj), 1)
    doc = json.loads(canonical_serialize(record))
    assert doc["modality_primary"] == ["CT", "MR"]


@given(seed=st.integers(0, 2**32 - 1))
@settings(max_examples=50, deadline=None)
def test_canonical_serialize_is_key_order_independent(seed):
    rng = random.Random(seed)
    obj = json.loads(VALID_LINE)
    items = list(obj.items())
    rng.shuffle(items)
    shuffled = json.dumps(dict(items))
    r1, _ = parse_dataset_meta_line(VALID_LINE, 1)
    r2, _ = parse_dataset_meta_line(shuffled, 1)
    assert canonical_serialize(r1) == canonical_serialize(r2)


def test_validate_duplicate_names():
    lines = [VALID_LINE, VALID_LINE]
    records, _ = parse_dataset_meta(lines)
    report = validate_catalog(records)
    assert not report.ok
    assert any("duplicate dataset_name" in d.message for d in report.errors())


def test_validate_split_mismatch_is_warning():
    obj = json.loads(VALID_LINE)
    obj["data_volume"] = {"total": 100, "train": 70, "val": 20, "test": 5}
    records, _ = parse_dataset_meta([json.dumps(obj)])
    report = validate_catalog(records)
    assert report.ok  # warning, not error
    assert any("SplitMismatch" in d.message and "95" in d.message for d in report.warnings())


def test_validate_valid_exceeds_volume_warns():
    obj = json.loads(VALID_LINE)
    obj["data_volume"] = 10
    obj["valid_image_n"] = 20
    records, _ = parse_dataset_meta([json.dumps(obj)])
    report = validate_catalog(records)
    assert any("exceeds" in d.message for d in report.warnings())


def test_validate_dangling_annotation_reference():
    records, _ = parse_dataset_meta([VALID_LINE])
    ann_line = json.dumps({
        "record": {"dataset_name": "Ghost", "image_path": "x.png"},
        "media_geometry": {"task_type": "segmentation"},
        "tasks": {"segmentation": {"mask_path": "m.png"}},
    })
    entry, diags = parse_annotation_line(ann_line, 1)
    assert entry is not None, diags
    report = validate_catalog(records, [entry])
    assert any("dangling reference" in d.message for d in report.errors())


def test_validate_is_order_insensitive(appendix_lines):
    records, _ = parse_dataset_meta(appendix_lines[:40])
    forward = validate_catalog(records)
    backward = validate_catalog(list(reversed(records)))
    key = lambda d: (d.severity, d.field, d.message)
    assert sorted(map(key, forward.diagnostics)) == sorted(map(key, backward.diagnostics))


def test_report_ok_iff_no_errors():
    records, report = parse_dataset_meta([VALID_LINE, "{"])
    assert not report.ok
    clean, clean_report = parse_dataset_meta([VALID_LINE])
    assert clean_report.ok


def test_annotation_self_consistent_entry():
    line = fixture_lines("annotations_segmentation.jsonl")[0]
    entry, diags = parse_annotation_line(line, 1)
    assert entry is not None and not diags
    assert entry.media_geometry.task_type == "segmentation"
    assert entry.media_geometry.dimension == "D2"
    assert "segmentation" in entry.tasks


def test_annotation_task_alias_key_accepted():
    line = fixture_lines("annotations_segmentation.jsonl")[1]
    entry, diags = parse_annotation_line(line, 2)
    assert entry is not None
    assert entry.media_geometry.task_type == "segmentation"


def test_annotation_missing_payload_is_error():
    line = json.dumps({
        "record": {"dataset_name": "A", "image_path": "x.png"},
        "media_geometry": {"task_type": "segmentation"},
        "tasks": {"detection": {"boxes": []}},
    })
    entry, diags = parse_annotation_line(line, 1)
    assert entry is None
    assert any("task payload missing" in d.message for d in diags)


def test_annotation_detection_payload_length_preserved():
    # golden fixture cross-checked with an independent hand-rolled decode
    raw = (FIXTURES / "annotations_detection.jsonl").read_text(encoding="utf-8").splitlines()[0]
    independent = json.loads(raw)
    expected_boxes = independent["tasks"]["detection"]["boxes"]
    assert len(expected_boxes) == 3

    entry, diags = parse_annotation_line(raw, 1)
    assert entry is not None and not diags
    assert entry.media_geometry.annotation_type == "box"
    assert entry.tasks["detection"]["boxes"] == expected_boxes
    assert entry.tasks["detection"]["schema_variant"] == "boxes_xyxy_v1"


def test_annotation_missing_record_block():
    entry, diags = parse_annotation_line('{"tasks": {}}', 1)
    assert entry is None
    assert any(d.field == "record" for d in diags)


def test_annotation_dimension_must_be_single():
    line = json.dumps({
        "record": {"dataset_name": "A", "image_path": "x.png"},
        "media_geometry": {"task_type": "segmentation", "dimension": "2D+Video"},
        "tasks": {"segmentation": {}},
    })
    entry, diags = parse_annotation_line(line, 1)
    assert entry is None
    assert any("single value" in d.message for d in diags)


def test_annotation_unknown_context_keys_folded_into_extra():
    line = json.dumps({
        "record": {"dataset_name": "A", "image_path": "x.png"},
        "context": {"scanner": "Optovue", "extra": {"fps": 30}},
        "media_geometry": {"task_type": "tracking"},
        "tasks": {"tracking": {"schema_variant": "v1"}},
    })
    entry, _ = parse_annotation_line(line, 1)
    assert entry.context.extra == {"fps": 30, "scanner": "Optovue"}
