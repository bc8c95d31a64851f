"""Parsing and validation of the two line-delimited metadata files:
dataset-level ``data-meta.jsonl`` (16 fields) and per-media
``annotations_{task}.jsonl`` (record / context / media_geometry / tasks).

Parsers never raise on malformed input; every problem becomes a structured
:class:`Diagnostic` carrying the offending field name and line number. A line
yields a record only when it produced no error-severity diagnostics.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from typing import Any, Iterable

from . import vocab as vocab_mod
from .vocab import Vocabulary

LABEL_PRESENCE_VALUES = ("labeled", "unlabeled", "mixed")

ANNOTATION_TYPES = (
    "landmark", "mask", "box", "polygon", "keypoints", "class_label", "text", "other",
)

# Canonical key order of the dataset-level wire format. The first sixteen are
# the core schema; the trailing three are accepted extension keys.
META_FIELDS = (
    "dataset_name", "release_date", "homepage_url", "organization",
    "challenge_series", "license", "dataset_description", "modality_primary",
    "modality_secondary", "anatomical_structure", "disease", "data_volume",
    "valid_image_n", "label_presence", "task_type", "num_classes_per_task",
)
EXTENSION_FIELDS = ("dimension", "storage_size_gb", "notes")

_RELEASE_DATE_RE = re.compile(r"^(\d{4})(?:-(\d{2})(?:-(\d{2}))?)?$")
_SPLIT_KEYS = ("train", "val", "test")


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning"
    field: str
    message: str
    line_no: int = 0


@dataclass
class ValidationReport:
    diagnostics: list[Diagnostic] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not any(d.severity == "error" for d in self.diagnostics)

    def extend(self, diags: Iterable[Diagnostic]) -> None:
        self.diagnostics.extend(diags)

    def errors(self) -> list[Diagnostic]:
        return [d for d in self.diagnostics if d.severity == "error"]

    def warnings(self) -> list[Diagnostic]:
        return [d for d in self.diagnostics if d.severity == "warning"]


@dataclass(frozen=True)
class CountSpec:
    """An image/sample count: total and optional train/val/test split."""

    total: int | None = None
    splits: tuple[tuple[str, int], ...] = ()

    @property
    def known(self) -> bool:
        return self.total is not None

    def split_map(self) -> dict[str, int]:
        return dict(self.splits)


@dataclass(frozen=True)
class DatasetRecord:
    """One dataset-level metadata row, raw wire values retained.

    Set-like fields (modality_primary, task_type, dimension) are stored as
    sorted, deduplicated tuples of the raw tokens; list fields keep input
    order. Normalized vocabulary forms live on HarmonizedRecord.
    """

    dataset_name: str
    release_date: str = "NA"
    homepage_url: str = "NA"
    organization: tuple[str, ...] = ()
    challenge_series: str = "NA"
    license: str = "NA"
    dataset_description: str = "NA"
    modality_primary: tuple[str, ...] = ()
    modality_secondary: str = "NA"
    anatomical_structure: tuple[str, ...] = ()
    disease: str = "NA"
    data_volume: CountSpec = CountSpec()
    valid_image_n: CountSpec = CountSpec()
    label_presence: str = "unlabeled"
    task_type: tuple[str, ...] = ()
    num_classes_per_task: dict[str, Any] = field(default_factory=dict)
    dimension: tuple[str, ...] = ()
    storage_size_gb: float | None = None
    notes: str = ""
    source_line: int = field(default=0, compare=False, repr=False)


@dataclass(frozen=True)
class RecordBlock:
    dataset_name: str
    image_path: str
    sample_id: str | None = None


@dataclass(frozen=True)
class ContextBlock:
    subject_id: str | None = None
    age: Any = None
    sex: str | None = None
    site: str | None = None
    modality: str | None = None
    anatomy: str | None = None
    extra: dict[str, Any] = field(default_factory=dict)
    free_text: str | None = None


@dataclass(frozen=True)
class MediaGeometry:
    task_type: str
    leaf_task: str | None = None
    annotation_type: str | None = None
    dimension: str | None = None
    pixel_spacing: Any = None
    orientation: Any = None
    slice_index: Any = None
    frame_index: Any = None
    timestamp: Any = None
    camera: Any = None


@dataclass(frozen=True)
class AnnotationEntry:
    record: RecordBlock
    context: ContextBlock
    media_geometry: MediaGeometry
    tasks: dict[str, Any]
    source_line: int = field(default=0, compare=False, repr=False)


def _err(fieldname: str, message: str, line_no: int) -> Diagnostic:
    return Diagnostic("error", fieldname, message, line_no)


def _warn(fieldname: str, message: str, line_no: int) -> Diagnostic:
    return Diagnostic("warning", fieldname, message, line_no)


def _string_field(obj: dict, key: str, diags: list[Diagnostic], line_no: int,
                  default: str = "NA") -> str:
    if key not in obj or obj[key] is None:
        return default
    val = obj[key]
    if not isinstance(val, str):
        diags.append(_err(key, f"expected a string, got {type(val).__name__}", line_no))
        return default
    return val.strip() or default


def _term_list(obj: dict, key: str, diags: list[Diagnostic], line_no: int) -> list[str]:
    """A field holding either a comma-separated string or a list of strings."""
    if key not in obj or obj[key] is None:
        return []
    val = obj[key]
    if isinstance(val, str):
        return [t.strip() for t in val.split(",") if t.strip()]
    if isinstance(val, list):
        out = []
        for item in val:
            if not isinstance(item, str):
                diags.append(_err(key, "list items must be strings", line_no))
                return []
            if item.strip():
                out.append(item.strip())
        return out
    diags.append(_err(key, f"expected string or list, got {type(val).__name__}", line_no))
    return []


def _sorted_set(tokens: list[str]) -> tuple[str, ...]:
    return tuple(sorted(set(tokens)))


def _count_spec(obj: dict, key: str, diags: list[Diagnostic], line_no: int) -> CountSpec:
    if key not in obj or obj[key] is None:
        return CountSpec()
    val = obj[key]
    if isinstance(val, str):
        if val.strip().upper() == "NA":
            return CountSpec()
        diags.append(_err(key, f"expected integer or split object, got {val!r}", line_no))
        return CountSpec()
    if isinstance(val, bool):
        diags.append(_err(key, "expected integer, got boolean", line_no))
        return CountSpec()
    if isinstance(val, int):
        if val < 0:
            diags.append(_err(key, f"count must be non-negative, got {val}", line_no))
            return CountSpec()
        return CountSpec(total=val)
    if isinstance(val, dict):
        total = None
        splits = []
        for k, v in val.items():
            if k == "total" or k in _SPLIT_KEYS:
                if isinstance(v, bool) or not isinstance(v, int) or v < 0:
                    diags.append(_err(key, f"{k} must be a non-negative integer", line_no))
                    return CountSpec()
                if k == "total":
                    total = v
            else:
                diags.append(_warn(key, f"unknown count key {k!r} ignored", line_no))
        splits = [(k, val[k]) for k in _SPLIT_KEYS if k in val]
        return CountSpec(total=total, splits=tuple(splits))
    diags.append(_err(key, f"expected integer or split object, got {type(val).__name__}", line_no))
    return CountSpec()


def _check_release_date(raw: str, diags: list[Diagnostic], line_no: int) -> str:
    if raw == "NA":
        return raw
    m = _RELEASE_DATE_RE.match(raw)
    if not m:
        diags.append(_err("release_date", f"expected YYYY[-MM[-DD]] or NA, got {raw!r}", line_no))
        return "NA"
    _, month, day = m.groups()
    if month is not None and not 1 <= int(month) <= 12:
        diags.append(_err("release_date", f"month out of range in {raw!r}", line_no))
        return "NA"
    if day is not None and not 1 <= int(day) <= 31:
        diags.append(_err("release_date", f"day out of range in {raw!r}", line_no))
        return "NA"
    return raw


def parse_dataset_meta_line(
    text: str, line_no: int = 0
) -> tuple[DatasetRecord | None, list[Diagnostic]]:
    """Decode one data-meta line. Returns (record, diagnostics); the record
    is None when any error-severity diagnostic was produced."""
    diags: list[Diagnostic] = []
    try:
        obj = json.loads(text)
    except (json.JSONDecodeError, RecursionError) as exc:
        pos = getattr(exc, "pos", 0)
        diags.append(_err("json", f"malformed JSON at position {pos}", line_no))
        return None, diags
    if not isinstance(obj, dict):
        diags.append(_err("json", f"expected an object, got {type(obj).__name__}", line_no))
        return None, diags

    known = set(META_FIELDS) | set(EXTENSION_FIELDS)
    for key in obj:
        if key not in known:
            diags.append(_warn(key, f"unknown field {key!r} ignored", line_no))

    name = _string_field(obj, "dataset_name", diags, line_no, default="")
    if not name:
        diags.append(_err("dataset_name", "missing or empty", line_no))

    release_date = _check_release_date(
        _string_field(obj, "release_date", diags, line_no), diags, line_no)
    homepage_url = _string_field(obj, "homepage_url", diags, line_no)
    organization = _term_list(obj, "organization", diags, line_no)
    challenge_series = _string_field(obj, "challenge_series", diags, line_no)
    license_str = _string_field(obj, "license", diags, line_no)
    description = _string_field(obj, "dataset_description", diags, line_no)

    modality_primary = _term_list(obj, "modality_primary", diags, line_no)
    if not modality_primary:
        diags.append(_err("modality_primary", "missing or empty", line_no))
    modality_secondary = _string_field(obj, "modality_secondary", diags, line_no)
    anatomical_structure = _term_list(obj, "anatomical_structure", diags, line_no)
    disease = _string_field(obj, "disease", diags, line_no)

    data_volume = _count_spec(obj, "data_volume", diags, line_no)
    valid_image_n = _count_spec(obj, "valid_image_n", diags, line_no)

    label_presence = _string_field(obj, "label_presence", diags, line_no, default="")
    if label_presence not in LABEL_PRESENCE_VALUES:
        diags.append(_err(
            "label_presence",
            f"expected one of {', '.join(LABEL_PRESENCE_VALUES)}, got {label_presence!r}",
            line_no))

    task_type = _term_list(obj, "task_type", diags, line_no)
    if not task_type:
        diags.append(_err("task_type", "missing or empty", line_no))

    num_classes: dict[str, Any] = {}
    if "num_classes_per_task" in obj and obj["num_classes_per_task"] is not None:
        ncpt = obj["num_classes_per_task"]
        if not isinstance(ncpt, dict):
            diags.append(_err("num_classes_per_task", "expected an object", line_no))
        else:
            for k, v in ncpt.items():
                if isinstance(v, bool) or not isinstance(v, (int, dict)):
                    diags.append(_err("num_classes_per_task",
                                      f"value for {k!r} must be an integer or object", line_no))
                elif isinstance(v, int) and v < 0:
                    diags.append(_err("num_classes_per_task",
                                      f"class count for {k!r} must be non-negative", line_no))
                else:
                    num_classes[k] = v

    dimension = _term_list(obj, "dimension", diags, line_no)

    storage: float | None = None
    if "storage_size_gb" in obj and obj["storage_size_gb"] is not None:
        sval = obj["storage_size_gb"]
        if isinstance(sval, bool) or not isinstance(sval, (int, float)):
            diags.append(_err("storage_size_gb", "expected a number", line_no))
        elif not math.isfinite(sval) or sval < 0:
            diags.append(_err("storage_size_gb", "must be a non-negative finite number", line_no))
        else:
            storage = float(sval)

    notes = _string_field(obj, "notes", diags, line_no, default="")

    if any(d.severity == "error" for d in diags):
        return None, diags

    record = DatasetRecord(
        dataset_name=name,
        release_date=release_date,
        homepage_url=homepage_url,
        organization=tuple(organization),
        challenge_series=challenge_series,
        license=license_str,
        dataset_description=description,
        modality_primary=_sorted_set(modality_primary),
        modality_secondary=modality_secondary,
        anatomical_structure=tuple(anatomical_structure),
        disease=disease,
        data_volume=data_volume,
        valid_image_n=valid_image_n,
        label_presence=label_presence,
        task_type=_sorted_set(task_type),
        num_classes_per_task=num_classes,
        dimension=_sorted_set(dimension),
        storage_size_gb=storage,
        notes=notes,
        source_line=line_no,
    )
    return record, diags


def _context_block(obj: Any, diags: list[Diagnostic], line_no: int) -> ContextBlock:
    if not isinstance(obj, dict):
        if obj is not None:
            diags.append(_err("context", "expected an object", line_no))
        return ContextBlock()
    declared = {"subject_id", "age", "sex", "site", "modality", "anatomy", "extra", "free_text"}
    extra = dict(obj.get("extra") or {})
    for k, v in obj.items():
        if k not in declared:
            extra[k] = v
    return ContextBlock(
        subject_id=obj.get("subject_id"),
        age=obj.get("age"),
        sex=obj.get("sex"),
        site=obj.get("site"),
        modality=obj.get("modality"),
        anatomy=obj.get("anatomy"),
        extra=extra,
        free_text=obj.get("free_text"),
    )


def parse_annotation_line(
    text: str, line_no: int = 0, vocab: Vocabulary | None = None
) -> tuple[AnnotationEntry | None, list[Diagnostic]]:
    """Decode one annotation line into its four blocks."""
    vocab = vocab or vocab_mod.default_vocabulary()
    diags: list[Diagnostic] = []
    try:
        obj = json.loads(text)
    except (json.JSONDecodeError, RecursionError) as exc:
        diags.append(_err("json", f"malformed JSON at position {getattr(exc, 'pos', 0)}", line_no))
        return None, diags
    if not isinstance(obj, dict):
        diags.append(_err("json", f"expected an object, got {type(obj).__name__}", line_no))
        return None, diags

    for key in obj:
        if key not in {"record", "context", "media_geometry", "tasks"}:
            diags.append(_warn(key, f"unknown block {key!r} ignored", line_no))

    rec = obj.get("record")
    if not isinstance(rec, dict):
        diags.append(_err("record", "missing record block", line_no))
        return None, diags
    dataset_name = rec.get("dataset_name")
    image_path = rec.get("image_path")
    if not isinstance(dataset_name, str) or not dataset_name.strip():
        diags.append(_err("record.dataset_name", "missing or empty", line_no))
    if not isinstance(image_path, str) or not image_path.strip():
        diags.append(_err("record.image_path", "missing or empty", line_no))

    geo = obj.get("media_geometry")
    if not isinstance(geo, dict):
        diags.append(_err("media_geometry", "missing media_geometry block", line_no))
        geo = {}
    raw_task = geo.get("task_type")
    task_type = None
    if not isinstance(raw_task, str) or not raw_task.strip():
        diags.append(_err("media_geometry.task_type", "missing or empty", line_no))
    else:
        try:
            task_type = vocab_mod.normalize_task(raw_task, vocab)
        except Exception:
            diags.append(_err("media_geometry.task_type", f"unknown task {raw_task!r}", line_no))

    annotation_type = geo.get("annotation_type")
    if annotation_type is not None and annotation_type not in ANNOTATION_TYPES:
        diags.append(_err("media_geometry.annotation_type",
                          f"expected one of {', '.join(ANNOTATION_TYPES)}, got {annotation_type!r}",
                          line_no))

    dim_raw = geo.get("dimension")
    dimension = None
    if dim_raw is not None:
        if not isinstance(dim_raw, str):
            diags.append(_err("media_geometry.dimension", "must be a single string", line_no))
        else:
            try:
                codes = vocab_mod.normalize_dimension(dim_raw, vocab)
            except Exception:
                diags.append(_err("media_geometry.dimension", f"unmappable value {dim_raw!r}", line_no))
                codes = frozenset()
            if len(codes) == 1:
                dimension = next(iter(codes))
            elif len(codes) > 1:
                diags.append(_err("media_geometry.dimension",
                                  "must be a single value, not a set", line_no))

    tasks = obj.get("tasks")
    if not isinstance(tasks, dict):
        diags.append(_err("tasks", "missing tasks block", line_no))
        tasks = {}
    elif task_type is not None and raw_task not in tasks and task_type not in tasks:
        diags.append(_err("tasks", f"task payload missing for declared task {raw_task!r}", line_no))

    if any(d.severity == "error" for d in diags):
        return None, diags

    entry = AnnotationEntry(
        record=RecordBlock(
            dataset_name=dataset_name.strip(),
            image_path=image_path.strip(),
            sample_id=rec.get("sample_id"),
        ),
        context=_context_block(obj.get("context"), diags, line_no),
        media_geometry=MediaGeometry(
            task_type=task_type,
            leaf_task=geo.get("leaf_task"),
            annotation_type=annotation_type,
            dimension=dimension,
            pixel_spacing=geo.get("pixel_spacing"),
            orientation=geo.get("orientation"),
            slice_index=geo.get("slice_index"),
            frame_index=geo.get("frame_index"),
            timestamp=geo.get("timestamp"),
            camera=geo.get("camera"),
        ),
        tasks=tasks,
        source_line=line_no,
    )
    return entry, diags


def parse_dataset_meta(lines: Iterable[str]) -> tuple[list[DatasetRecord], ValidationReport]:
    """Parse a whole data-meta file; blank lines are skipped."""
    records: list[DatasetRecord] = []
    report = ValidationReport()
    for line_no, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        record, diags = parse_dataset_meta_line(line, line_no)
        report.extend(diags)
        if record is not None:
            records.append(record)
    return records, report


def parse_annotations(
    lines: Iterable[str], vocab: Vocabulary | None = None
) -> tuple[list[AnnotationEntry], ValidationReport]:
    entries: list[AnnotationEntry] = []
    report = ValidationReport()
    for line_no, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        entry, diags = parse_annotation_line(line, line_no, vocab)
        report.extend(diags)
        if entry is not None:
            entries.append(entry)
    return entries, report


def _split_diagnostics(record: DatasetRecord) -> list[Diagnostic]:
    out = []
    for key, spec in (("data_volume", record.data_volume), ("valid_image_n", record.valid_image_n)):
        if not spec.splits:
            continue
        split_sum = sum(v for _, v in spec.splits)
        if spec.total is not None:
            all_present = all(k in spec.split_map() for k in _SPLIT_KEYS)
            if (all_present and split_sum != spec.total) or split_sum > spec.total:
                out.append(_warn(key, f"SplitMismatch: splits sum to {split_sum}, total is {spec.total}",
                                 record.source_line))
    return out


def validate_catalog(
    records: list[DatasetRecord], annotations: list[AnnotationEntry] = ()
) -> ValidationReport:
    """Cross-record checks: name uniqueness, referential integrity of
    annotations, and count consistency. Aggregates all diagnostics."""
    report = ValidationReport()
    seen: dict[str, DatasetRecord] = {}
    for record in records:
        if record.dataset_name in seen:
            report.diagnostics.append(_err(
                "dataset_name", f"duplicate dataset_name {record.dataset_name!r}",
                record.source_line))
        else:
            seen[record.dataset_name] = record
        report.extend(_split_diagnostics(record))
        dv, vi = record.data_volume, record.valid_image_n
        if dv.total is not None and vi.total is not None and vi.total > dv.total:
            report.diagnostics.append(_warn(
                "valid_image_n",
                f"valid_image_n {vi.total} exceeds data_volume {dv.total}",
                record.source_line))
    for entry in annotations:
        if entry.record.dataset_name not in seen:
            report.diagnostics.append(_err(
                "record.dataset_name",
                f"dangling reference to unknown dataset {entry.record.dataset_name!r}",
                entry.source_line))
    return report


def _fmt_real(value: float) -> float:
    """Round to at most 6 significant digits for canonical output."""
    return float(f"{value:.6g}")


def _canon_value(value: Any) -> Any:
    if isinstance(value, dict):
        return {k: _canon_value(value[k]) for k in sorted(value)}
    if isinstance(value, list):
        return [_canon_value(v) for v in value]
    return value


def _count_to_wire(spec: CountSpec) -> Any:
    if not spec.splits:
        return spec.total if spec.total is not None else "NA"
    out: dict[str, int] = {}
    if spec.total is not None:
        out["total"] = spec.total
    for k in _SPLIT_KEYS:
        if k in spec.split_map():
            out[k] = spec.split_map()[k]
    return out


def canonical_serialize(record: DatasetRecord) -> str:
    """Emit one deterministic wire line: fixed key order, sorted set fields,
    compact separators. parse(canonical_serialize(r)) == r."""
    doc: dict[str, Any] = {
        "dataset_name": record.dataset_name,
        "release_date": record.release_date,
        "homepage_url": record.homepage_url,
        "organization": list(record.organization),
        "challenge_series": record.challenge_series,
        "license": record.license,
        "dataset_description": record.dataset_description,
        "modality_primary": sorted(record.modality_primary),
        "modality_secondary": record.modality_secondary,
        "anatomical_structure": list(record.anatomical_structure),
        "disease": record.disease,
        "data_volume": _count_to_wire(record.data_volume),
        "valid_image_n": _count_to_wire(record.valid_image_n),
        "label_presence": record.label_presence,
        "task_type": sorted(record.task_type),
        "num_classes_per_task": {
            k: _canon_value(record.num_classes_per_task[k])
            for k in sorted(record.num_classes_per_task)
        },
        "dimension": sorted(record.dimension),
    }
    if record.storage_size_gb is not None:
        doc["storage_size_gb"] = _fmt_real(record.storage_size_gb)
    if record.notes:
        doc["notes"] = record.notes
    return json.dumps(doc, ensure_ascii=False, separators=(",", ":"))
