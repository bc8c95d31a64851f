"""Static index emission: the portal manifest document, audit-table exports
(CSV / JSON), and distribution / temporal statistics.

All exports are byte-deterministic for equal inputs: fixed key orders, sorted
rows, LF line endings, UTF-8.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any

from .errors import AxisError, InvalidInput
from .fusion import UNKNOWN_KEY, attribute_value
from .harmonize import (
    MANIFEST_VERSION,
    CatalogManifest,
    DuplicateEntry,
    HarmonizedRecord,
)
from .query import FACET_AXES, SelectionSet, _axis_values
from .schema import canonical_serialize, parse_dataset_meta_line
from .vocab import AnatomyPath, DIMENSION_DISPLAY, MODALITY_DISPLAY

AUDIT_COLUMNS = (
    "name", "dimension", "modality", "task", "organ", "images", "year",
    "organization", "license", "link",
)

DISTRIBUTION_AXES = ("dimension", "modality", "task", "anatomy_root", "label_presence")


@dataclass(frozen=True)
class HistogramBin:
    value: str
    dataset_count: int
    image_sum: int


@dataclass(frozen=True)
class Histogram:
    axis: str
    bins: tuple[HistogramBin, ...]


@dataclass(frozen=True)
class YearBin:
    year: int | None
    image_sum: int
    dataset_count: int


def _dataset_doc(rec: HarmonizedRecord) -> dict[str, Any]:
    return {
        "meta": json.loads(canonical_serialize(rec.base)),
        "modalities": list(rec.modalities),
        "dimensions": list(rec.dimensions),
        "tasks": list(rec.tasks),
        "anatomy_paths": [
            {"levels": list(p.levels), "source_term": p.source_term}
            for p in rec.anatomy_paths
        ],
        "clinical_applications": list(rec.clinical_applications),
        "release_year": rec.release_year,
        "org_tokens": list(rec.org_tokens),
        "annotation_types": list(rec.annotation_types),
        "notes": rec.notes,
    }


def _facet_index(manifest: CatalogManifest) -> dict[str, dict[str, list[str]]]:
    index: dict[str, dict[str, list[str]]] = {axis: {} for axis in FACET_AXES}
    for rec in manifest.datasets:
        for axis in FACET_AXES:
            for value in _axis_values(rec, axis):
                index[axis].setdefault(value, []).append(rec.dataset_name)
    return {axis: {v: sorted(names) for v, names in sorted(values.items())}
            for axis, values in index.items()}


def manifest_to_doc(manifest: CatalogManifest) -> dict[str, Any]:
    return {
        "version": manifest.version,
        "vocab_version": manifest.vocab_version,
        "generated_at": manifest.generated_at,
        "datasets": [_dataset_doc(r) for r in manifest.datasets],
        "facet_index": _facet_index(manifest),
        "duplicate_report": [
            {"kept": e.kept, "dropped": e.dropped, "reason": e.reason}
            for e in manifest.duplicate_report
        ],
    }


def manifest_bytes(manifest: CatalogManifest) -> bytes:
    doc = manifest_to_doc(manifest)
    return (json.dumps(doc, ensure_ascii=False, indent=2) + "\n").encode("utf-8")


def export_manifest(manifest: CatalogManifest, path: str | None = None) -> bytes:
    """Serialize the manifest document; write it when a path is given."""
    data = manifest_bytes(manifest)
    if path is not None:
        with open(path, "wb") as fh:
            fh.write(data)
    return data


def _record_from_doc(doc: dict[str, Any]) -> HarmonizedRecord:
    line = json.dumps(doc["meta"], ensure_ascii=False)
    base, diags = parse_dataset_meta_line(line)
    if base is None:
        problems = "; ".join(d.message for d in diags)
        raise InvalidInput(f"manifest dataset entry failed to parse: {problems}")
    return HarmonizedRecord(
        base=base,
        modalities=tuple(doc["modalities"]),
        dimensions=tuple(doc["dimensions"]),
        tasks=tuple(doc["tasks"]),
        anatomy_paths=tuple(
            AnatomyPath(levels=tuple(p["levels"]), source_term=p["source_term"])
            for p in doc["anatomy_paths"]
        ),
        clinical_applications=tuple(doc["clinical_applications"]),
        release_year=doc["release_year"],
        org_tokens=tuple(doc["org_tokens"]),
        annotation_types=tuple(doc.get("annotation_types", ())),
        notes=doc.get("notes", ""),
    )


def load_manifest(source: bytes | str) -> CatalogManifest:
    """Reload an exported manifest document (path or raw bytes)."""
    if isinstance(source, str):
        with open(source, "rb") as fh:
            raw = fh.read()
    else:
        raw = source
    try:
        doc = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise InvalidInput(f"manifest does not decode: {exc}") from exc
    if not isinstance(doc, dict):
        raise InvalidInput("manifest must be a JSON object")
    found = doc.get("version")
    if found != MANIFEST_VERSION:
        raise InvalidInput(
            f"manifest version mismatch: expected {MANIFEST_VERSION!r}, found {found!r}")
    return CatalogManifest(
        version=doc["version"],
        vocab_version=doc["vocab_version"],
        generated_at=doc["generated_at"],
        datasets=tuple(_record_from_doc(d) for d in doc["datasets"]),
        duplicate_report=tuple(
            DuplicateEntry(kept=e["kept"], dropped=e["dropped"], reason=e["reason"])
            for e in doc.get("duplicate_report", ())
        ),
    )


def audit_row(rec: HarmonizedRecord) -> dict[str, str]:
    """One audit-table row; multi-valued fields joined with '; '."""
    base = rec.base
    total = rec.valid_total
    return {
        "name": base.dataset_name,
        "dimension": "; ".join(DIMENSION_DISPLAY.get(d, d) for d in rec.dimensions),
        "modality": "; ".join(MODALITY_DISPLAY.get(m, m) for m in rec.modalities),
        "task": "; ".join(rec.tasks),
        "organ": rec.anatomy_paths[0].leaf if rec.anatomy_paths else "Unknown",
        "images": str(total) if total is not None else "NA",
        "year": str(rec.release_year) if rec.release_year is not None else "NA",
        "organization": "; ".join(base.organization),
        "license": base.license,
        "link": base.homepage_url,
    }


def _selected_records(selection: SelectionSet,
                      manifest: CatalogManifest) -> list[HarmonizedRecord]:
    selected = set(selection.names)
    return [rec for rec in manifest.datasets if rec.dataset_name in selected]


def _csv_field(value: str) -> str:
    """RFC-4180: quote fields containing comma, quote, CR, or LF."""
    if any(c in value for c in ',"\r\n'):
        return '"' + value.replace('"', '""') + '"'
    return value


def export_audit(selection: SelectionSet, manifest: CatalogManifest,
                 format: str = "csv") -> bytes:
    """Audit-table export; rows sorted by name. CSV is RFC-4180 quoted with
    LF line endings; JSON is an array of the same rows in the same order."""
    rows = [audit_row(rec) for rec in _selected_records(selection, manifest)]
    rows.sort(key=lambda r: r["name"])
    if format == "csv":
        lines = [",".join(AUDIT_COLUMNS)]
        lines.extend(",".join(_csv_field(row[col]) for col in AUDIT_COLUMNS)
                     for row in rows)
        return ("\n".join(lines) + "\n").encode("utf-8")
    if format == "json":
        return (json.dumps(rows, ensure_ascii=False, indent=2) + "\n").encode("utf-8")
    raise InvalidInput(f"unknown export format {format!r}")


def distribution(selection: SelectionSet, manifest: CatalogManifest,
                 axis: str) -> Histogram:
    """Per-value dataset counts (once per carried value) and image sums under
    exclusive attribution, so image sums partition the selection total."""
    if axis not in DISTRIBUTION_AXES:
        raise AxisError(f"unknown distribution axis {axis!r}")
    counts: dict[str, int] = {}
    sums: dict[str, int] = {}
    for rec in _selected_records(selection, manifest):
        values = _axis_values(rec, axis) or (UNKNOWN_KEY,)
        for value in values:
            counts[value] = counts.get(value, 0) + 1
        if axis == "label_presence":
            attributed = rec.base.label_presence
        else:
            attributed = attribute_value(rec, axis)
        sums[attributed] = sums.get(attributed, 0) + (rec.valid_total or 0)
    bins = tuple(
        HistogramBin(value=v, dataset_count=counts[v], image_sum=sums.get(v, 0))
        for v in sorted(counts)
    )
    return Histogram(axis=axis, bins=bins)


def yearly_totals(selection: SelectionSet,
                  manifest: CatalogManifest) -> tuple[tuple[YearBin, ...], YearBin]:
    """Aggregate by release year, ascending; unknown years go to a separate
    bucket that is never merged into a year."""
    by_year: dict[int, list[int]] = {}
    unknown: list[int] = []
    for rec in _selected_records(selection, manifest):
        total = rec.valid_total or 0
        if rec.release_year is None:
            unknown.append(total)
        else:
            by_year.setdefault(rec.release_year, []).append(total)
    years = tuple(
        YearBin(year=y, image_sum=sum(by_year[y]), dataset_count=len(by_year[y]))
        for y in sorted(by_year)
    )
    return years, YearBin(year=None, image_sum=sum(unknown), dataset_count=len(unknown))
