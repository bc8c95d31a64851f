"""Corpus harmonization: vocabulary normalization, clinical-application
alignment, deduplication, and assembly of the canonical catalog manifest.

Every raw field survives on ``HarmonizedRecord.base`` so harmonization is
an enrichment, never a rewrite.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from typing import Iterable

from . import vocab as vocab_mod
from .errors import InvalidDimensionToken, InvalidInput, UnknownTask
from .schema import (
    AnnotationEntry,
    DatasetRecord,
    Diagnostic,
    ValidationReport,
    parse_annotations,
    parse_dataset_meta,
    validate_catalog,
)
from .vocab import AnatomyPath, Vocabulary

MANIFEST_VERSION = "1"

MIN_RELEASE_YEAR = 1990

# Task category -> clinical applications.
CLINICAL_MAP = {
    "classification": ("diagnosis", "severity_grading", "treatment_response"),
    "segmentation": ("lesion_delineation", "volumetric_quantification", "therapy_planning"),
    "detection": ("disease_screening",),
    "regression": ("biomarker_quantification",),
}

# Words in disease/structure/description that mark a measurement target,
# flipping the ambiguous "Reg" alias from registration to regression.
_REGRESSION_HINT_WORDS = (
    "quality", "score", "dose", "density", "fraction", "biomarker",
    "estimation", "measurement", "circumference",
)

_DUPLICATE_SUFFIX_RE = re.compile(r"\s*\(duplicate\)\s*$", re.IGNORECASE)


@dataclass(frozen=True)
class HarmonizedRecord:
    """A DatasetRecord enriched with normalized vocabulary forms."""

    base: DatasetRecord
    modalities: tuple[str, ...]
    dimensions: tuple[str, ...]
    tasks: tuple[str, ...]
    anatomy_paths: tuple[AnatomyPath, ...]
    clinical_applications: tuple[str, ...]
    release_year: int | None
    org_tokens: tuple[str, ...]
    annotation_types: tuple[str, ...] = ()
    notes: str = ""

    @property
    def dataset_name(self) -> str:
        return self.base.dataset_name

    @property
    def anatomy_roots(self) -> tuple[str, ...]:
        return tuple(sorted({p.root for p in self.anatomy_paths}))

    @property
    def valid_total(self) -> int | None:
        return self.base.valid_image_n.total

    @property
    def is_labeled(self) -> bool:
        return self.base.label_presence in ("labeled", "mixed")


@dataclass(frozen=True)
class DuplicateEntry:
    kept: str
    dropped: str
    reason: str  # exact_name | same_homepage | declared_overlap


@dataclass(frozen=True)
class CatalogManifest:
    version: str
    vocab_version: str
    generated_at: str
    datasets: tuple[HarmonizedRecord, ...]
    duplicate_report: tuple[DuplicateEntry, ...] = ()

    def names(self) -> tuple[str, ...]:
        return tuple(r.dataset_name for r in self.datasets)

    def by_name(self, name: str) -> HarmonizedRecord:
        for r in self.datasets:
            if r.dataset_name == name:
                return r
        raise KeyError(name)


def align_clinical(rec_or_tasks) -> frozenset[str]:
    """Map a record's task categories onto clinical applications (union)."""
    tasks = tuple(getattr(rec_or_tasks, "tasks", rec_or_tasks))
    if not tasks:
        raise InvalidInput("align_clinical requires a non-empty task set")
    out: set[str] = set()
    for task in tasks:
        out.update(CLINICAL_MAP.get(task, ("other",)))
    return frozenset(out)


def _release_year(record: DatasetRecord, now_year: int) -> tuple[int | None, list[Diagnostic]]:
    if record.release_date == "NA":
        return None, []
    year = int(record.release_date[:4])
    if not MIN_RELEASE_YEAR <= year <= now_year + 1:
        return None, [Diagnostic("warning", "release_date",
                                 f"year {year} outside [{MIN_RELEASE_YEAR}, {now_year + 1}], treated as unknown",
                                 record.source_line)]
    return year, []


def _org_tokens(organization: Iterable[str]) -> tuple[str, ...]:
    tokens = set()
    for entry in organization:
        for tok in re.split(r"[,;]", entry):
            tok = tok.strip().casefold()
            if tok:
                tokens.add(tok)
    return tuple(sorted(tokens))


def _regression_hint(record: DatasetRecord) -> bool:
    haystack = " ".join(
        (record.disease, record.dataset_description, *record.anatomical_structure)
    ).casefold()
    return any(w in haystack for w in _REGRESSION_HINT_WORDS)


def harmonize_record(
    raw: DatasetRecord,
    vocab: Vocabulary | None = None,
    now_year: int | None = None,
    strict: bool = False,
) -> tuple[HarmonizedRecord | None, list[Diagnostic]]:
    """Vocabulary normalization and clinical alignment for one record.

    Returns (record, diagnostics); the record is None when a task or
    dimension token failed to normalize (error severity). Unmapped
    modalities degrade to OTHER with a warning, promoted to an error in
    strict mode."""
    vocab = vocab or vocab_mod.default_vocabulary()
    if now_year is None:
        now_year = datetime.now(timezone.utc).year
    diags: list[Diagnostic] = []
    line = raw.source_line

    modalities: set[str] = set()
    for token in raw.modality_primary:
        mc = vocab_mod.normalize_modality(token, vocab)
        if mc.diagnostic == "unmapped":
            severity = "error" if strict else "warning"
            diags.append(Diagnostic(severity, "modality_primary",
                                    f"unmapped modality {token!r} degraded to OTHER", line))
        modalities.add(mc.code)

    dimensions: set[str] = set()
    for token in raw.dimension:
        try:
            dimensions.update(vocab_mod.normalize_dimension(token, vocab))
        except (InvalidDimensionToken, InvalidInput) as exc:
            diags.append(Diagnostic("error", "dimension", str(exc), line))

    context = "regression" if _regression_hint(raw) else None
    tasks: set[str] = set()
    for token in raw.task_type:
        if token.casefold() in vocab_mod.AMBIGUOUS_TASK_ALIASES:
            resolved = vocab_mod.normalize_task(token, vocab, context)
            diags.append(Diagnostic("warning", "task_type",
                                    f"ambiguous task alias {token!r} resolved to {resolved}", line))
            tasks.add(resolved)
            continue
        try:
            tasks.add(vocab_mod.normalize_task(token, vocab))
        except UnknownTask as exc:
            diags.append(Diagnostic("error", "task_type", str(exc), line))

    paths: list[AnatomyPath] = []
    seen_paths: set[tuple[str, ...]] = set()
    for term in raw.anatomical_structure:
        p = vocab_mod.classify_anatomy(term, vocab)
        if p.levels not in seen_paths:
            seen_paths.add(p.levels)
            paths.append(p)
    if not paths:
        paths = [vocab_mod.classify_anatomy(None, vocab)]

    year, year_diags = _release_year(raw, now_year)
    diags.extend(year_diags)

    if any(d.severity == "error" for d in diags):
        return None, diags

    record = HarmonizedRecord(
        base=raw,
        modalities=tuple(sorted(modalities)),
        dimensions=tuple(sorted(dimensions)),
        tasks=tuple(sorted(tasks)),
        anatomy_paths=tuple(paths),
        clinical_applications=tuple(sorted(align_clinical(tasks))),
        release_year=year,
        org_tokens=_org_tokens(raw.organization),
        notes=raw.notes,
    )
    return record, diags


def _normalized_name(name: str) -> str:
    name = _DUPLICATE_SUFFIX_RE.sub("", name)
    return re.sub(r"\s+", " ", name).strip().casefold()


def _keep_priority(rec: HarmonizedRecord) -> tuple:
    total = rec.valid_total if rec.valid_total is not None else -1
    return (0 if rec.is_labeled else 1, -total, rec.dataset_name)


def dedupe(
    records: list[HarmonizedRecord],
    overlap_hints: Iterable[tuple[str, str]] = (),
) -> tuple[list[HarmonizedRecord], list[DuplicateEntry]]:
    """Collapse exact normalized-name duplicates; flag same-homepage pairs and
    declared overlaps without dropping them. Idempotent on the record list."""
    report: list[DuplicateEntry] = []
    groups: dict[str, list[HarmonizedRecord]] = {}
    order: list[str] = []
    for rec in records:
        key = _normalized_name(rec.dataset_name)
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(rec)

    kept: list[HarmonizedRecord] = []
    kept_by_norm: dict[str, HarmonizedRecord] = {}
    for key in order:
        group = sorted(groups[key], key=_keep_priority)
        best = group[0]
        kept.append(best)
        kept_by_norm[key] = best
        for other in group[1:]:
            report.append(DuplicateEntry(kept=best.dataset_name,
                                         dropped=other.dataset_name,
                                         reason="exact_name"))

    by_homepage: dict[str, list[HarmonizedRecord]] = {}
    for rec in kept:
        url = rec.base.homepage_url
        if url and url != "NA":
            by_homepage.setdefault(url, []).append(rec)
    for url in sorted(by_homepage):
        group = sorted(by_homepage[url], key=lambda r: r.dataset_name)
        if len(group) > 1:
            first = group[0]
            for other in group[1:]:
                report.append(DuplicateEntry(kept=first.dataset_name,
                                             dropped=other.dataset_name,
                                             reason="same_homepage"))

    for a, b in overlap_hints:
        ra = kept_by_norm.get(_normalized_name(a))
        rb = kept_by_norm.get(_normalized_name(b))
        if ra is not None and rb is not None:
            report.append(DuplicateEntry(kept=ra.dataset_name,
                                         dropped=rb.dataset_name,
                                         reason="declared_overlap"))
    report.sort(key=lambda e: (e.reason, e.kept, e.dropped))
    return kept, report


def read_overlap_hints(lines: Iterable[str]) -> list[tuple[str, str]]:
    """One ``name_a<TAB>name_b`` pair per line; blank lines skipped."""
    hints = []
    for line in lines:
        line = line.rstrip("\n")
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise InvalidInput(f"overlap hint line needs exactly 2 tab-separated names: {line!r}")
        hints.append((parts[0].strip(), parts[1].strip()))
    return hints


def _attach_annotation_types(
    records: list[HarmonizedRecord], annotations: list[AnnotationEntry]
) -> list[HarmonizedRecord]:
    observed: dict[str, set[str]] = {}
    for entry in annotations:
        at = entry.media_geometry.annotation_type
        if at is not None:
            observed.setdefault(entry.record.dataset_name, set()).add(at)
    out = []
    for rec in records:
        types = observed.get(rec.dataset_name)
        out.append(replace(rec, annotation_types=tuple(sorted(types))) if types else rec)
    return out


def build_catalog(
    meta_lines: Iterable[str],
    annotation_lines: Iterable[str] = (),
    overlap_hints: Iterable[tuple[str, str]] = (),
    generated_at: str | None = None,
    vocab: Vocabulary | None = None,
    strict: bool = False,
) -> tuple[CatalogManifest | None, ValidationReport]:
    """Full pipeline: parse -> validate -> harmonize -> dedupe -> sort ->
    stamp. Deterministic given generated_at; in strict mode a manifest is
    only produced when no error-severity diagnostic exists."""
    vocab = vocab or vocab_mod.default_vocabulary()
    if generated_at is None:
        generated_at = datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
    now_year = int(generated_at[:4]) if re.match(r"^\d{4}", generated_at) else None

    records, report = parse_dataset_meta(meta_lines)
    annotations, ann_report = parse_annotations(annotation_lines, vocab)
    report.extend(ann_report.diagnostics)
    report.extend(validate_catalog(records, annotations).diagnostics)

    harmonized: list[HarmonizedRecord] = []
    for raw in records:
        rec, diags = harmonize_record(raw, vocab, now_year=now_year, strict=strict)
        report.extend(diags)
        if rec is not None:
            harmonized.append(rec)

    harmonized = _attach_annotation_types(harmonized, annotations)
    kept, dup_report = dedupe(harmonized, overlap_hints)
    kept.sort(key=lambda r: r.dataset_name)

    if strict and not report.ok:
        return None, report

    manifest = CatalogManifest(
        version=MANIFEST_VERSION,
        vocab_version=vocab.version,
        generated_at=generated_at,
        datasets=tuple(kept),
        duplicate_report=tuple(dup_report),
    )
    return manifest, report
