"""Controlled vocabularies: modality, dimension, task, clinical application,
and the hierarchical anatomy table.

All lookups run against an immutable :class:`Vocabulary` loaded from a
versioned TSV mapping file (``raw_term<TAB>code[<TAB>subtype]`` per line,
UTF-8, LF). The ``code`` column is namespaced by table
(``modality:``, ``dimension:``, ``task:``, ``anatomy:``); anatomy codes carry
a full root-to-leaf path joined with ``>``. The file's content hash is the
``vocab_version`` stamped into manifests. ``FUSEATLAS_VOCAB`` overrides the
packaged file.

The ``Brain`` anatomy root doubles as the head/neck region umbrella; the ten
root labels are fixed and everything in the shipped table maps under them.
"""

from __future__ import annotations

import hashlib
import os
import re
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources

from .errors import InvalidDimensionToken, InvalidInput, UnknownTask, VocabularyError

MODALITIES = (
    "XRAY", "CT", "MRI", "ULTRASOUND", "PET", "PATHOLOGY", "ENDOSCOPY",
    "FUNDUS", "DERMOSCOPY", "MAMMOGRAPHY", "FFA", "OCT", "MICROSCOPY",
    "INFRARED", "ECG", "EEG", "EMG", "DSA", "CBCT", "OCTA", "RGB", "OTHER",
)

DIMENSIONS = ("D2", "D3", "VIDEO")

# Human-facing rendering of dimension codes (audit table, descriptions).
DIMENSION_DISPLAY = {"D2": "2D", "D3": "3D", "VIDEO": "video"}

TASKS = (
    "segmentation", "classification", "registration", "generation",
    "detection", "tracking", "reconstruction", "regression",
    "localization", "vqa", "captioning", "report_generation",
)

CLINICAL_APPLICATIONS = (
    "diagnosis", "severity_grading", "treatment_response",
    "lesion_delineation", "volumetric_quantification", "therapy_planning",
    "disease_screening", "biomarker_quantification", "other",
)

ANATOMY_ROOTS = (
    "Eye", "Brain", "Thorax", "Abdomen", "Pelvis", "Musculoskeletal",
    "Skin", "Cell", "FullBody", "Unknown",
)

# Display labels for modality codes in human-readable tables.
MODALITY_DISPLAY = {
    "XRAY": "X-Ray", "CT": "CT", "MRI": "MR", "ULTRASOUND": "US",
    "PET": "PET", "PATHOLOGY": "Pathology", "ENDOSCOPY": "Endoscopy",
    "FUNDUS": "Fundus", "DERMOSCOPY": "Dermoscopy",
    "MAMMOGRAPHY": "Mammography", "FFA": "FFA", "OCT": "OCT",
    "MICROSCOPY": "Microscopy", "INFRARED": "Infrared", "ECG": "ECG",
    "EEG": "EEG", "EMG": "EMG", "DSA": "DSA", "CBCT": "CBCT",
    "OCTA": "OCTA", "RGB": "RGB", "OTHER": "Other",
}

# "Reg" is resolvable to either member depending on the caller's context key.
AMBIGUOUS_TASK_ALIASES = {"reg": ("registration", "regression")}

_QUALIFIER_RE = re.compile(r"^(?P<base>[^(:]+?)\s*(?:\((?P<paren>[^)]+)\)|:\s*(?P<colon>.+))\s*$")


@dataclass(frozen=True)
class ModalityCode:
    """A primary-modality code with an optional free-text refinement."""

    code: str
    subtype: str | None = None
    diagnostic: str | None = None


@dataclass(frozen=True)
class AnatomyPath:
    """Root-to-leaf anatomical classification of one raw structure term."""

    levels: tuple[str, ...]
    source_term: str

    @property
    def root(self) -> str:
        return self.levels[0]

    @property
    def leaf(self) -> str:
        return self.levels[-1]


@dataclass(frozen=True)
class Vocabulary:
    """Immutable alias tables keyed by casefolded term."""

    version: str
    modality_aliases: dict[str, tuple[str, str | None]] = field(repr=False)
    dimension_aliases: dict[str, str] = field(repr=False)
    task_aliases: dict[str, str] = field(repr=False)
    anatomy: dict[str, tuple[str, ...]] = field(repr=False)


def _parse_vocab(text: str) -> dict[str, dict]:
    tables: dict[str, dict] = {"modality": {}, "dimension": {}, "task": {}, "anatomy": {}}
    for idx, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) not in (2, 3):
            raise VocabularyError(f"line {idx}: expected 2-3 tab-separated columns")
        term = parts[0].strip().casefold()
        code = parts[1].strip()
        subtype = parts[2].strip() if len(parts) == 3 else None
        if ":" not in code:
            raise VocabularyError(f"line {idx}: code {code!r} lacks a table prefix")
        table, value = code.split(":", 1)
        if table == "modality":
            if value not in MODALITIES:
                raise VocabularyError(f"line {idx}: unknown modality code {value!r}")
            tables[table][term] = (value, subtype)
        elif table == "dimension":
            if value not in DIMENSIONS:
                raise VocabularyError(f"line {idx}: unknown dimension code {value!r}")
            tables[table][term] = value
        elif table == "task":
            if value not in TASKS:
                raise VocabularyError(f"line {idx}: unknown task code {value!r}")
            tables[table][term] = value
        elif table == "anatomy":
            levels = tuple(lv.strip() for lv in value.split(">") if lv.strip())
            if not levels or levels[0] not in ANATOMY_ROOTS:
                raise VocabularyError(f"line {idx}: anatomy path must start at a known root")
            for a, b in zip(levels, levels[1:]):
                if a == b:
                    raise VocabularyError(f"line {idx}: duplicate consecutive level {a!r}")
            tables[table][term] = levels
        else:
            raise VocabularyError(f"line {idx}: unknown table prefix {table!r}")
    return tables


def load_vocabulary(path: str) -> Vocabulary:
    with open(path, "rb") as fh:
        raw = fh.read()
    return _vocabulary_from_bytes(raw)


def _vocabulary_from_bytes(raw: bytes) -> Vocabulary:
    tables = _parse_vocab(raw.decode("utf-8"))
    version = hashlib.sha256(raw).hexdigest()[:12]
    return Vocabulary(
        version=version,
        modality_aliases=tables["modality"],
        dimension_aliases=tables["dimension"],
        task_aliases=tables["task"],
        anatomy=tables["anatomy"],
    )


@lru_cache(maxsize=8)
def _cached_vocabulary(path: str | None) -> Vocabulary:
    if path is not None:
        return load_vocabulary(path)
    raw = resources.files("fuseatlas.data").joinpath("vocabulary.tsv").read_bytes()
    return _vocabulary_from_bytes(raw)


def default_vocabulary() -> Vocabulary:
    """The packaged table, unless FUSEATLAS_VOCAB points elsewhere."""
    return _cached_vocabulary(os.environ.get("FUSEATLAS_VOCAB") or None)


def normalize_modality(raw: str, vocab: Vocabulary | None = None) -> ModalityCode:
    """Map a raw modality term onto the closed modality vocabulary.

    Case-insensitive alias lookup; terms carrying a parenthetical or
    colon-qualified refinement keep it as ``subtype``. Unmapped terms degrade
    to OTHER with the raw term as subtype and an ``unmapped`` diagnostic.
    """
    vocab = vocab or default_vocabulary()
    term = raw.strip()
    if not term:
        raise InvalidInput("modality term is empty")
    hit = vocab.modality_aliases.get(term.casefold())
    if hit is not None:
        return ModalityCode(code=hit[0], subtype=hit[1])
    m = _QUALIFIER_RE.match(term)
    if m:
        base = vocab.modality_aliases.get(m.group("base").strip().casefold())
        if base is not None:
            qualifier = (m.group("paren") or m.group("colon")).strip()
            return ModalityCode(code=base[0], subtype=qualifier)
    return ModalityCode(code="OTHER", subtype=term, diagnostic="unmapped")


def normalize_dimension(raw: str, vocab: Vocabulary | None = None) -> frozenset[str]:
    """Split a dimension declaration ("3D, 2D", "2D+Video") into codes."""
    vocab = vocab or default_vocabulary()
    if not raw.strip():
        raise InvalidInput("dimension string is empty")
    out = set()
    for token in re.split(r"[,+/]", raw):
        token = token.strip()
        if not token:
            continue
        code = vocab.dimension_aliases.get(token.casefold())
        if code is None:
            raise InvalidDimensionToken(token)
        out.add(code)
    if not out:
        raise InvalidInput(f"no dimension tokens in {raw!r}")
    return frozenset(out)


def normalize_task(raw: str, vocab: Vocabulary | None = None, context: str | None = None) -> str:
    """Map a raw task term (or appendix abbreviation) onto the 12 categories.

    ``context`` resolves ambiguous aliases: passing ``"regression"`` reads
    "Reg" as regression, anything else keeps the registration default.
    """
    vocab = vocab or default_vocabulary()
    term = raw.strip()
    if not term:
        raise InvalidInput("task term is empty")
    key = term.casefold()
    if key in AMBIGUOUS_TASK_ALIASES:
        options = AMBIGUOUS_TASK_ALIASES[key]
        return options[1] if context == options[1] else options[0]
    hit = vocab.task_aliases.get(key)
    if hit is None:
        raise UnknownTask(term)
    return hit


def classify_anatomy(raw: str | None, vocab: Vocabulary | None = None) -> AnatomyPath:
    """Total lookup of one structure term in the anatomy hierarchy.

    Unknown terms, "NA", and empty input all map to the [Unknown] path.
    """
    vocab = vocab or default_vocabulary()
    term = (raw or "").strip()
    if not term or term.casefold() in {"na", "n/a", "unknown"}:
        return AnatomyPath(levels=("Unknown",), source_term=term)
    levels = vocab.anatomy.get(term.casefold())
    if levels is None:
        return AnatomyPath(levels=("Unknown",), source_term=term)
    return AnatomyPath(levels=levels, source_term=term)


def classify_anatomy_multi(raw: str | None, vocab: Vocabulary | None = None) -> tuple[AnatomyPath, ...]:
    """Comma-separated variant of classify_anatomy; one path per term."""
    terms = [t for t in (raw or "").split(",") if t.strip()]
    if not terms:
        return (classify_anatomy(raw, vocab),)
    paths = []
    seen = set()
    for term in terms:
        p = classify_anatomy(term, vocab)
        if p.levels not in seen:
            seen.add(p.levels)
            paths.append(p)
    return tuple(paths)
