"""Declarative recipe evaluation (Filter Mode 1) and faceted search
(Filter Mode 2) over an immutable catalog manifest.

Both modes share one predicate engine: a facet state is induced into a
recipe and evaluated identically, so every Mode-1 law carries over. The two
``*_any_of`` fields are internal facet-induction extensions (label-presence
and year dropdowns cannot be expressed in the wire recipe's vocabulary);
they never appear in recipe JSON.

Set predicates default to intersection-nonempty semantics: a multi-modality
dataset matches a CT-only recipe. ``strict_sets=True`` switches to subset
matching.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping

from . import vocab as vocab_mod
from .errors import FacetError, RecipeFieldError, RecipeParseError
from .harmonize import CatalogManifest, HarmonizedRecord
from .vocab import ANATOMY_ROOTS, DIMENSIONS, MODALITIES, TASKS, Vocabulary

logger = logging.getLogger(__name__)

RECIPE_KEYS = (
    "dimensions", "modalities", "tasks", "anatomy_roots", "licenses_allow",
    "min_valid_image_n", "year_range", "label_presence", "allow_3d_as_2d_sources",
    "text_query",
)

FACET_AXES = ("dimension", "modality", "task", "anatomy_root", "label_presence", "year")

PROJECTED_3D_FLAG = "projected_3d_source"


@dataclass(frozen=True)
class FilterRecipe:
    """Deterministic selection criteria. Empty sets mean "any"; declaration
    order of set fields is preserved (it drives fusion attribution)."""

    dimensions: tuple[str, ...] = ()
    modalities: tuple[str, ...] = ()
    tasks: tuple[str, ...] = ()
    anatomy_roots: tuple[str, ...] = ()
    licenses_allow: tuple[str, ...] = ()
    min_valid_image_n: int = 0
    year_range: tuple[int, int] | None = None
    label_presence: str = "any"  # any | labeled_only
    allow_3d_as_2d_sources: bool = False
    text_query: str = ""
    # facet-induction extensions, never read from recipe JSON
    label_presence_any_of: tuple[str, ...] | None = None
    years_any_of: tuple[int, ...] | None = None

    def to_wire(self) -> dict[str, Any]:
        return {
            "dimensions": list(self.dimensions),
            "modalities": list(self.modalities),
            "tasks": list(self.tasks),
            "anatomy_roots": list(self.anatomy_roots),
            "licenses_allow": list(self.licenses_allow),
            "min_valid_image_n": self.min_valid_image_n,
            "year_range": list(self.year_range) if self.year_range else None,
            "label_presence": self.label_presence,
            "allow_3d_as_2d_sources": self.allow_3d_as_2d_sources,
            "text_query": self.text_query,
        }


@dataclass(frozen=True)
class SelectionSet:
    """Sorted, duplicate-free selection of dataset names plus per-dataset
    flags and the recipe/facet state that produced it."""

    names: tuple[str, ...]
    provenance: Any = None
    flags: dict[str, tuple[str, ...]] = field(default_factory=dict)

    def __contains__(self, name: str) -> bool:
        return name in set(self.names)

    def __len__(self) -> int:
        return len(self.names)


def _dedup_keep_order(values: Iterable[str]) -> tuple[str, ...]:
    seen = set()
    out = []
    for v in values:
        if v not in seen:
            seen.add(v)
            out.append(v)
    return tuple(out)


def _norm_dimension_value(value: str, vocab: Vocabulary) -> str | None:
    if value in DIMENSIONS:
        return value
    return vocab.dimension_aliases.get(str(value).casefold())


def _norm_modality_value(value: str, vocab: Vocabulary) -> str | None:
    if value in MODALITIES:
        return value
    hit = vocab.modality_aliases.get(str(value).strip().casefold())
    return hit[0] if hit else None


def _norm_task_value(value: str, vocab: Vocabulary) -> str | None:
    key = str(value).strip().casefold()
    if key in vocab_mod.AMBIGUOUS_TASK_ALIASES:
        return vocab_mod.AMBIGUOUS_TASK_ALIASES[key][0]
    return vocab.task_aliases.get(key)


def _norm_root_value(value: str) -> str | None:
    for root in ANATOMY_ROOTS:
        if root.casefold() == str(value).strip().casefold():
            return root
    return None


def _enum_list(raw: Any, fieldname: str, normalize) -> tuple[str, ...]:
    if raw is None:
        return ()
    if not isinstance(raw, list):
        raise RecipeFieldError(fieldname, raw, "expected an array")
    out = []
    for item in raw:
        if not isinstance(item, str):
            raise RecipeFieldError(fieldname, item, "expected a string")
        norm = normalize(item)
        if norm is None:
            raise RecipeFieldError(fieldname, item, "not a vocabulary member")
        out.append(norm)
    return _dedup_keep_order(out)


def parse_recipe(text: str, vocab: Vocabulary | None = None) -> FilterRecipe:
    """Decode recipe JSON; absent fields take defaults, unknown keys warn."""
    vocab = vocab or vocab_mod.default_vocabulary()
    if not text.strip():
        raise RecipeParseError("empty recipe text", 0)
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise RecipeParseError(exc.msg, exc.pos) from exc
    if not isinstance(obj, dict):
        raise RecipeParseError("recipe must be a JSON object", 0)

    for key in obj:
        if key not in RECIPE_KEYS:
            logger.warning("unknown recipe key %r ignored", key)

    dimensions = _enum_list(obj.get("dimensions"), "dimensions",
                            lambda v: _norm_dimension_value(v, vocab))
    modalities = _enum_list(obj.get("modalities"), "modalities",
                            lambda v: _norm_modality_value(v, vocab))
    tasks = _enum_list(obj.get("tasks"), "tasks", lambda v: _norm_task_value(v, vocab))
    anatomy_roots = _enum_list(obj.get("anatomy_roots"), "anatomy_roots", _norm_root_value)

    licenses_raw = obj.get("licenses_allow")
    if licenses_raw is None:
        licenses = ()
    elif isinstance(licenses_raw, list) and all(isinstance(s, str) for s in licenses_raw):
        licenses = _dedup_keep_order(licenses_raw)
    else:
        raise RecipeFieldError("licenses_allow", licenses_raw, "expected an array of strings")

    min_n = obj.get("min_valid_image_n", 0)
    if isinstance(min_n, bool) or not isinstance(min_n, int) or min_n < 0:
        raise RecipeFieldError("min_valid_image_n", min_n, "expected a non-negative integer")

    year_range = obj.get("year_range")
    if year_range is not None:
        if (not isinstance(year_range, list) or len(year_range) != 2
                or any(isinstance(y, bool) or not isinstance(y, int) for y in year_range)):
            raise RecipeFieldError("year_range", year_range, "expected [min_year, max_year]")
        if year_range[0] > year_range[1]:
            raise RecipeFieldError("year_range", year_range, "min_year exceeds max_year")
        year_range = (year_range[0], year_range[1])

    label = obj.get("label_presence", "any")
    if label not in ("any", "labeled_only"):
        raise RecipeFieldError("label_presence", label, "expected 'any' or 'labeled_only'")

    allow_3d = obj.get("allow_3d_as_2d_sources", False)
    if not isinstance(allow_3d, bool):
        raise RecipeFieldError("allow_3d_as_2d_sources", allow_3d, "expected a boolean")

    text_query = obj.get("text_query", "")
    if text_query is None:
        text_query = ""
    if not isinstance(text_query, str):
        raise RecipeFieldError("text_query", text_query, "expected a string")

    return FilterRecipe(
        dimensions=dimensions,
        modalities=modalities,
        tasks=tasks,
        anatomy_roots=anatomy_roots,
        licenses_allow=licenses,
        min_valid_image_n=min_n,
        year_range=year_range,
        label_presence=label,
        allow_3d_as_2d_sources=allow_3d,
        text_query=text_query,
    )


def _searchable_text(rec: HarmonizedRecord) -> str:
    base = rec.base
    parts = (base.dataset_name, base.dataset_description,
             " ".join(base.organization), base.disease, base.challenge_series)
    return " \n".join(parts).casefold()


def _dimension_predicate(rec: HarmonizedRecord, recipe: FilterRecipe,
                         strict_sets: bool) -> tuple[bool, bool]:
    """Returns (passes, admitted_via_3d_projection)."""
    if not recipe.dimensions:
        return True, False
    have = set(rec.dimensions)
    want = set(recipe.dimensions)
    direct = have <= want and bool(have) if strict_sets else bool(have & want)
    if direct:
        return True, False
    if recipe.allow_3d_as_2d_sources and "D2" in want and "D3" in have:
        return True, True
    return False, False


def _set_predicate(have: Iterable[str], want: tuple[str, ...], strict_sets: bool) -> bool:
    if not want:
        return True
    have_set = set(have)
    if strict_sets:
        return bool(have_set) and have_set <= set(want)
    return bool(have_set & set(want))


def matches(rec: HarmonizedRecord, recipe: FilterRecipe,
            strict_sets: bool = False) -> tuple[bool, tuple[str, ...]]:
    """Conjunction of all active predicates; returns (selected, flags)."""
    flags: list[str] = []

    dim_ok, projected = _dimension_predicate(rec, recipe, strict_sets)
    if not dim_ok:
        return False, ()
    if projected:
        flags.append(PROJECTED_3D_FLAG)

    if not _set_predicate(rec.modalities, recipe.modalities, strict_sets):
        return False, ()
    if not _set_predicate(rec.tasks, recipe.tasks, strict_sets):
        return False, ()
    if not _set_predicate(rec.anatomy_roots, recipe.anatomy_roots, strict_sets):
        return False, ()

    if recipe.licenses_allow and rec.base.license not in recipe.licenses_allow:
        return False, ()

    total = rec.valid_total if rec.valid_total is not None else 0
    if total < recipe.min_valid_image_n:
        return False, ()

    if recipe.year_range is not None:
        if rec.release_year is None:
            return False, ()
        lo, hi = recipe.year_range
        if not lo <= rec.release_year <= hi:
            return False, ()

    if recipe.years_any_of is not None:
        if rec.release_year is None or rec.release_year not in recipe.years_any_of:
            return False, ()

    if recipe.label_presence == "labeled_only" and not rec.is_labeled:
        return False, ()

    if recipe.label_presence_any_of is not None:
        if rec.base.label_presence not in recipe.label_presence_any_of:
            return False, ()

    if recipe.text_query:
        if recipe.text_query.casefold() not in _searchable_text(rec):
            return False, ()

    return True, tuple(flags)


def evaluate_recipe(recipe: FilterRecipe, manifest: CatalogManifest,
                    strict_sets: bool = False) -> SelectionSet:
    """Deterministic, order-independent Mode-1 evaluation."""
    names: list[str] = []
    flags: dict[str, tuple[str, ...]] = {}
    for rec in manifest.datasets:
        ok, rec_flags = matches(rec, recipe, strict_sets)
        if ok:
            names.append(rec.dataset_name)
            if rec_flags:
                flags[rec.dataset_name] = rec_flags
    return SelectionSet(names=tuple(sorted(names)), provenance=recipe, flags=flags)


def induce_recipe(facets: Mapping[str, Iterable], text: str | None = None,
                  vocab: Vocabulary | None = None) -> FilterRecipe:
    """Documented facet->recipe induction: each axis fills the corresponding
    recipe set (label_presence and year fill the internal any-of extensions);
    the free-text box fills text_query."""
    vocab = vocab or vocab_mod.default_vocabulary()
    kwargs: dict[str, Any] = {"text_query": (text or "")}
    for axis, values in facets.items():
        if axis not in FACET_AXES:
            raise FacetError(f"unknown facet axis {axis!r}")
        values = list(values)
        if not values:
            continue
        if axis == "dimension":
            kwargs["dimensions"] = _enum_list(values, "dimensions",
                                              lambda v: _norm_dimension_value(v, vocab))
        elif axis == "modality":
            kwargs["modalities"] = _enum_list(values, "modalities",
                                              lambda v: _norm_modality_value(v, vocab))
        elif axis == "task":
            kwargs["tasks"] = _enum_list(values, "tasks", lambda v: _norm_task_value(v, vocab))
        elif axis == "anatomy_root":
            kwargs["anatomy_roots"] = _enum_list(values, "anatomy_roots", _norm_root_value)
        elif axis == "label_presence":
            vals = _dedup_keep_order(str(v) for v in values)
            for v in vals:
                if v not in ("labeled", "unlabeled", "mixed"):
                    raise FacetError(f"unknown label_presence facet value {v!r}")
            kwargs["label_presence_any_of"] = vals
        elif axis == "year":
            try:
                years = tuple(sorted({int(v) for v in values}))
            except (TypeError, ValueError) as exc:
                raise FacetError(f"year facet values must be integers: {values!r}") from exc
            kwargs["years_any_of"] = years
    return FilterRecipe(**kwargs)


def facet_filter(facets: Mapping[str, Iterable], text: str | None,
                 manifest: CatalogManifest,
                 vocab: Vocabulary | None = None) -> SelectionSet:
    """Mode-2 filtering: evaluate the recipe induced by the facet state."""
    recipe = induce_recipe(facets, text, vocab)
    selection = evaluate_recipe(recipe, manifest)
    return SelectionSet(names=selection.names,
                        provenance={"facets": {k: list(v) for k, v in facets.items()},
                                    "text": text or ""},
                        flags=selection.flags)


def _axis_values(rec: HarmonizedRecord, axis: str) -> tuple[str, ...]:
    if axis == "dimension":
        return rec.dimensions
    if axis == "modality":
        return rec.modalities
    if axis == "task":
        return rec.tasks
    if axis == "anatomy_root":
        return rec.anatomy_roots
    if axis == "label_presence":
        return (rec.base.label_presence,)
    if axis == "year":
        return (str(rec.release_year),) if rec.release_year is not None else ()
    raise FacetError(f"unknown facet axis {axis!r}")


def facet_counts(manifest: CatalogManifest,
                 selection: SelectionSet) -> dict[str, dict[str, int]]:
    """Per-axis value counts over a selection; multi-valued axes count a
    dataset once per carried value."""
    selected = set(selection.names)
    counts: dict[str, dict[str, int]] = {axis: {} for axis in FACET_AXES}
    for rec in manifest.datasets:
        if rec.dataset_name not in selected:
            continue
        for axis in FACET_AXES:
            for value in _axis_values(rec, axis):
                counts[axis][value] = counts[axis].get(value, 0) + 1
    return counts


def recipe_from_file(path: str, vocab: Vocabulary | None = None) -> FilterRecipe:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_recipe(fh.read(), vocab)
