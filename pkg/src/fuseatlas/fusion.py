"""Fusion blueprints: goal-conditioned grouping of a selection with
per-group quantitative summaries, compatibility flags, and sampling-weight
hints.

Multi-valued datasets are attributed to exactly one group (exclusive
attribution) so per-group sums partition the selection totals; the
attribution order is the recipe's declared order for the grouping axis,
falling back to canonical vocabulary order, and every multi-valued dataset
is listed in ``attribution_notes``.
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from typing import Iterable

from .errors import AxisError, InvalidInput, WeightError
from .harmonize import CatalogManifest, HarmonizedRecord
from .query import FilterRecipe, SelectionSet, evaluate_recipe
from .vocab import (
    ANATOMY_ROOTS,
    DIMENSION_DISPLAY,
    DIMENSIONS,
    MODALITIES,
    MODALITY_DISPLAY,
    TASKS,
)

GROUP_AXES = ("modality", "task", "anatomy_root", "dimension")

UNKNOWN_KEY = "unknown"

# Label geometry implied by each task family, used when a dataset has no
# observed annotation entries.
TASK_GEOMETRY = {
    "segmentation": "mask",
    "detection": "box",
    "classification": "class_label",
    "regression": "class_label",
    "localization": "landmark",
    "tracking": "box",
    "vqa": "text",
    "captioning": "text",
    "report_generation": "text",
    "registration": "other",
    "generation": "other",
    "reconstruction": "other",
}

_CANONICAL_ORDER = {
    "modality": MODALITIES,
    "task": TASKS,
    "anatomy_root": ANATOMY_ROOTS,
    "dimension": DIMENSIONS,
}


@dataclass(frozen=True)
class GroupSummary:
    key: str
    n_datasets: int
    sum_image: int
    n_orgs: int
    labeled_ratio: float | None  # None only for the empty group
    storage_gb: float
    storage_known_n: int
    members: tuple[str, ...]


@dataclass(frozen=True)
class CompatFlag:
    flag: str  # mixed_annotation_types | mixed_dimensions | protocol_heterogeneity
    detail: str


@dataclass(frozen=True)
class GroupCompat:
    group_key: str
    flag: str
    detail: str


@dataclass(frozen=True)
class AttributionNote:
    dataset_name: str
    values: tuple[str, ...]
    attributed_to: str


@dataclass(frozen=True)
class FusionBlueprint:
    recipe: FilterRecipe
    group_axis: str
    groups: tuple[GroupSummary, ...]
    totals: GroupSummary
    compatibility: tuple[GroupCompat, ...]
    attribution_notes: tuple[AttributionNote, ...]
    selection: SelectionSet
    per_dataset_caps: dict | None = None


def labeled_ratio(members: Iterable[HarmonizedRecord]) -> float:
    """Fraction of members whose label_presence is labeled or mixed."""
    members = list(members)
    if not members:
        raise InvalidInput("labeled_ratio requires a non-empty member list")
    return sum(1 for m in members if m.is_labeled) / len(members)


def format_ratio(value: float) -> str:
    """Export form of a ratio: three decimals, half-up."""
    return str(Decimal(repr(value)).quantize(Decimal("0.001"), rounding=ROUND_HALF_UP))


def _axis_values(rec: HarmonizedRecord, axis: str) -> tuple[str, ...]:
    if axis == "modality":
        return rec.modalities
    if axis == "task":
        return rec.tasks
    if axis == "anatomy_root":
        return rec.anatomy_roots
    if axis == "dimension":
        return rec.dimensions
    raise AxisError(f"unsupported group axis {axis!r}")


def _recipe_order(recipe: FilterRecipe | None, axis: str) -> tuple[str, ...]:
    if recipe is None:
        return ()
    return {
        "modality": recipe.modalities,
        "task": recipe.tasks,
        "anatomy_root": recipe.anatomy_roots,
        "dimension": recipe.dimensions,
    }[axis]


def attribute_value(rec: HarmonizedRecord, axis: str,
                    recipe: FilterRecipe | None = None) -> str:
    """The single group a dataset counts toward on an axis."""
    values = set(_axis_values(rec, axis))
    if not values:
        return UNKNOWN_KEY
    declared = _recipe_order(recipe, axis)
    for v in declared:
        if v in values:
            return v
    for v in _CANONICAL_ORDER[axis]:
        if v in values:
            return v
    return UNKNOWN_KEY


def _summary(key: str, members: list[HarmonizedRecord]) -> GroupSummary:
    names = tuple(sorted(m.dataset_name for m in members))
    orgs: set[str] = set()
    for m in members:
        orgs.update(m.org_tokens)
    storage_known = [m.base.storage_size_gb for m in members if m.base.storage_size_gb is not None]
    return GroupSummary(
        key=key,
        n_datasets=len(members),
        sum_image=sum(m.valid_total or 0 for m in members),
        n_orgs=len(orgs),
        labeled_ratio=labeled_ratio(members) if members else None,
        storage_gb=float(sum(storage_known)),
        storage_known_n=len(storage_known),
        members=names,
    )


def compatibility_flags(group_members: Iterable[HarmonizedRecord]) -> list[CompatFlag]:
    """Integration-hazard flags for one group of datasets."""
    members = list(group_members)
    flags: list[CompatFlag] = []
    if not members:
        return flags

    geometries: set[str] = set()
    for m in members:
        if m.annotation_types:
            geometries.update(m.annotation_types)
        else:
            geometries.update(TASK_GEOMETRY.get(t, "other") for t in m.tasks)
    if len(geometries) > 1:
        flags.append(CompatFlag(
            "mixed_annotation_types",
            "annotation geometries differ: " + ", ".join(sorted(geometries))))

    dim_sets = {m.dimensions for m in members}
    if len(dim_sets) > 1:
        rendered = sorted("{" + ", ".join(d) + "}" for d in dim_sets)
        flags.append(CompatFlag("mixed_dimensions",
                                "dimension sets differ: " + "; ".join(rendered)))

    secondaries = {m.base.modality_secondary for m in members} - {"NA", ""}
    if len(secondaries) > 1:
        flags.append(CompatFlag("protocol_heterogeneity",
                                "modality_secondary differs: " + ", ".join(sorted(secondaries))))
    return flags


def build_blueprint(recipe: FilterRecipe, manifest: CatalogManifest,
                    group_axis: str = "modality",
                    per_dataset_caps: dict | None = None,
                    strict_sets: bool = False) -> FusionBlueprint:
    """Evaluate the recipe and fold the selection into exclusive groups."""
    if group_axis not in GROUP_AXES:
        raise AxisError(f"unsupported group axis {group_axis!r}")
    selection = evaluate_recipe(recipe, manifest, strict_sets=strict_sets)
    selected = [rec for rec in manifest.datasets if rec.dataset_name in set(selection.names)]

    grouped: dict[str, list[HarmonizedRecord]] = {}
    notes: list[AttributionNote] = []
    for rec in selected:
        key = attribute_value(rec, group_axis, recipe)
        grouped.setdefault(key, []).append(rec)
        values = _axis_values(rec, group_axis)
        if len(values) > 1:
            notes.append(AttributionNote(dataset_name=rec.dataset_name,
                                         values=values, attributed_to=key))

    order = list(_CANONICAL_ORDER[group_axis]) + [UNKNOWN_KEY]
    keys = sorted(grouped, key=order.index)
    groups = tuple(_summary(k, grouped[k]) for k in keys)
    totals = _summary("total", selected) if selected else GroupSummary(
        key="total", n_datasets=0, sum_image=0, n_orgs=0, labeled_ratio=None,
        storage_gb=0.0, storage_known_n=0, members=())

    compat: list[GroupCompat] = []
    for k in keys:
        for f in compatibility_flags(grouped[k]):
            compat.append(GroupCompat(group_key=k, flag=f.flag, detail=f.detail))

    notes.sort(key=lambda n: n.dataset_name)
    return FusionBlueprint(
        recipe=recipe,
        group_axis=group_axis,
        groups=groups,
        totals=totals,
        compatibility=tuple(compat),
        attribution_notes=tuple(notes),
        selection=selection,
        per_dataset_caps=per_dataset_caps,
    )


def sampling_weights(groups: Iterable[GroupSummary], temperature: float) -> dict[str, float]:
    """Temperature-scaled weights: sum_image^(1/T), normalized to 1."""
    groups = list(groups)
    if temperature <= 0:
        raise WeightError(f"temperature must be positive, got {temperature}")
    for g in groups:
        if g.sum_image <= 0:
            raise WeightError(f"group {g.key!r} has no counted images")
    raw = {g.key: g.sum_image ** (1.0 / temperature) for g in groups}
    norm = sum(raw.values())
    return {k: v / norm for k, v in raw.items()}


def _display_key(axis: str, key: str) -> str:
    if key == UNKNOWN_KEY:
        return key
    if axis == "modality":
        return MODALITY_DISPLAY.get(key, key)
    if axis == "dimension":
        return DIMENSION_DISPLAY.get(key, key)
    return key


def render_blueprint_table(bp: FusionBlueprint) -> str:
    """Human-readable summary table, one group per row plus a totals row.

    Columns are joined with two spaces; counts print without separators so
    rows stay machine-greppable.
    """
    lines = [f"{bp.group_axis}  n_datasets  sum_image  n_orgs  labeled_ratio"]
    for g in bp.groups:
        ratio = format_ratio(g.labeled_ratio) if g.labeled_ratio is not None else "NA"
        lines.append(
            f"{_display_key(bp.group_axis, g.key)}  {g.n_datasets}  {g.sum_image}  {g.n_orgs}  {ratio}")
    t = bp.totals
    ratio = format_ratio(t.labeled_ratio) if t.labeled_ratio is not None else "NA"
    lines.append(f"total  {t.n_datasets}  {t.sum_image}  {t.n_orgs}  {ratio}")
    return "\n".join(lines)


def _summary_doc(g: GroupSummary) -> dict:
    return {
        "key": g.key,
        "n_datasets": g.n_datasets,
        "sum_image": g.sum_image,
        "n_orgs": g.n_orgs,
        "labeled_ratio": float(format_ratio(g.labeled_ratio)) if g.labeled_ratio is not None else None,
        "storage_gb": g.storage_gb,
        "storage_known_n": g.storage_known_n,
        "members": list(g.members),
    }


def blueprint_to_doc(bp: FusionBlueprint) -> dict:
    """Machine-readable blueprint document (blueprint.json)."""
    return {
        "recipe": bp.recipe.to_wire(),
        "group_axis": bp.group_axis,
        "groups": [_summary_doc(g) for g in bp.groups],
        "totals": _summary_doc(bp.totals),
        "compatibility": [
            {"group_key": c.group_key, "flag": c.flag, "detail": c.detail}
            for c in bp.compatibility
        ],
        "attribution_notes": [
            {"dataset_name": n.dataset_name, "values": list(n.values),
             "attributed_to": n.attributed_to}
            for n in bp.attribution_notes
        ],
        "per_dataset_caps": bp.per_dataset_caps,
        "selection_flags": {k: list(v) for k, v in sorted(bp.selection.flags.items())},
    }
