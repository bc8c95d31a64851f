"""Independent brute-force oracles and hypothesis strategies for the query
laws. These deliberately re-derive selection semantics with plain loops and
no shared helpers, so they can disagree with the engine."""

from __future__ import annotations

import json

from hypothesis import strategies as st

MODALITY_TERMS = ["CT", "MR", "Fundus", "X-Ray", "OCT"]
MODALITY_CODES = {"CT": "CT", "MR": "MRI", "Fundus": "FUNDUS", "X-Ray": "XRAY", "OCT": "OCT"}
DIM_TERMS = {"2D": "D2", "3D": "D3", "video": "VIDEO"}
TASK_TERMS = {"Seg": "segmentation", "Cls": "classification", "Det": "detection",
              "regression": "regression"}
STRUCTURES = {"Lung": "Thorax", "Brain": "Brain", "Retina": "Eye", "NA": "Unknown"}
LICENSES = ["CC BY 4.0", "Custom", "NA"]
ORGS = ["MICCAI", "Stanford", "NIH", "Kaggle"]
TEXT_WORDS = ["", "covid", "lung", "corpus"]


def meta_dict_strategy(index: int = 0):
    """One synthetic data-meta object with raw (alias-form) vocabulary terms."""
    return st.fixed_dictionaries({
        "release_date": st.one_of(st.just("NA"), st.integers(2010, 2025).map(str)),
        "modality_primary": st.lists(st.sampled_from(MODALITY_TERMS), min_size=1,
                                     max_size=3, unique=True),
        "dimension": st.lists(st.sampled_from(sorted(DIM_TERMS)), min_size=1,
                              max_size=2, unique=True),
        "task_type": st.lists(st.sampled_from(sorted(TASK_TERMS)), min_size=1,
                              max_size=2, unique=True),
        "anatomical_structure": st.lists(st.sampled_from(sorted(STRUCTURES)),
                                         min_size=1, max_size=2, unique=True),
        "label_presence": st.sampled_from(["labeled", "unlabeled", "mixed"]),
        "valid_image_n": st.one_of(st.just("NA"), st.integers(0, 5000)),
        "license": st.sampled_from(LICENSES),
        "organization": st.lists(st.sampled_from(ORGS), min_size=0, max_size=2),
        "dataset_description": st.sampled_from(
            ["a lung study", "covid screening corpus", "retina images", "plain corpus"]),
    })


@st.composite
def meta_lines_strategy(draw, min_size=1, max_size=8):
    dicts = draw(st.lists(meta_dict_strategy(), min_size=min_size, max_size=max_size))
    lines = []
    for i, d in enumerate(dicts):
        d = dict(d)
        d["dataset_name"] = f"ds-{i:02d}"
        d["data_volume"] = d["valid_image_n"]
        lines.append(json.dumps(d))
    return lines


@st.composite
def recipe_strategy(draw):
    body = {}
    if draw(st.booleans()):
        body["dimensions"] = draw(st.lists(st.sampled_from(["D2", "D3", "VIDEO"]),
                                           max_size=2, unique=True))
    if draw(st.booleans()):
        body["modalities"] = draw(st.lists(
            st.sampled_from(sorted(set(MODALITY_CODES.values()))), max_size=3, unique=True))
    if draw(st.booleans()):
        body["tasks"] = draw(st.lists(st.sampled_from(sorted(set(TASK_TERMS.values()))),
                                      max_size=2, unique=True))
    if draw(st.booleans()):
        body["anatomy_roots"] = draw(st.lists(
            st.sampled_from(sorted(set(STRUCTURES.values()))), max_size=2, unique=True))
    if draw(st.booleans()):
        body["licenses_allow"] = draw(st.lists(st.sampled_from(LICENSES), max_size=2,
                                               unique=True))
    body["min_valid_image_n"] = draw(st.sampled_from([0, 0, 1, 100, 2500]))
    if draw(st.booleans()):
        lo = draw(st.integers(2008, 2024))
        hi = draw(st.integers(lo, 2026))
        body["year_range"] = [lo, hi]
    body["label_presence"] = draw(st.sampled_from(["any", "any", "labeled_only"]))
    body["allow_3d_as_2d_sources"] = draw(st.booleans())
    body["text_query"] = draw(st.sampled_from(TEXT_WORDS))
    return json.dumps(body)


@st.composite
def facet_state_strategy(draw):
    facets = {}
    if draw(st.booleans()):
        facets["modality"] = draw(st.lists(
            st.sampled_from(sorted(set(MODALITY_CODES.values()))), max_size=2, unique=True))
    if draw(st.booleans()):
        facets["dimension"] = draw(st.lists(st.sampled_from(["D2", "D3", "VIDEO"]),
                                            max_size=2, unique=True))
    if draw(st.booleans()):
        facets["task"] = draw(st.lists(st.sampled_from(sorted(set(TASK_TERMS.values()))),
                                       max_size=2, unique=True))
    if draw(st.booleans()):
        facets["anatomy_root"] = draw(st.lists(
            st.sampled_from(sorted(set(STRUCTURES.values()))), max_size=2, unique=True))
    if draw(st.booleans()):
        facets["label_presence"] = draw(st.lists(
            st.sampled_from(["labeled", "unlabeled", "mixed"]), max_size=2, unique=True))
    if draw(st.booleans()):
        facets["year"] = draw(st.lists(st.integers(2010, 2025), max_size=3, unique=True))
    text = draw(st.sampled_from(TEXT_WORDS))
    return facets, text


def naive_select(recipe_obj: dict, manifest) -> set[str]:
    """Linear-scan reimplementation of Mode-1 selection over a manifest."""
    out = set()
    for rec in manifest.datasets:
        if _naive_match(recipe_obj, rec):
            out.add(rec.dataset_name)
    return out


def _naive_match(r: dict, rec) -> bool:
    dims = set(r.get("dimensions") or [])
    if dims:
        direct = bool(dims & set(rec.dimensions))
        via_3d = (r.get("allow_3d_as_2d_sources", False) and "D2" in dims
                  and "D3" in rec.dimensions)
        if not (direct or via_3d):
            return False
    mods = set(r.get("modalities") or [])
    if mods and not (mods & set(rec.modalities)):
        return False
    tasks = set(r.get("tasks") or [])
    if tasks and not (tasks & set(rec.tasks)):
        return False
    roots = set(r.get("anatomy_roots") or [])
    if roots and not (roots & {p.root for p in rec.anatomy_paths}):
        return False
    lic = set(r.get("licenses_allow") or [])
    if lic and rec.base.license not in lic:
        return False
    total = rec.base.valid_image_n.total
    if (total if total is not None else 0) < r.get("min_valid_image_n", 0):
        return False
    yr = r.get("year_range")
    if yr is not None:
        if rec.release_year is None or not (yr[0] <= rec.release_year <= yr[1]):
            return False
    if r.get("label_presence", "any") == "labeled_only":
        if rec.base.label_presence not in ("labeled", "mixed"):
            return False
    text = r.get("text_query", "")
    if text:
        blob = " ".join([
            rec.base.dataset_name, rec.base.dataset_description,
            " ".join(rec.base.organization), rec.base.disease,
            rec.base.challenge_series,
        ]).lower()
        if text.lower() not in blob:
            return False
    return True


def naive_facet_select(facets: dict, text: str, manifest) -> set[str]:
    """Brute-force facet predicate: dataset carries >=1 selected value per axis."""
    out = set()
    for rec in manifest.datasets:
        ok = True
        for axis, values in facets.items():
            if not values:
                continue
            values = set(values)
            if axis == "modality":
                carried = set(rec.modalities)
            elif axis == "dimension":
                carried = set(rec.dimensions)
            elif axis == "task":
                carried = set(rec.tasks)
            elif axis == "anatomy_root":
                carried = {p.root for p in rec.anatomy_paths}
            elif axis == "label_presence":
                carried = {rec.base.label_presence}
            elif axis == "year":
                carried = {rec.release_year} if rec.release_year is not None else set()
            else:
                raise AssertionError(axis)
            if not (carried & values):
                ok = False
                break
        if ok and text:
            blob = " ".join([
                rec.base.dataset_name, rec.base.dataset_description,
                " ".join(rec.base.organization), rec.base.disease,
                rec.base.challenge_series,
            ]).lower()
            if text.lower() not in blob:
                ok = False
        if ok:
            out.add(rec.dataset_name)
    return out


def tighten_recipe(draw, r1: dict) -> dict:
    """Derive a recipe r2 that tightens r1 under the documented ordering."""
    universe = {
        "dimensions": ["D2", "D3", "VIDEO"],
        "modalities": sorted(set(MODALITY_CODES.values())),
        "tasks": sorted(set(TASK_TERMS.values())),
        "anatomy_roots": sorted(set(STRUCTURES.values())),
        "licenses_allow": LICENSES,
    }
    r2 = dict(r1)
    for key, full in universe.items():
        base = r1.get(key) or []
        if not base:
            # empty means any: any subset of the universe tightens it
            if draw(st.booleans()):
                r2[key] = draw(st.lists(st.sampled_from(full), max_size=2, unique=True))
        else:
            r2[key] = draw(st.lists(st.sampled_from(base), min_size=1,
                                    max_size=len(base), unique=True))
    r2["min_valid_image_n"] = r1.get("min_valid_image_n", 0) + draw(st.integers(0, 500))
    yr = r1.get("year_range")
    if yr is None:
        if draw(st.booleans()):
            lo = draw(st.integers(2008, 2024))
            hi = draw(st.integers(lo, 2026))
            r2["year_range"] = [lo, hi]
    else:
        lo = draw(st.integers(yr[0], yr[1]))
        hi = draw(st.integers(lo, yr[1]))
        r2["year_range"] = [lo, hi]
    if r1.get("label_presence", "any") == "any" and draw(st.booleans()):
        r2["label_presence"] = "labeled_only"
    if r1.get("allow_3d_as_2d_sources", False) and draw(st.booleans()):
        r2["allow_3d_as_2d_sources"] = False
    t1 = r1.get("text_query", "")
    if not t1 and draw(st.booleans()):
        r2["text_query"] = draw(st.sampled_from([w for w in TEXT_WORDS if w]))
    return r2
