/**
 * Client-side re-implementation of the catalog engine's selection and export
 * semantics. Exports must stay byte-identical to the engine's; the golden
 * tests under tests/golden guard against drift.
 */

import type {
  AuditRow,
  DatasetDoc,
  FacetState,
  GroupSummary,
  ManifestDoc,
  Recipe,
  Selection,
} from "./types.js";

export const MANIFEST_VERSION = "1";

export const MODALITIES = [
  "XRAY", "CT", "MRI", "ULTRASOUND", "PET", "PATHOLOGY", "ENDOSCOPY",
  "FUNDUS", "DERMOSCOPY", "MAMMOGRAPHY", "FFA", "OCT", "MICROSCOPY",
  "INFRARED", "ECG", "EEG", "EMG", "DSA", "CBCT", "OCTA", "RGB", "OTHER",
] as const;

export const DIMENSIONS = ["D2", "D3", "VIDEO"] as const;

export const TASKS = [
  "segmentation", "classification", "registration", "generation",
  "detection", "tracking", "reconstruction", "regression",
  "localization", "vqa", "captioning", "report_generation",
] as const;

export const ANATOMY_ROOTS = [
  "Eye", "Brain", "Thorax", "Abdomen", "Pelvis", "Musculoskeletal",
  "Skin", "Cell", "FullBody", "Unknown",
] as const;

export const MODALITY_DISPLAY: Record<string, string> = {
  XRAY: "X-Ray", CT: "CT", MRI: "MR", ULTRASOUND: "US", PET: "PET",
  PATHOLOGY: "Pathology", ENDOSCOPY: "Endoscopy", FUNDUS: "Fundus",
  DERMOSCOPY: "Dermoscopy", MAMMOGRAPHY: "Mammography", FFA: "FFA",
  OCT: "OCT", MICROSCOPY: "Microscopy", INFRARED: "Infrared", ECG: "ECG",
  EEG: "EEG", EMG: "EMG", DSA: "DSA", CBCT: "CBCT", OCTA: "OCTA",
  RGB: "RGB", OTHER: "Other",
};

export const DIMENSION_DISPLAY: Record<string, string> = {
  D2: "2D", D3: "3D", VIDEO: "video",
};

const DIMENSION_ALIASES: Record<string, string> = {
  "2d": "D2", d2: "D2", "3d": "D3", d3: "D3", video: "VIDEO",
};

const MODALITY_ALIASES: Record<string, string> = {
  mr: "MRI", mri: "MRI", ct: "CT", us: "ULTRASOUND", ultrasound: "ULTRASOUND",
  "x-ray": "XRAY", xray: "XRAY", fundus: "FUNDUS", pathology: "PATHOLOGY",
  histopathology: "PATHOLOGY", oct: "OCT", pet: "PET", endoscopy: "ENDOSCOPY",
  dermoscopy: "DERMOSCOPY", microscopy: "MICROSCOPY", mammography: "MAMMOGRAPHY",
};

const TASK_ALIASES: Record<string, string> = {
  seg: "segmentation", cls: "classification", det: "detection",
  reg: "registration", recon: "reconstruction", loc: "localization",
  est: "regression", pred: "classification", gen: "generation",
  trk: "tracking", track: "tracking", caption: "captioning",
};

export const FACET_AXES = [
  "dimension", "modality", "task", "anatomy_root", "label_presence", "year",
] as const;

export const AUDIT_COLUMNS = [
  "name", "dimension", "modality", "task", "organ", "images", "year",
  "organization", "license", "link",
] as const;

export const PROJECTED_3D_FLAG = "projected_3d_source";

export class RecipeError extends Error {
  constructor(message: string, readonly field?: string) {
    super(message);
    this.name = "RecipeError";
  }
}

export function loadManifestDoc(source: string | ManifestDoc): ManifestDoc {
  let doc: unknown;
  if (typeof source === "string") {
    try {
      doc = JSON.parse(source);
    } catch (err) {
      throw new Error(`manifest does not decode: ${(err as Error).message}`);
    }
  } else {
    doc = source;
  }
  if (typeof doc !== "object" || doc === null || Array.isArray(doc)) {
    throw new Error("manifest must be a JSON object");
  }
  const found = (doc as { version?: unknown }).version;
  if (found !== MANIFEST_VERSION) {
    throw new Error(
      `manifest version mismatch: expected '${MANIFEST_VERSION}', found '${String(found)}'`);
  }
  return doc as ManifestDoc;
}

function normEnum(value: unknown, field: string,
                  members: readonly string[],
                  aliases: Record<string, string>): string {
  if (typeof value !== "string") {
    throw new RecipeError(`invalid recipe field '${field}': expected a string`, field);
  }
  if ((members as readonly string[]).includes(value)) return value;
  const hit = aliases[value.trim().toLowerCase()];
  if (hit === undefined) {
    throw new RecipeError(
      `invalid recipe field '${field}': '${value}' is not a vocabulary member`, field);
  }
  return hit;
}

function normRoot(value: unknown, field: string): string {
  if (typeof value !== "string") {
    throw new RecipeError(`invalid recipe field '${field}': expected a string`, field);
  }
  const hit = ANATOMY_ROOTS.find((r) => r.toLowerCase() === value.trim().toLowerCase());
  if (hit === undefined) {
    throw new RecipeError(
      `invalid recipe field '${field}': '${value}' is not a vocabulary member`, field);
  }
  return hit;
}

function dedupKeepOrder(values: string[]): string[] {
  const seen = new Set<string>();
  const out: string[] = [];
  for (const v of values) {
    if (!seen.has(v)) {
      seen.add(v);
      out.push(v);
    }
  }
  return out;
}

function enumList(raw: unknown, field: string,
                  normalize: (v: unknown, field: string) => string): string[] {
  if (raw === undefined || raw === null) return [];
  if (!Array.isArray(raw)) {
    throw new RecipeError(`invalid recipe field '${field}': expected an array`, field);
  }
  return dedupKeepOrder(raw.map((v) => normalize(v, field)));
}

export const RECIPE_KEYS = [
  "dimensions", "modalities", "tasks", "anatomy_roots", "licenses_allow",
  "min_valid_image_n", "year_range", "label_presence",
  "allow_3d_as_2d_sources", "text_query",
] as const;

export function defaultRecipe(): Recipe {
  return {
    dimensions: [],
    modalities: [],
    tasks: [],
    anatomy_roots: [],
    licenses_allow: [],
    min_valid_image_n: 0,
    year_range: null,
    label_presence: "any",
    allow_3d_as_2d_sources: false,
    text_query: "",
  };
}

export function parseRecipe(text: string): Recipe {
  if (!text.trim()) throw new RecipeError("empty recipe text");
  let obj: unknown;
  try {
    obj = JSON.parse(text);
  } catch (err) {
    throw new RecipeError(`recipe is not valid JSON: ${(err as Error).message}`);
  }
  if (typeof obj !== "object" || obj === null || Array.isArray(obj)) {
    throw new RecipeError("recipe must be a JSON object");
  }
  const o = obj as Record<string, unknown>;
  const recipe = defaultRecipe();

  recipe.dimensions = enumList(o.dimensions, "dimensions",
    (v, f) => normEnum(v, f, DIMENSIONS, DIMENSION_ALIASES));
  recipe.modalities = enumList(o.modalities, "modalities",
    (v, f) => normEnum(v, f, MODALITIES, MODALITY_ALIASES));
  recipe.tasks = enumList(o.tasks, "tasks",
    (v, f) => normEnum(v, f, TASKS, TASK_ALIASES));
  recipe.anatomy_roots = enumList(o.anatomy_roots, "anatomy_roots", normRoot);

  if (o.licenses_allow !== undefined && o.licenses_allow !== null) {
    if (!Array.isArray(o.licenses_allow)
        || o.licenses_allow.some((s) => typeof s !== "string")) {
      throw new RecipeError("invalid recipe field 'licenses_allow': expected an array of strings",
        "licenses_allow");
    }
    recipe.licenses_allow = dedupKeepOrder(o.licenses_allow as string[]);
  }

  if (o.min_valid_image_n !== undefined) {
    const n = o.min_valid_image_n;
    if (typeof n !== "number" || !Number.isInteger(n) || n < 0) {
      throw new RecipeError(
        "invalid recipe field 'min_valid_image_n': expected a non-negative integer",
        "min_valid_image_n");
    }
    recipe.min_valid_image_n = n;
  }

  if (o.year_range !== undefined && o.year_range !== null) {
    const yr = o.year_range;
    if (!Array.isArray(yr) || yr.length !== 2
        || yr.some((y) => typeof y !== "number" || !Number.isInteger(y))) {
      throw new RecipeError("invalid recipe field 'year_range': expected [min_year, max_year]",
        "year_range");
    }
    if ((yr[0] as number) > (yr[1] as number)) {
      throw new RecipeError("invalid recipe field 'year_range': min_year exceeds max_year",
        "year_range");
    }
    recipe.year_range = [yr[0] as number, yr[1] as number];
  }

  if (o.label_presence !== undefined) {
    if (o.label_presence !== "any" && o.label_presence !== "labeled_only") {
      throw new RecipeError(
        "invalid recipe field 'label_presence': expected 'any' or 'labeled_only'",
        "label_presence");
    }
    recipe.label_presence = o.label_presence;
  }

  if (o.allow_3d_as_2d_sources !== undefined) {
    if (typeof o.allow_3d_as_2d_sources !== "boolean") {
      throw new RecipeError(
        "invalid recipe field 'allow_3d_as_2d_sources': expected a boolean",
        "allow_3d_as_2d_sources");
    }
    recipe.allow_3d_as_2d_sources = o.allow_3d_as_2d_sources;
  }

  if (o.text_query !== undefined && o.text_query !== null) {
    if (typeof o.text_query !== "string") {
      throw new RecipeError("invalid recipe field 'text_query': expected a string",
        "text_query");
    }
    recipe.text_query = o.text_query;
  }
  return recipe;
}

function validTotal(ds: DatasetDoc): number | null {
  const v = ds.meta.valid_image_n;
  if (typeof v === "number") return v;
  if (typeof v === "object" && v !== null && typeof v.total === "number") return v.total;
  return null;
}

function isLabeled(ds: DatasetDoc): boolean {
  return ds.meta.label_presence === "labeled" || ds.meta.label_presence === "mixed";
}

function anatomyRoots(ds: DatasetDoc): string[] {
  return [...new Set(ds.anatomy_paths.map((p) => p.levels[0]))].sort();
}

function searchableText(ds: DatasetDoc): string {
  return [
    ds.meta.dataset_name, ds.meta.dataset_description,
    ds.meta.organization.join(" "), ds.meta.disease, ds.meta.challenge_series,
  ].join(" \n").toLowerCase();
}

function intersects(have: string[], want: string[]): boolean {
  if (want.length === 0) return true;
  const w = new Set(want);
  return have.some((v) => w.has(v));
}

export function matches(ds: DatasetDoc, recipe: Recipe): { ok: boolean; flags: string[] } {
  const flags: string[] = [];
  if (recipe.dimensions.length > 0) {
    const direct = intersects(ds.dimensions, recipe.dimensions);
    if (!direct) {
      const projected = recipe.allow_3d_as_2d_sources
        && recipe.dimensions.includes("D2") && ds.dimensions.includes("D3");
      if (!projected) return { ok: false, flags: [] };
      flags.push(PROJECTED_3D_FLAG);
    }
  }
  if (!intersects(ds.modalities, recipe.modalities)) return { ok: false, flags: [] };
  if (!intersects(ds.tasks, recipe.tasks)) return { ok: false, flags: [] };
  if (!intersects(anatomyRoots(ds), recipe.anatomy_roots)) return { ok: false, flags: [] };
  if (recipe.licenses_allow.length > 0
      && !recipe.licenses_allow.includes(ds.meta.license)) {
    return { ok: false, flags: [] };
  }
  const total = validTotal(ds) ?? 0;
  if (total < recipe.min_valid_image_n) return { ok: false, flags: [] };
  if (recipe.year_range !== null) {
    if (ds.release_year === null) return { ok: false, flags: [] };
    const [lo, hi] = recipe.year_range;
    if (ds.release_year < lo || ds.release_year > hi) return { ok: false, flags: [] };
  }
  if (recipe.years_any_of !== undefined) {
    if (ds.release_year === null || !recipe.years_any_of.includes(ds.release_year)) {
      return { ok: false, flags: [] };
    }
  }
  if (recipe.label_presence === "labeled_only" && !isLabeled(ds)) {
    return { ok: false, flags: [] };
  }
  if (recipe.label_presence_any_of !== undefined
      && !recipe.label_presence_any_of.includes(ds.meta.label_presence)) {
    return { ok: false, flags: [] };
  }
  if (recipe.text_query
      && !searchableText(ds).includes(recipe.text_query.toLowerCase())) {
    return { ok: false, flags: [] };
  }
  return { ok: true, flags };
}

/** Code-point string comparison, mirroring the engine's sort order. */
export function cmpNames(a: string, b: string): number {
  const as = [...a];
  const bs = [...b];
  const n = Math.min(as.length, bs.length);
  for (let i = 0; i < n; i++) {
    const ca = as[i].codePointAt(0)!;
    const cb = bs[i].codePointAt(0)!;
    if (ca !== cb) return ca - cb;
  }
  return as.length - bs.length;
}

export function evaluateRecipe(recipe: Recipe, manifest: ManifestDoc): Selection {
  const names: string[] = [];
  const flags: Record<string, string[]> = {};
  for (const ds of manifest.datasets) {
    const res = matches(ds, recipe);
    if (res.ok) {
      names.push(ds.meta.dataset_name);
      if (res.flags.length > 0) flags[ds.meta.dataset_name] = res.flags;
    }
  }
  names.sort(cmpNames);
  return { names, flags };
}

export function induceRecipe(state: FacetState): Recipe {
  const recipe = defaultRecipe();
  recipe.text_query = state.text;
  for (const [axis, values] of Object.entries(state.facets)) {
    if (!(FACET_AXES as readonly string[]).includes(axis)) {
      throw new RecipeError(`unknown facet axis '${axis}'`);
    }
    if (values.length === 0) continue;
    if (axis === "dimension") {
      recipe.dimensions = enumList(values, "dimensions",
        (v, f) => normEnum(v, f, DIMENSIONS, DIMENSION_ALIASES));
    } else if (axis === "modality") {
      recipe.modalities = enumList(values, "modalities",
        (v, f) => normEnum(v, f, MODALITIES, MODALITY_ALIASES));
    } else if (axis === "task") {
      recipe.tasks = enumList(values, "tasks",
        (v, f) => normEnum(v, f, TASKS, TASK_ALIASES));
    } else if (axis === "anatomy_root") {
      recipe.anatomy_roots = enumList(values, "anatomy_roots", normRoot);
    } else if (axis === "label_presence") {
      for (const v of values) {
        if (!["labeled", "unlabeled", "mixed"].includes(v)) {
          throw new RecipeError(`unknown label_presence facet value '${v}'`);
        }
      }
      recipe.label_presence_any_of = dedupKeepOrder(values);
    } else if (axis === "year") {
      const years = values.map((v) => {
        const n = Number(v);
        if (!Number.isInteger(n)) {
          throw new RecipeError(`year facet values must be integers: '${v}'`);
        }
        return n;
      });
      recipe.years_any_of = [...new Set(years)].sort((a, b) => a - b);
    }
  }
  return recipe;
}

export function axisValues(ds: DatasetDoc, axis: string): string[] {
  switch (axis) {
    case "dimension": return ds.dimensions;
    case "modality": return ds.modalities;
    case "task": return ds.tasks;
    case "anatomy_root": return anatomyRoots(ds);
    case "label_presence": return [ds.meta.label_presence];
    case "year": return ds.release_year !== null ? [String(ds.release_year)] : [];
    default: throw new Error(`unknown facet axis '${axis}'`);
  }
}

const CANONICAL_ORDER: Record<string, readonly string[]> = {
  modality: MODALITIES,
  task: TASKS,
  anatomy_root: ANATOMY_ROOTS,
  dimension: DIMENSIONS,
};

/** Exclusive attribution: the one group a dataset counts toward. */
export function attributeValue(ds: DatasetDoc, axis: string, recipe?: Recipe): string {
  if (axis === "label_presence") return ds.meta.label_presence;
  const values = new Set(axisValues(ds, axis));
  if (values.size === 0) return "unknown";
  const declared = recipe === undefined ? [] : (
    axis === "modality" ? recipe.modalities :
    axis === "task" ? recipe.tasks :
    axis === "anatomy_root" ? recipe.anatomy_roots :
    axis === "dimension" ? recipe.dimensions : []);
  for (const v of declared) if (values.has(v)) return v;
  for (const v of CANONICAL_ORDER[axis] ?? []) if (values.has(v)) return v;
  return "unknown";
}

export interface DistributionBin {
  value: string;
  dataset_count: number;
  image_sum: number;
}

export function distribution(selection: Selection, manifest: ManifestDoc,
                             axis: string, recipe?: Recipe): DistributionBin[] {
  const selected = new Set(selection.names);
  const counts = new Map<string, number>();
  const sums = new Map<string, number>();
  for (const ds of manifest.datasets) {
    if (!selected.has(ds.meta.dataset_name)) continue;
    const values = axisValues(ds, axis);
    const carried = values.length > 0 ? values : ["unknown"];
    for (const v of carried) counts.set(v, (counts.get(v) ?? 0) + 1);
    const attributed = attributeValue(ds, axis, recipe);
    sums.set(attributed, (sums.get(attributed) ?? 0) + (validTotal(ds) ?? 0));
  }
  return [...counts.keys()].sort(cmpNames).map((value) => ({
    value,
    dataset_count: counts.get(value)!,
    image_sum: sums.get(value) ?? 0,
  }));
}

export function auditRow(ds: DatasetDoc): AuditRow {
  const total = validTotal(ds);
  return {
    name: ds.meta.dataset_name,
    dimension: ds.dimensions.map((d) => DIMENSION_DISPLAY[d] ?? d).join("; "),
    modality: ds.modalities.map((m) => MODALITY_DISPLAY[m] ?? m).join("; "),
    task: ds.tasks.join("; "),
    organ: ds.anatomy_paths.length > 0
      ? ds.anatomy_paths[0].levels[ds.anatomy_paths[0].levels.length - 1]
      : "Unknown",
    images: total !== null ? String(total) : "NA",
    year: ds.release_year !== null ? String(ds.release_year) : "NA",
    organization: ds.meta.organization.join("; "),
    license: ds.meta.license,
    link: ds.meta.homepage_url,
  };
}

export function auditRows(selection: Selection, manifest: ManifestDoc): AuditRow[] {
  const selected = new Set(selection.names);
  return manifest.datasets
    .filter((ds) => selected.has(ds.meta.dataset_name))
    .map(auditRow)
    .sort((a, b) => cmpNames(a.name, b.name));
}

function csvField(value: string): string {
  if (/[",\r\n]/.test(value)) {
    return '"' + value.replaceAll('"', '""') + '"';
  }
  return value;
}

/** Byte-identical to the engine's export_audit. */
export function exportAudit(selection: Selection, manifest: ManifestDoc,
                            format: "csv" | "json"): string {
  const rows = auditRows(selection, manifest);
  if (format === "csv") {
    const lines = [AUDIT_COLUMNS.join(",")];
    for (const row of rows) {
      lines.push(AUDIT_COLUMNS.map((col) => csvField(row[col])).join(","));
    }
    return lines.join("\n") + "\n";
  }
  return JSON.stringify(rows, null, 2) + "\n";
}

/** Ratio at three decimals, half-up, computed on exact integer counts. */
export function formatRatioFromCounts(numerator: number, denominator: number): string {
  const scaled = Math.floor((2000 * numerator + denominator) / (2 * denominator));
  const whole = Math.floor(scaled / 1000);
  const frac = String(scaled % 1000).padStart(3, "0");
  return `${whole}.${frac}`;
}

/** Per-group summaries for the dry-run panel (blueprint preview). */
export function groupSummaries(selection: Selection, manifest: ManifestDoc,
                               axis: string, recipe?: Recipe): GroupSummary[] {
  const selected = new Set(selection.names);
  const groups = new Map<string, DatasetDoc[]>();
  for (const ds of manifest.datasets) {
    if (!selected.has(ds.meta.dataset_name)) continue;
    const key = attributeValue(ds, axis, recipe);
    const bucket = groups.get(key);
    if (bucket === undefined) groups.set(key, [ds]);
    else bucket.push(ds);
  }
  const order = [...(CANONICAL_ORDER[axis] ?? []), "unknown",
                 "labeled", "unlabeled", "mixed"];
  const keys = [...groups.keys()].sort(
    (a, b) => order.indexOf(a) - order.indexOf(b));
  return keys.map((key) => {
    const members = groups.get(key)!;
    const orgs = new Set<string>();
    for (const m of members) for (const t of m.org_tokens) orgs.add(t);
    const labeled = members.filter(isLabeled).length;
    return {
      key,
      n_datasets: members.length,
      sum_image: members.reduce((acc, m) => acc + (validTotal(m) ?? 0), 0),
      n_orgs: orgs.size,
      labeled_ratio: formatRatioFromCounts(labeled, members.length),
    };
  });
}
