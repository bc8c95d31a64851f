/** Shapes of the manifest document emitted by the catalog engine. */

export interface CountSpecWire {
  total?: number;
  train?: number;
  val?: number;
  test?: number;
}

export interface DatasetMeta {
  dataset_name: string;
  release_date: string;
  homepage_url: string;
  organization: string[];
  challenge_series: string;
  license: string;
  dataset_description: string;
  modality_primary: string[];
  modality_secondary: string;
  anatomical_structure: string[];
  disease: string;
  data_volume: number | string | CountSpecWire;
  valid_image_n: number | string | CountSpecWire;
  label_presence: string;
  task_type: string[];
  num_classes_per_task: Record<string, unknown>;
  dimension: string[];
  storage_size_gb?: number;
  notes?: string;
}

export interface AnatomyPathDoc {
  levels: string[];
  source_term: string;
}

export interface DatasetDoc {
  meta: DatasetMeta;
  modalities: string[];
  dimensions: string[];
  tasks: string[];
  anatomy_paths: AnatomyPathDoc[];
  clinical_applications: string[];
  release_year: number | null;
  org_tokens: string[];
  annotation_types: string[];
  notes: string;
}

export interface DuplicateEntry {
  kept: string;
  dropped: string;
  reason: string;
}

export interface ManifestDoc {
  version: string;
  vocab_version: string;
  generated_at: string;
  datasets: DatasetDoc[];
  facet_index: Record<string, Record<string, string[]>>;
  duplicate_report: DuplicateEntry[];
}

export interface Recipe {
  dimensions: string[];
  modalities: string[];
  tasks: string[];
  anatomy_roots: string[];
  licenses_allow: string[];
  min_valid_image_n: number;
  year_range: [number, number] | null;
  label_presence: "any" | "labeled_only";
  allow_3d_as_2d_sources: boolean;
  text_query: string;
  /** facet-induction extensions; never read from recipe JSON */
  label_presence_any_of?: string[];
  years_any_of?: number[];
}

export interface Selection {
  names: string[];
  flags: Record<string, string[]>;
}

export interface FacetState {
  facets: Record<string, string[]>;
  text: string;
}

export interface AuditRow {
  name: string;
  dimension: string;
  modality: string;
  task: string;
  organ: string;
  images: string;
  year: string;
  organization: string;
  license: string;
  link: string;
}

export interface GroupSummary {
  key: string;
  n_datasets: number;
  sum_image: number;
  n_orgs: number;
  labeled_ratio: string;
}
