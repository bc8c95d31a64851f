/**
 * Portal state transitions, kept free of DOM so they are unit-testable.
 * Selection always reflects the active mode's inputs; invalid recipe text
 * surfaces as an inline error without discarding the previous selection.
 */

import {
  defaultRecipe,
  evaluateRecipe,
  exportAudit,
  induceRecipe,
  loadManifestDoc,
  parseRecipe,
} from "./engine.js";
import type { FacetState, ManifestDoc, Recipe, Selection } from "./types.js";

export const PAGE_SIZE = 25;

export interface PortalState {
  manifest: ManifestDoc;
  activeMode: "recipe" | "facets";
  recipeText: string;
  facetState: FacetState;
  currentRecipe: Recipe;
  currentSelection: Selection;
  viewPage: number;
  error: string | null;
}

export function defaultRecipeText(): string {
  return JSON.stringify(
    {
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
    },
    null,
    2,
  );
}

export function loadManifest(source: string | ManifestDoc): PortalState {
  const manifest = loadManifestDoc(source);
  const recipe = defaultRecipe();
  return {
    manifest,
    activeMode: "recipe",
    recipeText: defaultRecipeText(),
    facetState: { facets: {}, text: "" },
    currentRecipe: recipe,
    currentSelection: evaluateRecipe(recipe, manifest),
    viewPage: 0,
    error: null,
  };
}

function clampPage(state: PortalState, page: number): number {
  const pages = Math.max(1, Math.ceil(state.currentSelection.names.length / PAGE_SIZE));
  return Math.min(Math.max(page, 0), pages - 1);
}

export function applyRecipeText(state: PortalState, text: string): PortalState {
  let recipe: Recipe;
  try {
    recipe = parseRecipe(text);
  } catch (err) {
    // keep the previous selection; surface the problem inline
    return { ...state, activeMode: "recipe", recipeText: text,
             error: (err as Error).message };
  }
  const selection = evaluateRecipe(recipe, state.manifest);
  const next: PortalState = {
    ...state,
    activeMode: "recipe",
    recipeText: text,
    currentRecipe: recipe,
    currentSelection: selection,
    viewPage: 0,
    error: null,
  };
  next.viewPage = clampPage(next, 0);
  return next;
}

export function applyFacets(state: PortalState, facets: Record<string, string[]>,
                            text: string): PortalState {
  let recipe: Recipe;
  try {
    recipe = induceRecipe({ facets, text });
  } catch (err) {
    return { ...state, activeMode: "facets", facetState: { facets, text },
             error: (err as Error).message };
  }
  const selection = evaluateRecipe(recipe, state.manifest);
  const next: PortalState = {
    ...state,
    activeMode: "facets",
    facetState: { facets, text },
    currentRecipe: recipe,
    currentSelection: selection,
    viewPage: 0,
    error: null,
  };
  next.viewPage = clampPage(next, 0);
  return next;
}

export function setPage(state: PortalState, page: number): PortalState {
  return { ...state, viewPage: clampPage(state, page) };
}

/** Export covers the whole selection, never just the visible page. */
export function exportView(state: PortalState, format: "csv" | "json"): string {
  return exportAudit(state.currentSelection, state.manifest, format);
}
