/** DOM wiring for the discovery portal. All computation lives in engine.ts /
 * portal.ts; this file only renders state and forwards input events. */

import { barChart, doughnutChart, legend } from "./charts.js";
import {
  AUDIT_COLUMNS,
  FACET_AXES,
  auditRows,
  distribution,
  groupSummaries,
} from "./engine.js";
import {
  PAGE_SIZE,
  PortalState,
  applyFacets,
  applyRecipeText,
  exportView,
  loadManifest,
  setPage,
} from "./portal.js";

let state: PortalState | null = null;

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (el === null) throw new Error(`missing element #${id}`);
  return el as T;
};

function download(filename: string, content: string, mime: string): void {
  const blob = new Blob([content], { type: mime });
  const url = URL.createObjectURL(blob);
  const a = document.createElement("a");
  a.href = url;
  a.download = filename;
  document.body.appendChild(a);
  a.click();
  a.remove();
  URL.revokeObjectURL(url);
}

function renderError(message: string | null): void {
  const box = $("error-box");
  box.textContent = message ?? "";
  box.style.display = message ? "block" : "none";
}

function collectFacets(): Record<string, string[]> {
  const facets: Record<string, string[]> = {};
  for (const axis of FACET_AXES) {
    const select = document.getElementById(`facet-${axis}`) as HTMLSelectElement | null;
    if (select === null) continue;
    const values = [...select.selectedOptions].map((o) => o.value);
    if (values.length > 0) facets[axis] = values;
  }
  return facets;
}

function buildFacetControls(): void {
  if (state === null) return;
  const host = $("facet-controls");
  host.innerHTML = "";
  for (const axis of FACET_AXES) {
    const values = Object.keys(state.manifest.facet_index[axis] ?? {});
    if (values.length === 0) continue;
    const wrap = document.createElement("div");
    wrap.className = "facet";
    const label = document.createElement("label");
    label.textContent = axis.replace("_", " ");
    label.htmlFor = `facet-${axis}`;
    const select = document.createElement("select");
    select.id = `facet-${axis}`;
    select.multiple = true;
    select.size = Math.min(values.length, 5);
    for (const value of values) {
      const opt = document.createElement("option");
      opt.value = value;
      opt.textContent = value;
      select.appendChild(opt);
    }
    select.addEventListener("change", onFacetChange);
    wrap.appendChild(label);
    wrap.appendChild(select);
    host.appendChild(wrap);
  }
}

function renderCharts(): void {
  if (state === null) return;
  const axis = ($("chart-axis") as HTMLSelectElement).value;
  const metric = ($("chart-metric") as HTMLSelectElement).value as
    "dataset_count" | "image_sum";
  const bins = distribution(state.currentSelection, state.manifest, axis,
                            state.currentRecipe);
  $("bar-chart").innerHTML = barChart(bins, metric);
  $("doughnut-chart").innerHTML = doughnutChart(bins, metric);
  $("chart-legend").innerHTML = legend(bins);
}

function renderTable(): void {
  if (state === null) return;
  const rows = auditRows(state.currentSelection, state.manifest);
  const start = state.viewPage * PAGE_SIZE;
  const page = rows.slice(start, start + PAGE_SIZE);
  const head = "<tr>" + AUDIT_COLUMNS.map((c) => `<th>${c}</th>`).join("") + "</tr>";
  const body = page.map((row) =>
    "<tr>" + AUDIT_COLUMNS.map((col) => {
      if (col === "link" && row.link.startsWith("http")) {
        const safe = row.link.replace(/"/g, "&quot;");
        return `<td><a href="${safe}" target="_blank" rel="noopener">link</a></td>`;
      }
      const text = row[col].replace(/&/g, "&amp;").replace(/</g, "&lt;");
      return `<td>${text}</td>`;
    }).join("") + "</tr>",
  ).join("");
  $("audit-table").innerHTML = head + body;
  const pages = Math.max(1, Math.ceil(rows.length / PAGE_SIZE));
  $("page-indicator").textContent = `page ${state.viewPage + 1} / ${pages}`;
}

function renderDryRun(): void {
  if (state === null) return;
  const groups = groupSummaries(state.currentSelection, state.manifest,
                                "modality", state.currentRecipe);
  const rows = groups.map((g) =>
    `<tr><td>${g.key}</td><td>${g.n_datasets}</td><td>${g.sum_image.toLocaleString("en-US")}</td>` +
    `<td>${g.n_orgs}</td><td>${g.labeled_ratio}</td></tr>`).join("");
  $("dryrun-table").innerHTML =
    "<tr><th>modality</th><th>n_datasets</th><th>sum_image</th><th>n_orgs</th>" +
    "<th>labeled_ratio</th></tr>" + rows;
}

function renderAll(): void {
  if (state === null) return;
  renderError(state.error);
  $("selection-count").textContent =
    `${state.currentSelection.names.length} of ${state.manifest.datasets.length} datasets selected`;
  const flagged = Object.keys(state.currentSelection.flags).length;
  $("flag-count").textContent = flagged > 0
    ? `${flagged} admitted as projected 3D sources` : "";
  renderCharts();
  renderTable();
  renderDryRun();
}

function onRecipeApply(): void {
  if (state === null) return;
  const text = ($("recipe-text") as HTMLTextAreaElement).value;
  state = applyRecipeText(state, text);
  renderAll();
}

function onFacetChange(): void {
  if (state === null) return;
  const text = ($("facet-text") as HTMLInputElement).value;
  state = applyFacets(state, collectFacets(), text);
  renderAll();
}

function onManifestLoaded(raw: string): void {
  try {
    state = loadManifest(raw);
  } catch (err) {
    renderError((err as Error).message);
    return;
  }
  ($("recipe-text") as HTMLTextAreaElement).value = state.recipeText;
  $("manifest-info").textContent =
    `manifest v${state.manifest.version} · vocab ${state.manifest.vocab_version} · ` +
    `generated ${state.manifest.generated_at}`;
  buildFacetControls();
  renderAll();
}

function switchMode(mode: "recipe" | "facets"): void {
  $("recipe-panel").style.display = mode === "recipe" ? "block" : "none";
  $("facet-panel").style.display = mode === "facets" ? "block" : "none";
  $("tab-recipe").classList.toggle("active", mode === "recipe");
  $("tab-facets").classList.toggle("active", mode === "facets");
  if (mode === "recipe") onRecipeApply();
  else onFacetChange();
}

function init(): void {
  $("tab-recipe").addEventListener("click", () => switchMode("recipe"));
  $("tab-facets").addEventListener("click", () => switchMode("facets"));
  $("recipe-apply").addEventListener("click", onRecipeApply);
  $("facet-text").addEventListener("input", onFacetChange);
  $("chart-axis").addEventListener("change", renderCharts);
  $("chart-metric").addEventListener("change", renderCharts);
  $("page-prev").addEventListener("click", () => {
    if (state !== null) { state = setPage(state, state.viewPage - 1); renderTable(); }
  });
  $("page-next").addEventListener("click", () => {
    if (state !== null) { state = setPage(state, state.viewPage + 1); renderTable(); }
  });
  $("export-csv").addEventListener("click", () => {
    if (state !== null) download("audit.csv", exportView(state, "csv"), "text/csv");
  });
  $("export-json").addEventListener("click", () => {
    if (state !== null) download("audit.json", exportView(state, "json"), "application/json");
  });
  ($("manifest-file") as HTMLInputElement).addEventListener("change", (ev) => {
    const input = ev.target as HTMLInputElement;
    const file = input.files?.[0];
    if (file === undefined) return;
    file.text().then(onManifestLoaded);
  });

  fetch("manifest.json")
    .then((resp) => {
      if (!resp.ok) throw new Error(`HTTP ${resp.status}`);
      return resp.text();
    })
    .then(onManifestLoaded)
    .catch(() => {
      renderError("manifest.json not found next to index.html; " +
                  "use the file picker to load one.");
    });
}

document.addEventListener("DOMContentLoaded", init);
