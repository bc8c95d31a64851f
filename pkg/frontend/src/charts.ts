/** Dependency-free SVG chart builders: horizontal bars and a doughnut. */

import type { DistributionBin } from "./engine.js";

const PALETTE = [
  "#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948",
  "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac", "#6b8dd6", "#c98a48",
  "#8cd17d", "#d37295", "#499894", "#fabfd2", "#79706e", "#d4a6c8",
];

function esc(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function barChart(bins: DistributionBin[],
                         metric: "dataset_count" | "image_sum",
                         width = 420): string {
  if (bins.length === 0) return `<svg width="${width}" height="24"></svg>`;
  const rowH = 22;
  const labelW = 130;
  const valueW = 70;
  const height = bins.length * rowH + 8;
  const max = Math.max(...bins.map((b) => b[metric]), 1);
  const parts = [
    `<svg width="${width}" height="${height}" viewBox="0 0 ${width} ${height}" xmlns="http://www.w3.org/2000/svg">`,
  ];
  bins.forEach((bin, i) => {
    const y = i * rowH + 4;
    const barW = Math.round(((width - labelW - valueW) * bin[metric]) / max);
    parts.push(
      `<text x="${labelW - 6}" y="${y + 14}" text-anchor="end" font-size="12">${esc(bin.value)}</text>`,
      `<rect x="${labelW}" y="${y + 3}" width="${Math.max(barW, 1)}" height="${rowH - 8}" fill="${PALETTE[i % PALETTE.length]}"/>`,
      `<text x="${labelW + Math.max(barW, 1) + 5}" y="${y + 14}" font-size="11" fill="#555">${bin[metric].toLocaleString("en-US")}</text>`,
    );
  });
  parts.push("</svg>");
  return parts.join("");
}

export function doughnutChart(bins: DistributionBin[],
                              metric: "dataset_count" | "image_sum",
                              size = 190): string {
  const total = bins.reduce((acc, b) => acc + b[metric], 0);
  if (total === 0) return `<svg width="${size}" height="${size}"></svg>`;
  const cx = size / 2;
  const cy = size / 2;
  const r = size / 2 - 6;
  const hole = r * 0.55;
  let angle = -Math.PI / 2;
  const parts = [
    `<svg width="${size}" height="${size}" viewBox="0 0 ${size} ${size}" xmlns="http://www.w3.org/2000/svg">`,
  ];
  bins.forEach((bin, i) => {
    const frac = bin[metric] / total;
    const a0 = angle;
    const a1 = angle + frac * 2 * Math.PI;
    angle = a1;
    if (frac <= 0) return;
    const large = a1 - a0 > Math.PI ? 1 : 0;
    const [x0, y0] = [cx + r * Math.cos(a0), cy + r * Math.sin(a0)];
    const [x1, y1] = [cx + r * Math.cos(a1), cy + r * Math.sin(a1)];
    const [hx1, hy1] = [cx + hole * Math.cos(a1), cy + hole * Math.sin(a1)];
    const [hx0, hy0] = [cx + hole * Math.cos(a0), cy + hole * Math.sin(a0)];
    const d = frac >= 0.999999
      ? `M ${cx + r} ${cy} A ${r} ${r} 0 1 1 ${cx - r} ${cy} A ${r} ${r} 0 1 1 ${cx + r} ${cy}`
      : `M ${x0} ${y0} A ${r} ${r} 0 ${large} 1 ${x1} ${y1} ` +
        `L ${hx1} ${hy1} A ${hole} ${hole} 0 ${large} 0 ${hx0} ${hy0} Z`;
    parts.push(`<path d="${d}" fill="${PALETTE[i % PALETTE.length]}">` +
      `<title>${esc(bin.value)}: ${bin[metric].toLocaleString("en-US")}</title></path>`);
  });
  parts.push("</svg>");
  return parts.join("");
}

export function legend(bins: DistributionBin[]): string {
  return bins.map((bin, i) =>
    `<span class="legend-item"><span class="swatch" style="background:${PALETTE[i % PALETTE.length]}"></span>${esc(bin.value)}</span>`
  ).join(" ");
}
