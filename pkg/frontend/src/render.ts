// Pure SVG/HTML string rendering so every piece is testable without a DOM.

import {
  clusterOfPositions,
  cutAngle,
  dotColor,
  legendEntries,
  pairCombinations,
  pointOnCircle,
  taxonAngle,
} from "./model.js";
import type { ColorMode, NetworkPayload } from "./types.js";

export interface Geometry {
  size: number;
  radius: number;
  dotRadius: number;
}

export const DEFAULT_GEOMETRY: Geometry = { size: 640, radius: 260, dotRadius: 5 };

function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function fmt(value: number): string {
  return value.toFixed(2);
}

/**
 * Circular chord view: taxa as dots in ordering sequence, retained splits as
 * chords between the two gaps they cross (opacity proportional to weight),
 * draggable boundary handles on the cuts, and a legend for the color mode.
 */
export function renderNetwork(
  network: NetworkPayload,
  boundaries: number[],
  colorMode: ColorMode,
  referenceMembers: string[] = [],
  geometry: Geometry = DEFAULT_GEOMETRY,
): string {
  const n = network.n;
  const { size, radius, dotRadius } = geometry;
  const cx = size / 2;
  const cy = size / 2;
  const positionClusters = clusterOfPositions(n, boundaries);
  const reference = new Set(referenceMembers);
  const maxWeight = network.splits.reduce((acc, s) => Math.max(acc, s.weight), 0);

  const chords = network.splits
    .map((split) => {
      const [lo, hi] = split.arc;
      const a = pointOnCircle(cutAngle((lo - 1 + n) % n, n), radius, cx, cy);
      const b = pointOnCircle(cutAngle(hi, n), radius, cx, cy);
      const opacity = maxWeight > 0 ? Math.max(0.05, split.weight / maxWeight) : 0.05;
      return (
        `<line class="chord" data-lo="${lo}" data-hi="${hi}" ` +
        `x1="${fmt(a.x)}" y1="${fmt(a.y)}" x2="${fmt(b.x)}" y2="${fmt(b.y)}" ` +
        `stroke="#334155" stroke-opacity="${opacity.toFixed(4)}"/>`
      );
    })
    .join("\n");

  const dots = network.tickers
    .map((ticker, position) => {
      const p = pointOnCircle(taxonAngle(position, n), radius, cx, cy);
      const label = pointOnCircle(taxonAngle(position, n), radius + 14, cx, cy);
      const fill = dotColor(colorMode, position, network, positionClusters, reference);
      const highlighted =
        colorMode === "byReferenceCluster" && reference.has(ticker) ? " highlighted" : "";
      return (
        `<circle class="taxon${highlighted}" data-ticker="${esc(ticker)}" ` +
        `data-position="${position}" cx="${fmt(p.x)}" cy="${fmt(p.y)}" ` +
        `r="${dotRadius}" fill="${fill}"/>` +
        `<text class="taxon-label" x="${fmt(label.x)}" y="${fmt(label.y)}" ` +
        `font-size="9" text-anchor="middle">${esc(ticker)}</text>`
      );
    })
    .join("\n");

  const handles = boundaries
    .map((cut) => {
      const inner = pointOnCircle(cutAngle(cut, n), radius - 18, cx, cy);
      const outer = pointOnCircle(cutAngle(cut, n), radius + 24, cx, cy);
      return (
        `<line class="boundary-handle" data-cut="${cut}" ` +
        `x1="${fmt(inner.x)}" y1="${fmt(inner.y)}" x2="${fmt(outer.x)}" y2="${fmt(outer.y)}" ` +
        `stroke="#0f172a" stroke-width="3" stroke-linecap="round"/>`
      );
    })
    .join("\n");

  const sizes: Record<number, number> = {};
  for (const cid of positionClusters) sizes[cid] = (sizes[cid] ?? 0) + 1;
  const badges = Object.entries(sizes)
    .map(([cid, count]) => {
      return (
        `<g class="cluster-badge" data-cluster="${cid}" data-size="${count}" ` +
        `data-choose2="${pairCombinations(count)}"></g>`
      );
    })
    .join("\n");

  const legend = legendEntries(colorMode, network, boundaries)
    .map(
      (entry, i) =>
        `<g class="legend-entry" transform="translate(12 ${16 + 18 * i})">` +
        `<rect width="12" height="12" fill="${entry.color}"/>` +
        `<text x="18" y="10" font-size="11">${esc(entry.label)}</text></g>`,
    )
    .join("\n");

  return (
    `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${size} ${size}" ` +
    `data-period="${esc(network.period)}" data-n="${n}" ` +
    `data-candidate-splits="${network.candidate_splits}" ` +
    `data-residual="${network.residual}">\n` +
    `<g class="chords">\n${chords}\n</g>\n` +
    `<g class="taxa">\n${dots}\n</g>\n` +
    `<g class="boundaries">\n${handles}\n</g>\n` +
    `<g class="badges">\n${badges}\n</g>\n` +
    `<g class="legend">\n${legend}\n</g>\n` +
    `</svg>`
  );
}

export function renderErrorBanner(message: string): string {
  return `<div class="error-banner" role="alert">${esc(message)}</div>`;
}

export function countMarkers(svg: string, className: string): number {
  const matches = svg.match(new RegExp(`class="${className}[" ]`, "g"));
  return matches ? matches.length : 0;
}
